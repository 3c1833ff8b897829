//! Spatially-hashed sparse voxel storage.
//!
//! Voxels are grouped into 8³ blocks; blocks live in a hash map keyed by
//! block coordinates and store their 512 voxels densely with an occupancy
//! bitmask. This keeps neighborhood reads cache-friendly for the separable
//! convolution passes while the scene itself stays sparse.

use std::collections::HashMap;

/// Voxels per block edge.
pub const BLOCK_SIDE: i32 = 8;
/// Voxels per block (8³).
pub const BLOCK_VOXELS: usize = 512;

/// Integer grid coordinates of a voxel.
///
/// The metric center of a voxel is `voxel_size * (index + 0.5)` per
/// component; the voxel spans `[voxel_size * index, voxel_size * (index+1))`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub i: i32,
    pub j: i32,
    pub k: i32,
}

impl VoxelIndex {
    pub fn new(i: i32, j: i32, k: i32) -> Self {
        Self { i, j, k }
    }

    /// Metric center of this voxel.
    pub fn center(self, voxel_size: f64) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(
            voxel_size * (self.i as f64 + 0.5),
            voxel_size * (self.j as f64 + 0.5),
            voxel_size * (self.k as f64 + 0.5),
        )
    }

    /// Index of the voxel containing a metric point.
    pub fn containing(p: &nalgebra::Vector3<f64>, voxel_size: f64) -> Self {
        Self {
            i: (p.x / voxel_size).floor() as i32,
            j: (p.y / voxel_size).floor() as i32,
            k: (p.z / voxel_size).floor() as i32,
        }
    }

    pub fn offset(self, di: i32, dj: i32, dk: i32) -> Self {
        Self::new(self.i + di, self.j + dj, self.k + dk)
    }

    /// Packs the index into a 64-bit key, bijective for |component| < 2²⁰.
    pub fn to_key(self) -> u64 {
        const OFF: i64 = 1 << 20;
        let a = (self.i as i64 + OFF) as u64;
        let b = (self.j as i64 + OFF) as u64;
        let c = (self.k as i64 + OFF) as u64;
        (a << 42) | (b << 21) | c
    }

    /// Inverse of [`VoxelIndex::to_key`].
    pub fn from_key(key: u64) -> Self {
        const MASK: u64 = (1 << 21) - 1;
        const OFF: i64 = 1 << 20;
        Self {
            i: (((key >> 42) & MASK) as i64 - OFF) as i32,
            j: (((key >> 21) & MASK) as i64 - OFF) as i32,
            k: ((key & MASK) as i64 - OFF) as i32,
        }
    }
}

/// Coordinates of an 8³ block.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct BlockIndex {
    pub i: i32,
    pub j: i32,
    pub k: i32,
}

/// Splits a voxel index into its block index and the linear in-block offset
/// (x-fastest order).
pub fn split_index(idx: VoxelIndex) -> (BlockIndex, usize) {
    let (bi, di) = (idx.i.div_euclid(BLOCK_SIDE), idx.i.rem_euclid(BLOCK_SIDE));
    let (bj, dj) = (idx.j.div_euclid(BLOCK_SIDE), idx.j.rem_euclid(BLOCK_SIDE));
    let (bk, dk) = (idx.k.div_euclid(BLOCK_SIDE), idx.k.rem_euclid(BLOCK_SIDE));
    (
        BlockIndex {
            i: bi,
            j: bj,
            k: bk,
        },
        (di + BLOCK_SIDE * (dj + BLOCK_SIDE * dk)) as usize,
    )
}

/// Inverse of [`split_index`].
pub fn join_index(block: BlockIndex, lin: usize) -> VoxelIndex {
    let lin = lin as i32;
    let di = lin % BLOCK_SIDE;
    let dj = (lin / BLOCK_SIDE) % BLOCK_SIDE;
    let dk = lin / (BLOCK_SIDE * BLOCK_SIDE);
    VoxelIndex::new(
        block.i * BLOCK_SIDE + di,
        block.j * BLOCK_SIDE + dj,
        block.k * BLOCK_SIDE + dk,
    )
}

/// One dense 8³ block with an occupancy bitmask.
#[derive(Clone, Debug)]
pub struct Block<T> {
    mask: [u64; 8],
    values: Vec<T>,
}

impl<T: Copy + Default> Block<T> {
    pub fn new() -> Self {
        Self {
            mask: [0; 8],
            values: vec![T::default(); BLOCK_VOXELS],
        }
    }

    #[inline]
    pub fn is_set(&self, lin: usize) -> bool {
        self.mask[lin >> 6] & (1u64 << (lin & 63)) != 0
    }

    #[inline]
    pub fn get(&self, lin: usize) -> Option<T> {
        if self.is_set(lin) {
            Some(self.values[lin])
        } else {
            None
        }
    }

    /// Reads without the occupancy check; only meaningful if `is_set(lin)`.
    #[inline]
    pub fn value_unchecked(&self, lin: usize) -> T {
        self.values[lin]
    }

    pub fn set(&mut self, lin: usize, value: T) {
        self.mask[lin >> 6] |= 1u64 << (lin & 63);
        self.values[lin] = value;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().map(|m| m.count_ones() as usize).sum()
    }

    /// Occupied linear offsets in ascending order.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..BLOCK_VOXELS).filter(|&lin| self.is_set(lin))
    }
}

impl<T: Copy + Default> Default for Block<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Sparse voxel grid: hash map of dense 8³ blocks.
///
/// Mutation happens during construction only; all downstream passes read
/// concurrently. Iteration order of the underlying map is unspecified —
/// order-sensitive consumers must use [`SparseGrid::sorted_indices`] or
/// [`SparseGrid::sorted_block_keys`].
#[derive(Clone, Debug)]
pub struct SparseGrid<T> {
    blocks: HashMap<BlockIndex, Block<T>>,
    len: usize,
}

impl<T: Copy + Default> SparseGrid<T> {
    pub fn new() -> Self {
        Self {
            blocks: HashMap::new(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, idx: VoxelIndex) -> Option<T> {
        let (block, lin) = split_index(idx);
        self.blocks.get(&block).and_then(|b| b.get(lin))
    }

    #[inline]
    pub fn contains(&self, idx: VoxelIndex) -> bool {
        let (block, lin) = split_index(idx);
        self.blocks.get(&block).is_some_and(|b| b.is_set(lin))
    }

    pub fn insert(&mut self, idx: VoxelIndex, value: T) {
        let (block, lin) = split_index(idx);
        let b = self.blocks.entry(block).or_default();
        if !b.is_set(lin) {
            self.len += 1;
        }
        b.set(lin, value);
    }

    /// Mutates an existing value or inserts `default` first.
    pub fn update(&mut self, idx: VoxelIndex, default: T, f: impl FnOnce(&mut T)) {
        let (block, lin) = split_index(idx);
        let b = self.blocks.entry(block).or_default();
        if !b.is_set(lin) {
            self.len += 1;
            b.set(lin, default);
        }
        let mut v = b.value_unchecked(lin);
        f(&mut v);
        b.set(lin, v);
    }

    pub fn blocks(&self) -> &HashMap<BlockIndex, Block<T>> {
        &self.blocks
    }

    pub fn block(&self, key: BlockIndex) -> Option<&Block<T>> {
        self.blocks.get(&key)
    }

    pub(crate) fn insert_block(&mut self, key: BlockIndex, block: Block<T>) {
        self.len += block.count();
        debug_assert!(!self.blocks.contains_key(&key));
        self.blocks.insert(key, block);
    }

    /// Block keys in ascending order. Deterministic.
    pub fn sorted_block_keys(&self) -> Vec<BlockIndex> {
        let mut keys: Vec<_> = self.blocks.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    /// All stored voxel indices in ascending (block, in-block) order.
    /// Deterministic across runs and thread counts.
    pub fn sorted_indices(&self) -> Vec<VoxelIndex> {
        let mut out = Vec::with_capacity(self.len);
        for key in self.sorted_block_keys() {
            let block = &self.blocks[&key];
            out.extend(block.occupied().map(|lin| join_index(key, lin)));
        }
        out
    }

    /// Deterministic iteration over (index, value) pairs.
    pub fn iter_sorted(&self) -> impl Iterator<Item = (VoxelIndex, T)> + '_ {
        self.sorted_block_keys().into_iter().flat_map(move |key| {
            let block = &self.blocks[&key];
            block
                .occupied()
                .map(move |lin| (join_index(key, lin), block.value_unchecked(lin)))
                .collect::<Vec<_>>()
        })
    }

    /// Unordered iteration; use only where order cannot matter.
    pub fn iter(&self) -> impl Iterator<Item = (VoxelIndex, T)> + '_ {
        self.blocks.iter().flat_map(|(key, block)| {
            block
                .occupied()
                .map(move |lin| (join_index(*key, lin), block.value_unchecked(lin)))
        })
    }
}

impl<T: Copy + Default + Send + Sync> SparseGrid<T> {
    /// Block-parallel per-voxel transform preserving the occupancy layout.
    /// Deterministic: the result does not depend on scheduling.
    pub fn par_map<U, F>(&self, f: F) -> SparseGrid<U>
    where
        U: Copy + Default + Send,
        F: Fn(VoxelIndex, T) -> U + Sync,
    {
        use rayon::prelude::*;
        let keys = self.sorted_block_keys();
        let blocks: Vec<(BlockIndex, Block<U>)> = keys
            .par_iter()
            .map(|&key| {
                let block = &self.blocks[&key];
                let mut out = Block::new();
                for lin in block.occupied() {
                    out.set(lin, f(join_index(key, lin), block.value_unchecked(lin)));
                }
                (key, out)
            })
            .collect();
        let mut grid = SparseGrid::new();
        for (key, block) in blocks {
            grid.insert_block(key, block);
        }
        grid
    }
}

impl<T: Copy + Default> Default for SparseGrid<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Copy + Default> FromIterator<(VoxelIndex, T)> for SparseGrid<T> {
    fn from_iter<I: IntoIterator<Item = (VoxelIndex, T)>>(iter: I) -> Self {
        let mut grid = Self::new();
        for (idx, v) in iter {
            grid.insert(idx, v);
        }
        grid
    }
}
