//! Euclidean distance extension of a TSDF through observed space.
//!
//! Wavefront propagation from the zero crossings over the 26-connected
//! stored grid. Each voxel carries the position of its claimed nearest
//! crossing point, so relaxations use true Euclidean distances rather than
//! accumulated chamfer steps; the result stays within one voxel of the
//! brute-force nearest-crossing distance.

use std::collections::BinaryHeap;

use nalgebra::Vector3;

use crate::grid::{SparseGrid, VoxelIndex};
use crate::isosurface::crossings;
use crate::submap::{SdfError, SdfSubmap, SdfVoxel};

struct HeapEntry {
    dist: f64,
    idx: VoxelIndex,
    source: Vector3<f64>,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.idx == other.idx
    }
}
impl Eq for HeapEntry {}

// Min-heap by (distance, index); the index in the ordering makes pop order
// fully deterministic.
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBORS_26: [(i32, i32, i32); 26] = {
    let mut n = [(0, 0, 0); 26];
    let mut count = 0;
    let mut di = -1;
    while di <= 1 {
        let mut dj = -1;
        while dj <= 1 {
            let mut dk = -1;
            while dk <= 1 {
                if !(di == 0 && dj == 0 && dk == 0) {
                    n[count] = (di, dj, dk);
                    count += 1;
                }
                dk += 1;
            }
            dj += 1;
        }
        di += 1;
    }
    n
};

/// Computes the ESDF of `tsdf` on the same stored voxel set.
///
/// The sign of every voxel is preserved from the input; magnitudes become
/// Euclidean distances to the zero-level set, out to `max_distance`.
/// Voxels that are unreachable from any crossing (or farther than
/// `max_distance`) are clamped to `±max_distance`. Weights are copied.
pub fn compute_esdf(tsdf: &SdfSubmap, max_distance: f64) -> Result<SdfSubmap, SdfError> {
    if tsdf.is_empty() {
        return Err(SdfError::EmptyInput);
    }
    let vs = tsdf.voxel_size();

    // Seed every voxel adjacent to a crossing with its exact distance to
    // the crossing point.
    let mut dist: SparseGrid<f64> = SparseGrid::new();
    let mut heap = BinaryHeap::new();
    for c in crossings(tsdf) {
        for idx in [c.a, c.b] {
            let d = (idx.center(vs) - c.point).norm();
            if dist.get(idx).is_none_or(|cur| d < cur) {
                dist.insert(idx, d);
                heap.push(HeapEntry {
                    dist: d,
                    idx,
                    source: c.point,
                });
            }
        }
    }

    while let Some(entry) = heap.pop() {
        match dist.get(entry.idx) {
            Some(cur) if cur < entry.dist => continue, // stale
            _ => {}
        }
        if entry.dist > max_distance {
            continue;
        }
        for (di, dj, dk) in NEIGHBORS_26 {
            let n = entry.idx.offset(di, dj, dk);
            if !tsdf.grid().contains(n) {
                continue;
            }
            let d = (n.center(vs) - entry.source).norm();
            if dist.get(n).is_none_or(|cur| d < cur) {
                dist.insert(n, d);
                heap.push(HeapEntry {
                    dist: d,
                    idx: n,
                    source: entry.source,
                });
            }
        }
    }

    let mut out = SdfSubmap::new(tsdf.id, vs, tsdf.truncation(), tsdf.pose)?;
    for (idx, voxel) in tsdf.grid().iter_sorted() {
        let magnitude = dist.get(idx).unwrap_or(f64::INFINITY).min(max_distance);
        let sign = if (voxel.distance as f64) < 0.0 {
            -1.0
        } else {
            1.0
        };
        out.set(
            idx,
            SdfVoxel {
                distance: (sign * magnitude) as f32,
                weight: voxel.weight,
            },
        );
    }
    Ok(out)
}
