//! Sparse-grid convolution with separable Sobel and Gaussian kernels.
//!
//! All kernels are separable: one tap vector per axis, applied as three
//! sequential 1-D passes. Each pass uses valid-support semantics — an
//! output voxel exists only where every input voxel under the support is
//! stored — so three passes erode the domain by exactly the kernel's
//! support box and never read unstored data.
//!
//! Taps are applied as a sliding dot product: `out(i) = Σ_k t[k]·in(i+k)`.
//! Derivative taps are scaled so a unit ramp (per voxel) responds with
//! exactly 1; gradients and Hessians divide by the voxel size once or
//! twice for metric units.

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{Block, BlockIndex, SparseGrid, VoxelIndex, BLOCK_SIDE, BLOCK_VOXELS};
use crate::submap::{SdfSubmap, SdfVoxel};
use crate::transform::RigidTransform;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FilterError {
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
}

/// Sparse per-voxel scalar layer aligned to a submap grid.
#[derive(Clone, Debug, Default)]
pub struct ScalarField {
    pub grid: SparseGrid<f64>,
}

impl ScalarField {
    pub fn from_submap(submap: &SdfSubmap) -> Self {
        Self {
            grid: submap.grid().par_map(|_, v| v.distance as f64),
        }
    }

    pub fn get(&self, idx: VoxelIndex) -> Option<f64> {
        self.grid.get(idx)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Debug dump: re-wraps the field as a submap (weight 1 everywhere) so
    /// any layer can be written to the archive format for inspection.
    pub fn to_submap(&self, id: u32, voxel_size: f64, pose: RigidTransform) -> SdfSubmap {
        let mut s = SdfSubmap::new(id, voxel_size, 0.0, pose).expect("valid voxel size");
        for (idx, v) in self.grid.iter_sorted() {
            s.set(
                idx,
                SdfVoxel {
                    distance: v as f32,
                    weight: 1.0,
                },
            );
        }
        s
    }
}

/// Sparse per-voxel 3-vector layer (metric gradient).
#[derive(Clone, Debug, Default)]
pub struct VectorField {
    pub grid: SparseGrid<[f64; 3]>,
}

impl VectorField {
    pub fn get(&self, idx: VoxelIndex) -> Option<Vector3<f64>> {
        self.grid.get(idx).map(Vector3::from)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// The six unique Hessian component fields, metric units (1/m).
#[derive(Clone, Debug)]
pub struct HessianFields {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub xz: ScalarField,
    pub yy: ScalarField,
    pub yz: ScalarField,
    pub zz: ScalarField,
}

impl HessianFields {
    /// Symmetric 3×3 Hessian at a voxel, if all components are stored.
    pub fn matrix_at(&self, idx: VoxelIndex) -> Option<nalgebra::Matrix3<f64>> {
        let (xx, xy, xz) = (self.xx.get(idx)?, self.xy.get(idx)?, self.xz.get(idx)?);
        let (yy, yz, zz) = (self.yy.get(idx)?, self.yz.get(idx)?, self.zz.get(idx)?);
        Some(nalgebra::Matrix3::new(
            xx, xy, xz, //
            xy, yy, yz, //
            xz, yz, zz,
        ))
    }
}

/// Separable kernel: centered 1-D taps per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    taps: [Vec<f64>; 3],
}

impl Kernel {
    pub fn identity() -> Self {
        Self {
            taps: [vec![1.0], vec![1.0], vec![1.0]],
        }
    }

    /// Normalized Gaussian with support radius ⌈3σ⌉ per axis.
    pub fn gaussian(sigma: f64) -> Result<Self, FilterError> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(FilterError::NonPositiveSigma(sigma));
        }
        let taps = gaussian_taps(sigma);
        Ok(Self {
            taps: [taps.clone(), taps.clone(), taps],
        })
    }

    /// First-order Sobel derivative along `axis` (0=x, 1=y, 2=z): central
    /// difference on the axis, triangle smoothing on the other two. Unit
    /// ramp response is exactly 1 per voxel.
    pub fn sobel_derivative(axis: usize) -> Self {
        assert!(axis < 3);
        let d = vec![-0.5, 0.0, 0.5];
        let s = vec![0.25, 0.5, 0.25];
        let mut taps = [s.clone(), s.clone(), s];
        taps[axis] = d;
        Self { taps }
    }

    /// Per-axis support radii in voxels.
    pub fn support_radius(&self) -> [usize; 3] {
        [
            self.taps[0].len() / 2,
            self.taps[1].len() / 2,
            self.taps[2].len() / 2,
        ]
    }

    pub fn taps(&self, axis: usize) -> &[f64] {
        &self.taps[axis]
    }

    /// Composition: applying `self` then `other` equals applying the
    /// composed kernel (per-axis tap convolution).
    pub fn compose(&self, other: &Kernel) -> Kernel {
        let conv = |a: &[f64], b: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; a.len() + b.len() - 1];
            for (i, &av) in a.iter().enumerate() {
                for (j, &bv) in b.iter().enumerate() {
                    out[i + j] += av * bv;
                }
            }
            out
        };
        Kernel {
            taps: [
                conv(&self.taps[0], &other.taps[0]),
                conv(&self.taps[1], &other.taps[1]),
                conv(&self.taps[2], &other.taps[2]),
            ],
        }
    }
}

/// Gaussian taps at integer offsets in [−⌈3σ⌉, ⌈3σ⌉], normalized to unit sum.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// One valid-support 1-D pass along `axis`. Output voxels exist only
/// where every in-support input voxel is stored. Block-parallel; the
/// result is independent of scheduling because each output block depends
/// only on the immutable input.
fn convolve_axis(input: &SparseGrid<f64>, axis: usize, taps: &[f64]) -> SparseGrid<f64> {
    debug_assert!(taps.len() % 2 == 1);
    let r = (taps.len() / 2) as i32;
    if r == 0 && (taps.len() == 1 && taps[0] == 1.0) {
        return input.clone();
    }

    let keys: Vec<BlockIndex> = input.sorted_block_keys();
    // In-block along-axis coordinate d+k spans [-r, BLOCK_SIDE-1+r]; map
    // each value of it to (neighbor block offset, local coordinate).
    let span: Vec<(i32, i32)> = (-r..BLOCK_SIDE + r)
        .map(|t| (t.div_euclid(BLOCK_SIDE), t.rem_euclid(BLOCK_SIDE)))
        .collect();
    let max_off = span.iter().map(|(b, _)| b.abs()).max().unwrap_or(0);

    let blocks: Vec<(BlockIndex, Block<f64>)> = keys
        .par_iter()
        .filter_map(|&key| {
            // Fetch the along-axis neighbor blocks once per output block.
            let mut neighbors: Vec<Option<&Block<f64>>> =
                Vec::with_capacity((2 * max_off + 1) as usize);
            for off in -max_off..=max_off {
                let mut nk = key;
                match axis {
                    0 => nk.i += off,
                    1 => nk.j += off,
                    _ => nk.k += off,
                }
                neighbors.push(input.block(nk));
            }
            let center = neighbors[max_off as usize]?;

            let mut out: Option<Block<f64>> = None;
            for lin in 0..BLOCK_VOXELS {
                if !center.is_set(lin) {
                    continue;
                }
                let lin_i = lin as i32;
                let d = match axis {
                    0 => lin_i % BLOCK_SIDE,
                    1 => (lin_i / BLOCK_SIDE) % BLOCK_SIDE,
                    _ => lin_i / (BLOCK_SIDE * BLOCK_SIDE),
                };
                let stride = match axis {
                    0 => 1,
                    1 => BLOCK_SIDE,
                    _ => BLOCK_SIDE * BLOCK_SIDE,
                };
                let base_lin = lin_i - d * stride;

                let mut acc = 0.0;
                let mut valid = true;
                for (t, &tap) in taps.iter().enumerate() {
                    let (boff, local) = span[(d + t as i32) as usize];
                    let block = match neighbors[(boff + max_off) as usize] {
                        Some(b) => b,
                        None => {
                            valid = false;
                            break;
                        }
                    };
                    let nlin = (base_lin + local * stride) as usize;
                    if !block.is_set(nlin) {
                        valid = false;
                        break;
                    }
                    acc += tap * block.value_unchecked(nlin);
                }
                if valid {
                    out.get_or_insert_with(Block::new).set(lin, acc);
                }
            }
            out.map(|b| (key, b))
        })
        .collect();

    let mut grid = SparseGrid::new();
    for (key, block) in blocks {
        grid.insert_block(key, block);
    }
    grid
}

/// Discrete convolution with valid-support semantics: the output is
/// defined exactly on the erosion of the input domain by the kernel's
/// support box.
pub fn convolve_valid(field: &ScalarField, kernel: &Kernel) -> ScalarField {
    let mut grid = convolve_axis(&field.grid, 0, kernel.taps(0));
    grid = convolve_axis(&grid, 1, kernel.taps(1));
    grid = convolve_axis(&grid, 2, kernel.taps(2));
    ScalarField { grid }
}

/// Gaussian-blurred copy of the submap's distance field. Computed once and
/// shared by the gradient and Hessian paths.
pub fn blur_sdf(sdf: &SdfSubmap, sigma: f64) -> Result<ScalarField, FilterError> {
    let kernel = Kernel::gaussian(sigma)?;
    Ok(convolve_valid(&ScalarField::from_submap(sdf), &kernel))
}

/// Sobel gradient of an already blurred field, metric units (per meter of
/// position; the field's own units are preserved).
pub fn gradient_from_blurred(blurred: &ScalarField, voxel_size: f64) -> VectorField {
    let per_axis: Vec<SparseGrid<f64>> = (0..3)
        .map(|axis| {
            let k = Kernel::sobel_derivative(axis);
            convolve_valid(blurred, &k).grid
        })
        .collect();

    // The three components share one erosion, so their domains coincide;
    // merge block by block in parallel.
    let keys = per_axis[0].sorted_block_keys();
    let blocks: Vec<(BlockIndex, Block<[f64; 3]>)> = keys
        .par_iter()
        .filter_map(|&key| {
            let bx = per_axis[0].block(key)?;
            let by = per_axis[1].block(key)?;
            let bz = per_axis[2].block(key)?;
            let mut out = Block::new();
            let mut any = false;
            for lin in bx.occupied() {
                if !(by.is_set(lin) && bz.is_set(lin)) {
                    continue;
                }
                out.set(
                    lin,
                    [
                        bx.value_unchecked(lin) / voxel_size,
                        by.value_unchecked(lin) / voxel_size,
                        bz.value_unchecked(lin) / voxel_size,
                    ],
                );
                any = true;
            }
            any.then_some((key, out))
        })
        .collect();
    let mut grid = SparseGrid::new();
    for (key, block) in blocks {
        grid.insert_block(key, block);
    }
    VectorField { grid }
}

/// Composed second derivatives of an already blurred field, metric units.
/// Mixed components use the canonical ordering Dₐ∘D_b with a ≤ b.
pub fn hessian_from_blurred(blurred: &ScalarField, voxel_size: f64) -> HessianFields {
    let vs2 = voxel_size * voxel_size;
    let component = |a: usize, b: usize| -> ScalarField {
        let k = Kernel::sobel_derivative(a).compose(&Kernel::sobel_derivative(b));
        let raw = convolve_valid(blurred, &k);
        ScalarField {
            grid: raw.grid.par_map(|_, v| v / vs2),
        }
    };
    HessianFields {
        xx: component(0, 0),
        xy: component(0, 1),
        xz: component(0, 2),
        yy: component(1, 1),
        yz: component(1, 2),
        zz: component(2, 2),
    }
}

/// Blurred Sobel gradient of the SDF: per axis g = D_axis * G * Φ, divided
/// by the voxel size for metric units.
pub fn compute_gradient(sdf: &SdfSubmap, sigma_grad: f64) -> Result<VectorField, FilterError> {
    let blurred = blur_sdf(sdf, sigma_grad)?;
    Ok(gradient_from_blurred(&blurred, sdf.voxel_size()))
}

/// Blurred Sobel Hessian of the SDF: h_ab = Dₐ * D_b * G * Φ, divided by
/// voxel_size² for metric units.
pub fn compute_hessian(sdf: &SdfSubmap, sigma_grad: f64) -> Result<HessianFields, FilterError> {
    let blurred = blur_sdf(sdf, sigma_grad)?;
    Ok(hessian_from_blurred(&blurred, sdf.voxel_size()))
}
