//! SDF submaps: sparse voxel grids carrying distance and weight.

use nalgebra::Vector3;
use thiserror::Error;

use crate::grid::{SparseGrid, VoxelIndex};
use crate::transform::RigidTransform;

/// Errors from submap construction and the SDF operations built on it.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum SdfError {
    #[error("voxel size must be positive, got {0}")]
    NonPositiveVoxelSize(f64),
    #[error("truncation must be at least 2 voxel sizes ({min}), got {got}")]
    TruncationTooSmall { got: f64, min: f64 },
    #[error("sensor origin is not finite")]
    NonFiniteSensorOrigin,
    #[error("operation requires a nonempty submap")]
    EmptyInput,
    #[error("all stored distances share one sign; no zero-level set")]
    NoSurface,
    #[error("submap pose is not a valid rigid transform")]
    InvalidPose,
}

/// Per-voxel payload: signed distance (meters) and observation weight.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SdfVoxel {
    pub distance: f32,
    pub weight: f32,
}

/// Trilinear sample of the field at a non-grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdfSample {
    pub distance: f64,
    pub weight: f64,
}

/// A spatially sparse SDF over a voxel grid, with an origin pose.
///
/// Only observed voxels are stored; membership defines the observed set.
/// Positions handed to [`SdfSubmap::sample_trilinear`] are expressed in the
/// submap frame. Submaps are mutated only while being built; afterwards
/// they are shared read-only across threads.
#[derive(Clone, Debug)]
pub struct SdfSubmap {
    pub id: u32,
    voxel_size: f64,
    truncation: f64,
    /// Pose of the submap frame S in the world frame W (`p_W = T_WS p_S`).
    pub pose: RigidTransform,
    grid: SparseGrid<SdfVoxel>,
}

impl SdfSubmap {
    pub fn new(
        id: u32,
        voxel_size: f64,
        truncation: f64,
        pose: RigidTransform,
    ) -> Result<Self, SdfError> {
        if voxel_size <= 0.0 || !voxel_size.is_finite() {
            return Err(SdfError::NonPositiveVoxelSize(voxel_size));
        }
        if !pose.is_valid(1e-9) {
            return Err(SdfError::InvalidPose);
        }
        Ok(Self {
            id,
            voxel_size,
            truncation,
            pose,
            grid: SparseGrid::new(),
        })
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn grid(&self) -> &SparseGrid<SdfVoxel> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn get(&self, idx: VoxelIndex) -> Option<SdfVoxel> {
        self.grid.get(idx)
    }

    pub fn set(&mut self, idx: VoxelIndex, voxel: SdfVoxel) {
        self.grid.insert(idx, voxel);
    }

    pub(crate) fn grid_mut(&mut self) -> &mut SparseGrid<SdfVoxel> {
        &mut self.grid
    }

    /// Metric center of a voxel in the submap frame.
    pub fn voxel_center(&self, idx: VoxelIndex) -> Vector3<f64> {
        idx.center(self.voxel_size)
    }

    /// Stored voxel indices in deterministic order.
    pub fn sorted_indices(&self) -> Vec<VoxelIndex> {
        self.grid.sorted_indices()
    }

    /// Trilinear interpolation over the 8 surrounding voxel centers.
    ///
    /// Returns `None` (unobserved) if any contributing neighbor is
    /// missing; callers count those toward overlap denominators. Corners
    /// whose trilinear weight is exactly zero (points on the interpolation
    /// lattice, e.g. voxel centers) are not required, so stored centers
    /// always reproduce their stored values.
    pub fn sample_trilinear(&self, p: &Vector3<f64>) -> Option<SdfSample> {
        let u = p / self.voxel_size - Vector3::new(0.5, 0.5, 0.5);
        let base = VoxelIndex::new(u.x.floor() as i32, u.y.floor() as i32, u.z.floor() as i32);
        let f = Vector3::new(u.x - u.x.floor(), u.y - u.y.floor(), u.z - u.z.floor());

        let mut distance = 0.0;
        let mut weight = 0.0;
        for corner in 0..8u8 {
            let (di, dj, dk) = (
                (corner & 1) as i32,
                ((corner >> 1) & 1) as i32,
                ((corner >> 2) & 1) as i32,
            );
            let w = (if di == 1 { f.x } else { 1.0 - f.x })
                * (if dj == 1 { f.y } else { 1.0 - f.y })
                * (if dk == 1 { f.z } else { 1.0 - f.z });
            if w == 0.0 {
                continue;
            }
            let v = self.grid.get(base.offset(di, dj, dk))?;
            distance += w * v.distance as f64;
            weight += w * v.weight as f64;
        }
        Some(SdfSample { distance, weight })
    }
}
