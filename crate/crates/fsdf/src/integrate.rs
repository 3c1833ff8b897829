//! Projective TSDF integration of pointclouds by ray casting.

use nalgebra::Vector3;

use crate::grid::VoxelIndex;
use crate::submap::{SdfError, SdfSubmap, SdfVoxel};

/// Weight accumulated per voxel is capped here; further observations keep
/// averaging against the cap.
pub const MAX_WEIGHT: f32 = 1.0e4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub integrated: usize,
    pub rejected_nonfinite: usize,
}

/// Integrates one pointcloud observed from `sensor_origin` (submap frame).
///
/// Every voxel along each ray from the origin out to `surface + truncation`
/// receives a projective-distance update merged by weighted running
/// average (increment 1, capped at [`MAX_WEIGHT`]); free-space voxels
/// beyond the truncation band are updated at `+truncation`. Non-finite
/// points are rejected individually; an empty cloud is a no-op.
pub fn integrate_pointcloud(
    submap: &mut SdfSubmap,
    sensor_origin: &Vector3<f64>,
    points: &[Vector3<f64>],
) -> Result<IntegrationStats, SdfError> {
    if !sensor_origin.iter().all(|v| v.is_finite()) {
        return Err(SdfError::NonFiniteSensorOrigin);
    }
    let truncation = submap.truncation();
    let min_truncation = 2.0 * submap.voxel_size();
    if truncation < min_truncation {
        return Err(SdfError::TruncationTooSmall {
            got: truncation,
            min: min_truncation,
        });
    }

    let mut stats = IntegrationStats::default();
    for point in points {
        if !point.iter().all(|v| v.is_finite()) {
            stats.rejected_nonfinite += 1;
            continue;
        }
        let ray = point - sensor_origin;
        let surface_range = ray.norm();
        if surface_range <= f64::EPSILON {
            stats.rejected_nonfinite += 1;
            continue;
        }
        let dir = ray / surface_range;
        let end = sensor_origin + dir * (surface_range + truncation);
        integrate_ray(submap, sensor_origin, &end, &dir, surface_range, truncation);
        stats.integrated += 1;
    }
    Ok(stats)
}

fn update_voxel(submap: &mut SdfSubmap, idx: VoxelIndex, distance: f64) {
    submap.grid_mut().update(idx, SdfVoxel::default(), |v| {
        let w_old = v.weight;
        let w_new = (w_old + 1.0).min(MAX_WEIGHT);
        v.distance = ((v.distance as f64 * w_old as f64 + distance) / (w_old as f64 + 1.0)) as f32;
        v.weight = w_new;
    });
}

/// Walks the voxels pierced by the segment `start → end` (Amanatides-Woo)
/// and applies the projective update for a surface at `surface_range`
/// along `dir`.
fn integrate_ray(
    submap: &mut SdfSubmap,
    start: &Vector3<f64>,
    end: &Vector3<f64>,
    dir: &Vector3<f64>,
    surface_range: f64,
    truncation: f64,
) {
    let vs = submap.voxel_size();
    let mut current = VoxelIndex::containing(start, vs);
    let last = VoxelIndex::containing(end, vs);

    let step = [
        if dir.x > 0.0 { 1 } else { -1 },
        if dir.y > 0.0 { 1 } else { -1 },
        if dir.z > 0.0 { 1 } else { -1 },
    ];
    // Parameter t along the ray at which the next voxel boundary is crossed,
    // per axis, plus the per-axis step in t.
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    let cur = [current.i, current.j, current.k];
    let s = [start.x, start.y, start.z];
    let d = [dir.x, dir.y, dir.z];
    for a in 0..3 {
        if d[a] != 0.0 {
            let boundary = if step[a] > 0 {
                (cur[a] + 1) as f64 * vs
            } else {
                cur[a] as f64 * vs
            };
            t_max[a] = (boundary - s[a]) / d[a];
            t_delta[a] = vs / d[a].abs();
        }
    }

    let total_len = surface_range + truncation;
    loop {
        // Projective distance at the voxel center: distance from the
        // surface measured along the ray direction, positive on the
        // free-space side.
        let center = current.center(vs);
        let along = (center - start).dot(dir);
        let sdf = surface_range - along;
        if sdf > truncation {
            update_voxel(submap, current, truncation);
        } else if sdf >= -truncation {
            update_voxel(submap, current, sdf);
        }

        if current == last {
            break;
        }
        let axis = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        if t_max[axis] > total_len + vs {
            break; // numeric guard: endpoint voxel missed by degenerate steps
        }
        t_max[axis] += t_delta[axis];
        match axis {
            0 => current.i += step[0],
            1 => current.j += step[1],
            _ => current.k += step[2],
        }
    }
}
