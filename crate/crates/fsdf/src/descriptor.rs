//! Spherical gradient-orientation histograms in the feature frame.
//!
//! Gradients inside the support are rotated into the LRF, converted to
//! spherical coordinates and soft-binned (bilinear over bin centers,
//! azimuth wrapping, polar clamped at the poles). Bins are normalized by
//! the valid-voxel count and by their solid angle. Two augmentation slots
//! follow the histogram: the Gaussian-weighted mean SDF under the support
//! and the curvature class.

use std::f64::consts::PI;

use nalgebra::Vector3;
use thiserror::Error;

use crate::grid::VoxelIndex;
use crate::keypoint::Keypoint;
use crate::lrf::{curvature_class, CurvatureSource, Lrf, SupportSample};
use crate::submap::SdfSubmap;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DescriptorError {
    #[error("descriptor lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
}

/// Parameters of the description stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescriptorParams {
    /// Angular divisions per 180°; histogram is 2·n_div × n_div bins.
    pub n_div: usize,
    pub alpha_dist: f64,
    pub alpha_class: f64,
    pub curvature_source: CurvatureSource,
}

impl Default for DescriptorParams {
    fn default() -> Self {
        Self {
            n_div: 10,
            alpha_dist: 1e-7,
            alpha_class: 1e-5,
            curvature_source: CurvatureSource::default(),
        }
    }
}

impl DescriptorParams {
    /// Flat descriptor length: 2·n_div² + 2.
    pub fn descriptor_len(&self) -> usize {
        2 * self.n_div * self.n_div + 2
    }
}

/// Flat descriptor: histogram (azimuth-major), then α_dist·b_dist and
/// α_class·b_class.
#[derive(Clone, Debug, PartialEq)]
pub struct Descriptor {
    pub values: Vec<f64>,
    /// Keypoint this descriptor belongs to.
    pub keypoint: VoxelIndex,
    /// Keypoint position (submap frame, meters); carried for registration.
    pub position: Vector3<f64>,
    /// Ordinal of the LRF among the keypoint's emitted frames.
    pub lrf_ordinal: u8,
}

/// Deposits `magnitude` at continuous bin coordinate `u` (in units of bins,
/// relative to the first bin center) into `bins` of length `n`, wrapping.
fn deposit_wrapped(bins: &mut [(usize, f64); 2], u: f64, n: usize) {
    let i0 = u.floor();
    let frac = u - i0;
    let i0 = i0 as i64;
    let n = n as i64;
    let a = i0.rem_euclid(n) as usize;
    let b = (i0 + 1).rem_euclid(n) as usize;
    *bins = [(a, 1.0 - frac), (b, frac)];
}

/// Same for a clamped axis: mass outside the first/last bin centers goes
/// entirely to the boundary bin.
fn deposit_clamped(bins: &mut [(usize, f64); 2], u: f64, n: usize) {
    if u <= 0.0 {
        *bins = [(0, 1.0), (0, 0.0)];
    } else if u >= (n - 1) as f64 {
        *bins = [(n - 1, 1.0), (n - 1, 0.0)];
    } else {
        let i0 = u.floor() as usize;
        let frac = u - i0 as f64;
        *bins = [(i0, 1.0 - frac), (i0 + 1, frac)];
    }
}

/// Solid-angle measure a polar bin actually collects: the integral of its
/// angular weight function (tent, clamped at the poles) against cos θ dθ.
/// Normalizing by this keeps an isotropically uniform gradient density
/// flat across bins; the naive span `sin θ_hi − sin θ_lo` over-counts the
/// pole bins, which also absorb the clamped caps. Multiply by the azimuth
/// bin width Δφ for the full per-bin measure (azimuth tents each collect
/// exactly Δφ).
pub fn polar_bin_measure(n_div: usize, p: usize) -> f64 {
    debug_assert!(p < n_div);
    let delta = PI / n_div as f64;
    let center = -PI / 2.0 + (p as f64 + 0.5) * delta;
    let tent_even = (1.0 - delta.cos()) / delta;
    let tent_odd = (delta - delta.sin()) / delta;
    if p == 0 {
        // Full cap below the first center, falling tent above it.
        (center.sin() + 1.0) + center.cos() * tent_even - center.sin() * tent_odd
    } else if p == n_div - 1 {
        (1.0 - center.sin()) + center.cos() * tent_even + center.sin() * tent_odd
    } else {
        2.0 * center.cos() * tent_even
    }
}

/// Builds the descriptor for one (keypoint, LRF) pair.
///
/// `samples` must come from `collect_support` for this keypoint; `sdf` is
/// the submap the support was gathered on (for the b_dist slot). If every
/// gradient in the support has vanishing magnitude the histogram is all
/// zero but the augmented slots are still populated.
pub fn describe(
    samples: &[SupportSample],
    lrf: &Lrf,
    sdf: &SdfSubmap,
    kp: &Keypoint,
    params: &DescriptorParams,
) -> Descriptor {
    debug_assert!(params.n_div >= 2);
    let n_div = params.n_div;
    let n_azimuth = 2 * n_div;
    let d_phi = 2.0 * PI / n_azimuth as f64;
    let d_theta = PI / n_div as f64;

    let mut hist = vec![0.0; n_azimuth * n_div];
    let mut az_bins = [(0usize, 0.0f64); 2];
    let mut po_bins = [(0usize, 0.0f64); 2];
    for sample in samples {
        let g = lrf.rotation * sample.gradient;
        let mag = g.norm();
        if mag < 1e-12 {
            continue; // spherical angles undefined
        }
        let azimuth = g.y.atan2(g.x); // [-π, π]
        let polar = (g.z / mag).clamp(-1.0, 1.0).asin(); // [-π/2, π/2]

        // Continuous bin coordinates relative to the first bin center at
        // lo + Δ/2.
        let u_az = (azimuth + PI) / d_phi - 0.5;
        let u_po = (polar + PI / 2.0) / d_theta - 0.5;
        deposit_wrapped(&mut az_bins, u_az, n_azimuth);
        deposit_clamped(&mut po_bins, u_po, n_div);
        for &(a, wa) in &az_bins {
            for &(p, wp) in &po_bins {
                hist[a * n_div + p] += mag * wa * wp;
            }
        }
    }

    // Normalize by valid-voxel count and per-bin collection measure.
    let count = samples.len().max(1) as f64;
    for p in 0..n_div {
        let measure = d_phi * polar_bin_measure(n_div, p);
        for a in 0..n_azimuth {
            hist[a * n_div + p] /= count * measure;
        }
    }

    // Gaussian-weighted mean SDF under the support.
    let mut phi_sum = 0.0;
    let mut w_sum = 0.0;
    for sample in samples {
        let idx = kp
            .index
            .offset(sample.offset[0], sample.offset[1], sample.offset[2]);
        if let Some(v) = sdf.get(idx) {
            phi_sum += sample.gauss_weight * v.distance as f64;
            w_sum += sample.gauss_weight;
        }
    }
    let b_dist = if w_sum > 0.0 { phi_sum / w_sum } else { 0.0 };
    let b_class = curvature_class(kp, lrf, params.curvature_source) as f64;

    let mut values = hist;
    values.push(params.alpha_dist * b_dist);
    values.push(params.alpha_class * b_class);
    Descriptor {
        values,
        keypoint: kp.index,
        position: kp.position,
        lrf_ordinal: 0,
    }
}

/// Euclidean distance over the full descriptor vector.
pub fn descriptor_distance(a: &Descriptor, b: &Descriptor) -> Result<f64, DescriptorError> {
    if a.values.len() != b.values.len() {
        return Err(DescriptorError::LengthMismatch {
            a: a.values.len(),
            b: b.values.len(),
        });
    }
    Ok(a.values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
