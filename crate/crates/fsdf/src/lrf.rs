//! Local reference frames from the gradient structure tensor.
//!
//! Keypoints are generally not on surfaces, so normal-based frames do not
//! apply; instead the frame axes are the eigenvectors of the
//! Gaussian-weighted gradient outer-product sum over the descriptor
//! support. Axis signs come from the projection score s; when |s| falls
//! inside the ambiguous band, both signs are emitted and the keypoint is
//! described once per frame.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::eigen::sym_eigen3;
use crate::filter::VectorField;
use crate::keypoint::Keypoint;

/// Fewest support samples accepted for a meaningful tensor.
pub const MIN_SUPPORT_SAMPLES: usize = 32;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LrfError {
    #[error("only {found} support samples (need {MIN_SUPPORT_SAMPLES})")]
    InsufficientSupport { found: usize },
    #[error("structure tensor eigenvalues too close; frame directions unstable")]
    DegenerateTensor,
}

/// One gradient voxel inside a keypoint's descriptor support.
#[derive(Clone, Copy, Debug)]
pub struct SupportSample {
    /// Integer offset from the keypoint, voxels.
    pub offset: [i32; 3],
    /// Gaussian-weighted gradient (weight already applied).
    pub gradient: Vector3<f64>,
    pub gauss_weight: f64,
}

impl SupportSample {
    pub fn offset_vector(&self) -> Vector3<f64> {
        Vector3::new(
            self.offset[0] as f64,
            self.offset[1] as f64,
            self.offset[2] as f64,
        )
    }
}

/// A local reference frame: rows of `rotation` are the axes a1, a2, a3,
/// so `g_F = rotation * g_S`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lrf {
    pub rotation: Matrix3<f64>,
    /// Structure-tensor eigenvalues, descending.
    pub eigenvalues: [f64; 3],
    /// How many LRFs the keypoint emitted (1, 2 or 4).
    pub ambiguity_count: u8,
}

/// Gathers all stored gradient voxels within Euclidean radius `r_f`
/// (voxels) of the keypoint, weighting each gradient by
/// `exp(−‖offset‖² / 2σ²)`.
pub fn collect_support(
    gradients: &VectorField,
    kp: &Keypoint,
    r_f: f64,
    sigma_desc: f64,
) -> Result<Vec<SupportSample>, LrfError> {
    debug_assert!(r_f > 0.0 && sigma_desc > 0.0);
    let r = r_f.floor() as i32;
    let r_sq = r_f * r_f;
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma_desc * sigma_desc);
    let mut samples = Vec::new();
    for di in -r..=r {
        for dj in -r..=r {
            for dk in -r..=r {
                let norm_sq = (di * di + dj * dj + dk * dk) as f64;
                if norm_sq > r_sq {
                    continue;
                }
                let idx = kp.index.offset(di, dj, dk);
                let Some(raw) = gradients.get(idx) else {
                    continue;
                };
                let gauss_weight = (-norm_sq * inv_two_sigma_sq).exp();
                samples.push(SupportSample {
                    offset: [di, dj, dk],
                    gradient: raw * gauss_weight,
                    gauss_weight,
                });
            }
        }
    }
    if samples.len() < MIN_SUPPORT_SAMPLES {
        return Err(LrfError::InsufficientSupport {
            found: samples.len(),
        });
    }
    Ok(samples)
}

/// Sum of outer products g gᵀ of the weighted gradients. Positive
/// semidefinite by construction.
pub fn structure_tensor(samples: &[SupportSample]) -> Matrix3<f64> {
    let mut s = Matrix3::zeros();
    for sample in samples {
        let g = &sample.gradient;
        s += g * g.transpose();
    }
    s
}

/// Projection score s = Σ g·v / Σ |g·v| ∈ [−1, 1]; zero when the
/// denominator vanishes (fully ambiguous).
fn sign_score(samples: &[SupportSample], v: &Vector3<f64>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for sample in samples {
        let p = sample.gradient.dot(v);
        num += p;
        den += p.abs();
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn axis_candidates(v: Vector3<f64>, s: f64, k_axis: f64) -> Vec<Vector3<f64>> {
    if s >= k_axis {
        vec![v]
    } else if s <= -k_axis {
        vec![-v]
    } else {
        vec![v, -v]
    }
}

/// Eigen-decomposes the structure tensor and emits 1, 2, or 4 frames
/// depending on the sign ambiguity of the first and third axes. The middle
/// axis completes each right-handed triple (a2 = a3 × a1).
pub fn assign_lrfs(
    tensor: &Matrix3<f64>,
    samples: &[SupportSample],
    k_axis: f64,
) -> Result<Vec<Lrf>, LrfError> {
    debug_assert!(k_axis > 0.0 && k_axis < 1.0);
    let eig = sym_eigen3(tensor);
    let [l1, l2, l3] = eig.values;
    if l1 <= 0.0 || l1 - l2 < 1e-9 * l1 || l2 - l3 < 1e-9 * l1 {
        return Err(LrfError::DegenerateTensor);
    }

    let s1 = sign_score(samples, &eig.vectors[0]);
    let s3 = sign_score(samples, &eig.vectors[2]);
    let a1s = axis_candidates(eig.vectors[0], s1, k_axis);
    let a3s = axis_candidates(eig.vectors[2], s3, k_axis);
    let count = (a1s.len() * a3s.len()) as u8;

    let mut out = Vec::with_capacity(count as usize);
    for a1 in &a1s {
        for a3 in &a3s {
            let a2 = a3.cross(a1);
            let rotation = Matrix3::from_rows(&[a1.transpose(), a2.transpose(), a3.transpose()]);
            out.push(Lrf {
                rotation,
                eigenvalues: eig.values,
                ambiguity_count: count,
            });
        }
    }
    Ok(out)
}

/// Which eigenvalues feed the curvature class.
///
/// The Hessian reading distinguishes pockets, saddles and maxima of the
/// distance field; the structure-tensor reading is kept for fidelity
/// experiments (its eigenvalues are nonnegative, so the class saturates).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CurvatureSource {
    #[default]
    HessianEigenvalues,
    StructureTensorEigenvalues,
}

/// Count of strictly positive eigenvalues in {0, 1, 2, 3}.
pub fn curvature_class(kp: &Keypoint, lrf: &Lrf, source: CurvatureSource) -> u8 {
    let eigs = match source {
        CurvatureSource::HessianEigenvalues => &kp.hessian_eigs,
        CurvatureSource::StructureTensorEigenvalues => &lrf.eigenvalues,
    };
    eigs.iter().filter(|e| **e > 0.0).count() as u8
}
