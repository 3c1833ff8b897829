//! Rigid transforms as an explicit rotation matrix plus translation.

use nalgebra::{Matrix3, Vector3};

/// A rigid transform `p_out = R * p_in + t`.
///
/// `T_AB` maps points expressed in frame B into frame A. Composition
/// follows the same convention: `T_AC = T_AB.compose(&T_BC)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Rotation about `axis` by `angle` radians, plus translation.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation =
            nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle)
                .into_inner();
        Self {
            rotation,
            translation,
        }
    }

    /// Intrinsic Z-Y-X Euler rotation (yaw, pitch, roll in radians).
    pub fn from_euler(yaw: f64, pitch: f64, roll: f64, translation: Vector3<f64>) -> Self {
        let rotation = nalgebra::Rotation3::from_euler_angles(roll, pitch, yaw).into_inner();
        Self {
            rotation,
            translation,
        }
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rot_t = self.rotation.transpose();
        Self {
            rotation: rot_t,
            translation: -(rot_t * self.translation),
        }
    }

    /// Checks RᵀR = I and det(R) = +1 within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let gram = self.rotation.transpose() * self.rotation;
        let ortho_err = (gram - Matrix3::identity()).abs().max();
        let det_err = (self.rotation.determinant() - 1.0).abs();
        ortho_err <= tol && det_err <= tol && self.translation.iter().all(|v| v.is_finite())
    }

    /// Geodesic rotation angle between the two rotations, radians.
    pub fn rotation_angle_to(&self, other: &RigidTransform) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        cos.acos()
    }

    /// Euclidean distance between the two translations, meters.
    pub fn translation_distance_to(&self, other: &RigidTransform) -> f64 {
        (self.translation - other.translation).norm()
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}
