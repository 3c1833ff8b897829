//! Analytic scene construction: CSG min-union of primitives rasterized onto
//! sparse grids, with optional Gaussian noise. Test fixtures and the `synth`
//! CLI path are built on this.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::grid::VoxelIndex;
use crate::submap::{SdfSubmap, SdfVoxel};
use crate::transform::RigidTransform;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SynthError {
    #[error("scene spec contains no primitives")]
    EmptySpec,
    #[error("degenerate primitive: {0}")]
    DegenerateSpec(String),
    #[error("scene has no finite bounds (planes need explicit bounds)")]
    UnboundedScene,
    #[error("viewpoint {0} sees no observed voxels")]
    EmptyCarve(usize),
    #[error("scene spec has no viewpoints")]
    NoViewpoints,
}

/// Analytic solid. Distances are signed, negative inside.
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
    /// Oriented box; `rotation` maps box-frame points into the world.
    Box {
        center: Vector3<f64>,
        half_extents: Vector3<f64>,
        rotation: Matrix3<f64>,
    },
    /// Half space below the plane through `point` with outward `normal`.
    Plane {
        point: Vector3<f64>,
        normal: Vector3<f64>,
    },
}

impl Primitive {
    pub fn validate(&self) -> Result<(), SynthError> {
        match self {
            Primitive::Sphere { radius, .. } => {
                if *radius <= 0.0 || !radius.is_finite() {
                    return Err(SynthError::DegenerateSpec(format!(
                        "sphere radius {radius}"
                    )));
                }
            }
            Primitive::Box { half_extents, .. } => {
                if half_extents.iter().any(|e| *e <= 0.0 || !e.is_finite()) {
                    return Err(SynthError::DegenerateSpec(format!(
                        "box half extents {half_extents:?}"
                    )));
                }
            }
            Primitive::Plane { normal, .. } => {
                if normal.norm() <= 1e-12 || !normal.iter().all(|v| v.is_finite()) {
                    return Err(SynthError::DegenerateSpec("plane normal is zero".into()));
                }
            }
        }
        Ok(())
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        match self {
            Primitive::Sphere { center, radius } => (p - center).norm() - radius,
            Primitive::Box {
                center,
                half_extents,
                rotation,
            } => {
                let q = rotation.transpose() * (p - center);
                let d = Vector3::new(
                    q.x.abs() - half_extents.x,
                    q.y.abs() - half_extents.y,
                    q.z.abs() - half_extents.z,
                );
                let outside = Vector3::new(d.x.max(0.0), d.y.max(0.0), d.z.max(0.0)).norm();
                let inside = d.x.max(d.y).max(d.z).min(0.0);
                outside + inside
            }
            Primitive::Plane { point, normal } => {
                let n = normal.normalize();
                n.dot(&(p - point))
            }
        }
    }

    /// Axis-aligned bounds of the solid itself, when finite.
    fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        match self {
            Primitive::Sphere { center, radius } => Some((
                center - Vector3::repeat(*radius),
                center + Vector3::repeat(*radius),
            )),
            Primitive::Box {
                center,
                half_extents,
                rotation,
            } => {
                // Conservative: rotated box fits in the sphere of its
                // half-diagonal.
                let r = (rotation * half_extents).norm().max(half_extents.norm());
                Some((center - Vector3::repeat(r), center + Vector3::repeat(r)))
            }
            Primitive::Plane { .. } => None,
        }
    }
}

/// A carving viewpoint: submap frame pose plus the half-extents of the
/// axis-aligned observation box in that frame.
#[derive(Clone, Debug)]
pub struct Viewpoint {
    pub pose: RigidTransform,
    pub extent: Vector3<f64>,
}

/// Declarative scene: primitives, rasterization parameters, and optional
/// carving viewpoints. Deterministic given the spec and seed.
#[derive(Clone, Debug)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    /// Explicit rasterization bounds; derived from primitive bounds when
    /// absent (planes then require explicit bounds).
    pub bounds: Option<(Vector3<f64>, Vector3<f64>)>,
    pub voxel_size: f64,
    pub truncation: f64,
    pub max_distance: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub viewpoints: Vec<Viewpoint>,
}

impl SceneSpec {
    pub fn new(primitives: Vec<Primitive>, voxel_size: f64) -> Self {
        Self {
            primitives,
            bounds: None,
            voxel_size,
            truncation: 0.3,
            max_distance: 15.0 * voxel_size,
            noise_sigma: 0.0,
            seed: 0,
            viewpoints: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.primitives.is_empty() {
            return Err(SynthError::EmptySpec);
        }
        for p in &self.primitives {
            p.validate()?;
        }
        Ok(())
    }

    /// Min-union distance over all primitives.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.primitives
            .iter()
            .map(|prim| prim.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    fn effective_bounds(&self) -> Result<(Vector3<f64>, Vector3<f64>), SynthError> {
        if let Some(b) = self.bounds {
            return Ok(b);
        }
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for p in &self.primitives {
            let (plo, phi) = p.bounds().ok_or(SynthError::UnboundedScene)?;
            lo = lo.inf(&plo);
            hi = hi.sup(&phi);
        }
        let pad = Vector3::repeat(self.max_distance);
        Ok((lo - pad, hi + pad))
    }
}

/// Deterministic per-voxel noise, independent of rasterization order.
fn voxel_noise(seed: u64, salt: u64, idx: VoxelIndex, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let mixed = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(salt.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(idx.to_key());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mixed);
    Normal::new(0.0, sigma).unwrap().sample(&mut rng)
}

/// Rasterizes the scene onto a sparse grid in the world frame, keeping
/// voxels with |Φ| ≤ max_distance; weight 1 everywhere.
pub fn build_synthetic_scene(spec: &SceneSpec) -> Result<SdfSubmap, SynthError> {
    spec.validate()?;
    let (lo, hi) = spec.effective_bounds()?;
    let vs = spec.voxel_size;
    let mut submap = SdfSubmap::new(0, vs, spec.truncation, RigidTransform::identity())
        .expect("valid parameters");

    let i0 = (lo.x / vs).floor() as i32;
    let j0 = (lo.y / vs).floor() as i32;
    let k0 = (lo.z / vs).floor() as i32;
    let i1 = (hi.x / vs).ceil() as i32;
    let j1 = (hi.y / vs).ceil() as i32;
    let k1 = (hi.z / vs).ceil() as i32;
    for i in i0..i1 {
        for j in j0..j1 {
            for k in k0..k1 {
                let idx = VoxelIndex::new(i, j, k);
                let d = spec.signed_distance(&idx.center(vs));
                if d.abs() <= spec.max_distance {
                    let noisy = d + voxel_noise(spec.seed, 0, idx, spec.noise_sigma);
                    submap.set(
                        idx,
                        SdfVoxel {
                            distance: noisy as f32,
                            weight: 1.0,
                        },
                    );
                }
            }
        }
    }
    Ok(submap)
}

/// Rasterizes the scene into the frame of one viewpoint, restricted to its
/// extent box. Used by submap carving; noise is salted with `salt` so
/// different submaps observe independent noise.
pub(crate) fn rasterize_in_frame(
    spec: &SceneSpec,
    pose: &RigidTransform,
    extent: &Vector3<f64>,
    id: u32,
    salt: u64,
) -> SdfSubmap {
    let vs = spec.voxel_size;
    let mut submap = SdfSubmap::new(id, vs, spec.truncation, *pose).expect("valid parameters");
    let i1 = (extent.x / vs).ceil() as i32;
    let j1 = (extent.y / vs).ceil() as i32;
    let k1 = (extent.z / vs).ceil() as i32;
    for i in -i1..i1 {
        for j in -j1..j1 {
            for k in -k1..k1 {
                let idx = VoxelIndex::new(i, j, k);
                let p_world = pose.apply(&idx.center(vs));
                let d = spec.signed_distance(&p_world);
                if d.abs() <= spec.max_distance {
                    let noisy = d + voxel_noise(spec.seed, salt, idx, spec.noise_sigma);
                    submap.set(
                        idx,
                        SdfVoxel {
                            distance: noisy as f32,
                            weight: 1.0,
                        },
                    );
                }
            }
        }
    }
    submap
}
