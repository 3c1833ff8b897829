//! Line-oriented scene spec files.
//!
//! Grammar (one statement per line, `#` starts a comment, angles in
//! degrees):
//!
//! ```text
//! voxel_size   <m>                          default 0.05
//! truncation   <m>                          default 0.3
//! max_distance <m>                          default 15 · voxel_size
//! noise_sigma  <m>                          default 0
//! seed         <u64>                        default 0
//! bounds       <minx miny minz maxx maxy maxz>
//! sphere       <cx cy cz r>
//! box          <cx cy cz ex ey ez [yaw pitch roll]>
//! plane        <px py pz nx ny nz>
//! viewpoint    <x y z yaw pitch roll ex ey ez>
//! ```
//!
//! Box extents and viewpoint extents are half-sizes. A scene made only of
//! planes needs explicit `bounds`.

use nalgebra::Vector3;
use thiserror::Error;

use crate::synth::{Primitive, SceneSpec, Viewpoint};
use crate::transform::RigidTransform;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SceneSpecError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("scene spec contains no primitives")]
    Empty,
}

fn floats(tokens: &[&str], line: usize) -> Result<Vec<f64>, SceneSpecError> {
    tokens
        .iter()
        .map(|t| {
            let v: f64 = t.parse().map_err(|_| SceneSpecError::Malformed {
                line,
                reason: format!("bad number {t:?}"),
            })?;
            if !v.is_finite() {
                return Err(SceneSpecError::Malformed {
                    line,
                    reason: format!("non-finite value {t:?}"),
                });
            }
            Ok(v)
        })
        .collect()
}

fn expect_args(
    tokens: &[&str],
    allowed: &[usize],
    line: usize,
    what: &str,
) -> Result<(), SceneSpecError> {
    if allowed.contains(&tokens.len()) {
        Ok(())
    } else {
        Err(SceneSpecError::Malformed {
            line,
            reason: format!("{what} expects {allowed:?} arguments, got {}", tokens.len()),
        })
    }
}

/// Parses a scene spec. Defaults apply for any omitted parameter;
/// `max_distance` defaults to 15 voxels of whatever voxel size ends up
/// configured.
pub fn parse_scene_spec(text: &str) -> Result<SceneSpec, SceneSpecError> {
    let mut spec = SceneSpec::new(Vec::new(), 0.05);
    let mut max_distance_set = false;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let keyword = fields.next().unwrap();
        let args: Vec<&str> = fields.collect();
        match keyword {
            "voxel_size" | "truncation" | "max_distance" | "noise_sigma" => {
                expect_args(&args, &[1], line, keyword)?;
                let v = floats(&args, line)?[0];
                if v < 0.0 || (keyword == "voxel_size" && v <= 0.0) {
                    return Err(SceneSpecError::Malformed {
                        line,
                        reason: format!("{keyword} must be positive"),
                    });
                }
                match keyword {
                    "voxel_size" => spec.voxel_size = v,
                    "truncation" => spec.truncation = v,
                    "max_distance" => {
                        spec.max_distance = v;
                        max_distance_set = true;
                    }
                    _ => spec.noise_sigma = v,
                }
            }
            "seed" => {
                expect_args(&args, &[1], line, "seed")?;
                spec.seed = args[0].parse().map_err(|_| SceneSpecError::Malformed {
                    line,
                    reason: format!("bad seed {:?}", args[0]),
                })?;
            }
            "bounds" => {
                expect_args(&args, &[6], line, "bounds")?;
                let v = floats(&args, line)?;
                let lo = Vector3::new(v[0], v[1], v[2]);
                let hi = Vector3::new(v[3], v[4], v[5]);
                if (0..3).any(|a| lo[a] >= hi[a]) {
                    return Err(SceneSpecError::Malformed {
                        line,
                        reason: "bounds min must be below max".into(),
                    });
                }
                spec.bounds = Some((lo, hi));
            }
            "sphere" => {
                expect_args(&args, &[4], line, "sphere")?;
                let v = floats(&args, line)?;
                spec.primitives.push(Primitive::Sphere {
                    center: Vector3::new(v[0], v[1], v[2]),
                    radius: v[3],
                });
            }
            "box" => {
                expect_args(&args, &[6, 9], line, "box")?;
                let v = floats(&args, line)?;
                let rotation = if v.len() == 9 {
                    RigidTransform::from_euler(
                        v[6].to_radians(),
                        v[7].to_radians(),
                        v[8].to_radians(),
                        Vector3::zeros(),
                    )
                    .rotation
                } else {
                    nalgebra::Matrix3::identity()
                };
                spec.primitives.push(Primitive::Box {
                    center: Vector3::new(v[0], v[1], v[2]),
                    half_extents: Vector3::new(v[3], v[4], v[5]),
                    rotation,
                });
            }
            "plane" => {
                expect_args(&args, &[6], line, "plane")?;
                let v = floats(&args, line)?;
                spec.primitives.push(Primitive::Plane {
                    point: Vector3::new(v[0], v[1], v[2]),
                    normal: Vector3::new(v[3], v[4], v[5]),
                });
            }
            "viewpoint" => {
                expect_args(&args, &[9], line, "viewpoint")?;
                let v = floats(&args, line)?;
                spec.viewpoints.push(Viewpoint {
                    pose: RigidTransform::from_euler(
                        v[3].to_radians(),
                        v[4].to_radians(),
                        v[5].to_radians(),
                        Vector3::new(v[0], v[1], v[2]),
                    ),
                    extent: Vector3::new(v[6], v[7], v[8]),
                });
            }
            other => {
                return Err(SceneSpecError::Malformed {
                    line,
                    reason: format!("unknown keyword {other:?}"),
                });
            }
        }
    }
    if spec.primitives.is_empty() {
        return Err(SceneSpecError::Empty);
    }
    if !max_distance_set {
        spec.max_distance = 15.0 * spec.voxel_size;
    }
    Ok(spec)
}
