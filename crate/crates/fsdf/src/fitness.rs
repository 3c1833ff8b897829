//! SDF-based fitness of a registration candidate.
//!
//! Iso-surface points of each submap are transformed into the other and
//! the field is sampled there: under a correct alignment every point lies
//! on the counterpart's zero-level set, so the weighted mean |Φ| is near
//! zero. Points landing outside observed space count toward the overlap
//! denominator only; a minimum overlap fraction gates the decision.

use crate::isosurface::IsoSurfaceCloud;
use crate::submap::SdfSubmap;
use crate::transform::RigidTransform;

/// How sampled distances enter the directional sums.
///
/// `Magnitude` accumulates |Φ| so misalignment cannot cancel between the
/// two sides of a surface; `Signed` keeps the raw signed sum for fidelity
/// comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SdfAccumulation {
    #[default]
    Magnitude,
    Signed,
}

/// One direction of the bidirectional fitness sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DirectionalSum {
    /// Σ ω·|Φ| (or ω·Φ in signed mode) over valid samples, meters·weight.
    pub weighted_sum: f64,
    /// Σ ω over valid samples.
    pub weight_sum: f64,
    pub valid_count: usize,
    pub total_count: usize,
}

/// Transforms each iso point by `t` and samples `(Φ, ω)` trilinearly from
/// `sdf`. Unobserved points count toward `total_count` only.
pub fn directional_sum(
    sdf: &SdfSubmap,
    iso: &IsoSurfaceCloud,
    t: &RigidTransform,
    mode: SdfAccumulation,
) -> DirectionalSum {
    let mut out = DirectionalSum {
        total_count: iso.points.len(),
        ..Default::default()
    };
    for p in &iso.points {
        let q = t.apply(p);
        if let Some(sample) = sdf.sample_trilinear(&q) {
            let phi = match mode {
                SdfAccumulation::Magnitude => sample.distance.abs(),
                SdfAccumulation::Signed => sample.distance,
            };
            out.weighted_sum += sample.weight * phi;
            out.weight_sum += sample.weight;
            out.valid_count += 1;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitnessParams {
    /// Minimum fraction of iso points (over both directions) that must
    /// sample observed space.
    pub k_overlap: f64,
    pub mode: SdfAccumulation,
}

impl Default for FitnessParams {
    fn default() -> Self {
        Self {
            k_overlap: 0.15,
            mode: SdfAccumulation::default(),
        }
    }
}

/// Fitness and overlap of a candidate alignment. `fitness` is `None` when
/// the overlap gate fails (or no weight was collected), in which case the
/// match is not considered.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitnessOutcome {
    pub overlap_fraction: f64,
    /// −(weighted mean distance magnitude), meters; ≤ 0 in magnitude mode.
    pub fitness: Option<f64>,
}

/// Bidirectional fitness of `t_query_from_target` (maps target-frame
/// points into the query frame): the target's iso points are evaluated in
/// the query SDF through `t`, the query's iso points in the target SDF
/// through `t⁻¹`, and both sums are normalized by the combined weight.
pub fn evaluate_fitness(
    query: (&SdfSubmap, &IsoSurfaceCloud),
    target: (&SdfSubmap, &IsoSurfaceCloud),
    t_query_from_target: &RigidTransform,
    params: &FitnessParams,
) -> FitnessOutcome {
    let (query_sdf, query_iso) = query;
    let (target_sdf, target_iso) = target;
    let into_query = directional_sum(query_sdf, target_iso, t_query_from_target, params.mode);
    let into_target = directional_sum(
        target_sdf,
        query_iso,
        &t_query_from_target.inverse(),
        params.mode,
    );

    let total = into_query.total_count + into_target.total_count;
    let valid = into_query.valid_count + into_target.valid_count;
    let overlap_fraction = if total > 0 {
        valid as f64 / total as f64
    } else {
        0.0
    };

    let weight = into_query.weight_sum + into_target.weight_sum;
    let fitness = if overlap_fraction < params.k_overlap || weight <= 0.0 {
        None
    } else {
        Some(-(into_query.weighted_sum + into_target.weighted_sum) / weight)
    };
    FitnessOutcome {
        overlap_fraction,
        fitness,
    }
}

/// Final per-pair decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchDecision {
    Matched,
    RejectedOverlap,
    RejectedFitness,
    NoCandidate,
}

impl MatchDecision {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatchDecision::Matched => "matched",
            MatchDecision::RejectedOverlap => "rejected_overlap",
            MatchDecision::RejectedFitness => "rejected_fitness",
            MatchDecision::NoCandidate => "no_candidate",
        }
    }
}

/// Thresholds the fitness magnitude; overlap rejection dominates.
pub fn decide(outcome: &FitnessOutcome, fitness_threshold: f64) -> MatchDecision {
    match outcome.fitness {
        None => MatchDecision::RejectedOverlap,
        Some(f) => {
            if f.abs() < fitness_threshold {
                MatchDecision::Matched
            } else {
                MatchDecision::RejectedFitness
            }
        }
    }
}

/// Everything the pipeline reports for one submap pair.
#[derive(Clone, Debug)]
pub struct MatchResult {
    pub query_id: u32,
    pub target_id: u32,
    /// Winning transform, mapping target-frame points into the query frame.
    pub transform: Option<RigidTransform>,
    pub inlier_count: usize,
    pub overlap_fraction: f64,
    pub fitness: Option<f64>,
    pub decision: MatchDecision,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VoxelIndex;
    use crate::isosurface::extract_isosurface;
    use crate::submap::SdfVoxel;
    use nalgebra::Vector3;

    fn sphere_submap(id: u32, center: Vector3<f64>, radius: f64) -> SdfSubmap {
        let vs = 0.05;
        let mut s = SdfSubmap::new(id, vs, 0.3, RigidTransform::identity()).unwrap();
        let r = ((radius + 0.3) / vs).ceil() as i32;
        let c = VoxelIndex::containing(&center, vs);
        for i in (c.i - r)..=(c.i + r) {
            for j in (c.j - r)..=(c.j + r) {
                for k in (c.k - r)..=(c.k + r) {
                    let idx = VoxelIndex::new(i, j, k);
                    let d = (idx.center(vs) - center).norm() - radius;
                    if d.abs() <= 0.3 {
                        s.set(
                            idx,
                            SdfVoxel {
                                distance: d as f32,
                                weight: 1.0,
                            },
                        );
                    }
                }
            }
        }
        s
    }

    #[test]
    fn self_match_fitness_is_near_zero() {
        let s = sphere_submap(0, Vector3::new(0.5, 0.5, 0.5), 0.4);
        let iso = extract_isosurface(&s).unwrap();
        let sum = directional_sum(
            &s,
            &iso,
            &RigidTransform::identity(),
            SdfAccumulation::Magnitude,
        );
        assert_eq!(sum.total_count, iso.len());
        assert!(sum.valid_count > 0);
        let mean = sum.weighted_sum / sum.weight_sum;
        assert!(mean <= 0.25 * 0.05, "weighted mean |Φ| = {mean}");

        let outcome = evaluate_fitness(
            (&s, &iso),
            (&s, &iso),
            &RigidTransform::identity(),
            &FitnessParams::default(),
        );
        assert!(outcome.overlap_fraction >= 0.99);
        let f = outcome.fitness.unwrap();
        assert!(f <= 0.0);
        assert!(f.abs() <= 0.25 * 0.05);
    }

    #[test]
    fn translating_everything_outside_gives_zero_valid() {
        let s = sphere_submap(0, Vector3::new(0.5, 0.5, 0.5), 0.4);
        let iso = extract_isosurface(&s).unwrap();
        let t = RigidTransform::new(nalgebra::Matrix3::identity(), Vector3::new(100.0, 0.0, 0.0));
        let sum = directional_sum(&s, &iso, &t, SdfAccumulation::Magnitude);
        assert_eq!(sum.valid_count, 0);
        assert_eq!(sum.total_count, iso.len());
        assert_eq!(sum.weight_sum, 0.0);
    }

    #[test]
    fn directional_sum_matches_direct_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let s = sphere_submap(0, Vector3::new(0.3, 0.2, 0.4), 0.25);
        let points: Vec<Vector3<f64>> = (0..500)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-0.2..0.8),
                    rng.random_range(-0.2..0.8),
                    rng.random_range(-0.2..0.8),
                )
            })
            .collect();
        let iso = IsoSurfaceCloud {
            points: points.clone(),
        };
        let t = RigidTransform::from_euler(0.2, -0.1, 0.3, Vector3::new(0.05, -0.02, 0.01));
        for mode in [SdfAccumulation::Magnitude, SdfAccumulation::Signed] {
            let got = directional_sum(&s, &iso, &t, mode);
            let mut weighted = 0.0;
            let mut weights = 0.0;
            let mut valid = 0usize;
            for p in &points {
                if let Some(sample) = s.sample_trilinear(&t.apply(p)) {
                    let phi = match mode {
                        SdfAccumulation::Magnitude => sample.distance.abs(),
                        SdfAccumulation::Signed => sample.distance,
                    };
                    weighted += sample.weight * phi;
                    weights += sample.weight;
                    valid += 1;
                }
            }
            assert!((got.weighted_sum - weighted).abs() <= 1e-12);
            assert!((got.weight_sum - weights).abs() <= 1e-12);
            assert_eq!(got.valid_count, valid);
            assert_eq!(got.total_count, points.len());
        }
    }

    #[test]
    fn disjoint_submaps_are_overlap_rejected() {
        let a = sphere_submap(0, Vector3::new(0.0, 0.0, 0.0), 0.3);
        let b = sphere_submap(1, Vector3::new(50.0, 0.0, 0.0), 0.3);
        let iso_a = extract_isosurface(&a).unwrap();
        let iso_b = extract_isosurface(&b).unwrap();
        let outcome = evaluate_fitness(
            (&a, &iso_a),
            (&b, &iso_b),
            &RigidTransform::identity(),
            &FitnessParams::default(),
        );
        assert!(outcome.overlap_fraction < 0.15);
        assert_eq!(outcome.fitness, None);
        assert_eq!(decide(&outcome, 0.05), MatchDecision::RejectedOverlap);
    }

    #[test]
    fn bidirectional_symmetry() {
        let a = sphere_submap(0, Vector3::new(0.4, 0.4, 0.4), 0.35);
        let b = sphere_submap(1, Vector3::new(0.5, 0.4, 0.4), 0.35);
        let iso_a = extract_isosurface(&a).unwrap();
        let iso_b = extract_isosurface(&b).unwrap();
        let t = RigidTransform::from_euler(0.1, 0.0, -0.05, Vector3::new(0.02, 0.01, 0.0));
        let params = FitnessParams::default();
        let fwd = evaluate_fitness((&a, &iso_a), (&b, &iso_b), &t, &params);
        let rev = evaluate_fitness((&b, &iso_b), (&a, &iso_a), &t.inverse(), &params);
        assert!((fwd.overlap_fraction - rev.overlap_fraction).abs() < 1e-12);
        match (fwd.fitness, rev.fitness) {
            (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9, "{x} vs {y}"),
            (None, None) => {}
            other => panic!("asymmetric gating: {other:?}"),
        }
    }

    #[test]
    fn fitness_grows_with_misalignment() {
        let s = sphere_submap(0, Vector3::new(0.5, 0.5, 0.5), 0.4);
        let iso = extract_isosurface(&s).unwrap();
        let vs = 0.05;
        let params = FitnessParams::default();
        for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
            let mut prev = -1.0;
            for steps in [0.0, 1.0, 2.0, 4.0] {
                let t = RigidTransform::new(nalgebra::Matrix3::identity(), axis * steps * vs);
                let outcome = evaluate_fitness((&s, &iso), (&s, &iso), &t, &params);
                let magnitude = outcome
                    .fitness
                    .expect("overlap holds for small shifts")
                    .abs();
                assert!(
                    magnitude + 1e-12 >= prev,
                    "fitness magnitude decreased: {magnitude} after {prev} at {steps} steps"
                );
                prev = magnitude;
            }
        }
    }

    #[test]
    fn decide_thresholds_fitness_magnitude() {
        let outcome = FitnessOutcome {
            overlap_fraction: 0.5,
            fitness: Some(-0.01),
        };
        assert_eq!(decide(&outcome, 0.05), MatchDecision::Matched);
        assert_eq!(decide(&outcome, 0.005), MatchDecision::RejectedFitness);

        let rejected = FitnessOutcome {
            overlap_fraction: 0.10,
            fitness: None,
        };
        assert_eq!(decide(&rejected, 0.05), MatchDecision::RejectedOverlap);
    }

    #[test]
    fn threshold_sweep_is_monotone() {
        let outcomes = [
            FitnessOutcome {
                overlap_fraction: 0.9,
                fitness: Some(-0.01),
            },
            FitnessOutcome {
                overlap_fraction: 0.8,
                fitness: Some(-0.03),
            },
            FitnessOutcome {
                overlap_fraction: 0.7,
                fitness: Some(-0.08),
            },
            FitnessOutcome {
                overlap_fraction: 0.1,
                fitness: None,
            },
        ];
        let mut prev = 0usize;
        for threshold in [0.005, 0.02, 0.05, 0.1, 0.2] {
            let positives = outcomes
                .iter()
                .filter(|o| decide(o, threshold) == MatchDecision::Matched)
                .count();
            assert!(positives >= prev);
            prev = positives;
        }
    }
}
