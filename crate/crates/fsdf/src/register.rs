//! Correspondence generation and robust rigid registration.
//!
//! Correspondences come from exact K-nearest-neighbor search in descriptor
//! space (query → target, accumulated into one flat set). RANSAC samples
//! 3 correspondences per iteration, rejects geometrically inconsistent
//! triples, estimates a rigid transform by orthogonal Procrustes, and
//! keeps the candidate with the highest inlier count.
//!
//! Transform direction: the winning candidate maps target-frame points
//! into the query frame, so the inlier test is ‖p_q − T·p_t‖ < k_dist,
//! matching the ground-truth convention T_AB with A = query, B = target.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::descriptor::Descriptor;
use crate::transform::RigidTransform;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RegistrationError {
    #[error("target descriptor set is empty")]
    EmptyTarget,
    #[error("need at least 3 correspondences, got {0}")]
    InsufficientCorrespondences(usize),
    #[error("descriptor lengths differ between query and target")]
    DescriptorLengthMismatch,
    #[error("sampled correspondence triple is collinear")]
    DegenerateTriple,
    #[error("no candidate transform passed the consistency checks")]
    NoValidCandidate,
}

/// A query/target keypoint pair with its descriptor-space distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    /// Keypoint position in the query submap frame, meters.
    pub query_point: Vector3<f64>,
    /// Keypoint position in the target submap frame, meters.
    pub target_point: Vector3<f64>,
    pub descriptor_distance: f64,
}

/// RANSAC parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RansacConfig {
    pub k_neighbors: usize,
    pub k_consist: f64,
    /// Inlier distance threshold, meters. Scene-scale; no default.
    pub k_dist: f64,
    pub max_iterations: usize,
    pub rng_seed: u64,
    /// Optional early exit once the best inlier ratio exceeds this value;
    /// disabled by default so the full budget is always spent.
    pub early_exit_inlier_ratio: Option<f64>,
}

impl RansacConfig {
    pub fn new(k_dist: f64) -> Self {
        Self {
            k_neighbors: 5,
            k_consist: 0.9,
            k_dist,
            max_iterations: 4_000_000,
            rng_seed: 0,
            early_exit_inlier_ratio: None,
        }
    }
}

/// The best transform found by RANSAC.
#[derive(Clone, Copy, Debug)]
pub struct TransformCandidate {
    /// Maps target-frame points into the query frame.
    pub transform: RigidTransform,
    pub inlier_count: usize,
    /// Indices into the correspondence set of the generating triple.
    pub sample: [usize; 3],
}

/// For each query descriptor, its `k` nearest target descriptors under
/// Euclidean descriptor distance, accumulated into one flat set. Exact
/// (exhaustive) semantics; ties broken by ascending target index. The
/// output is ordered by (query index, rank).
pub fn find_correspondences(
    query: &[Descriptor],
    target: &[Descriptor],
    k: usize,
) -> Result<Vec<Correspondence>, RegistrationError> {
    if target.is_empty() {
        return Err(RegistrationError::EmptyTarget);
    }
    let len = target[0].values.len();
    if query.iter().any(|d| d.values.len() != len) || target.iter().any(|d| d.values.len() != len) {
        return Err(RegistrationError::DescriptorLengthMismatch);
    }
    let k = k.min(target.len());

    let per_query: Vec<Vec<Correspondence>> = query
        .par_iter()
        .map(|q| {
            // (distance², target index), exhaustive.
            let mut dists: Vec<(f64, usize)> = target
                .iter()
                .enumerate()
                .map(|(t_idx, t)| {
                    let d2: f64 = q
                        .values
                        .iter()
                        .zip(t.values.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d2, t_idx)
                })
                .collect();
            dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dists
                .into_iter()
                .take(k)
                .map(|(d2, t_idx)| Correspondence {
                    query_point: q.position,
                    target_point: target[t_idx].position,
                    descriptor_distance: d2.sqrt(),
                })
                .collect()
        })
        .collect();

    Ok(per_query.into_iter().flatten().collect())
}

/// Geometric consistency of a correspondence triple: for every pair the
/// endpoint distances in the two frames must satisfy
/// `k·d_t < d_q < d_t/k` (strictly).
pub fn consistency_check(triple: &[Correspondence; 3], k_consist: f64) -> bool {
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let d_q = (triple[a].query_point - triple[b].query_point).norm();
        let d_t = (triple[a].target_point - triple[b].target_point).norm();
        if !(k_consist * d_t < d_q && d_q < d_t / k_consist) {
            return false;
        }
    }
    true
}

/// Least-squares rigid transform (no scale) mapping `src` onto `dst` by
/// SVD-based orthogonal Procrustes with reflection correction.
pub(crate) fn kabsch(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> RigidTransform {
    debug_assert_eq!(src.len(), dst.len());
    let n = src.len() as f64;
    let centroid_src: Vector3<f64> = src.iter().sum::<Vector3<f64>>() / n;
    let centroid_dst: Vector3<f64> = dst.iter().sum::<Vector3<f64>>() / n;

    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst.iter()) {
        h += (s - centroid_src) * (d - centroid_dst).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("svd with u");
    let v_t = svd.v_t.expect("svd with v_t");
    let mut rotation = v_t.transpose() * u.transpose();
    if rotation.determinant() < 0.0 {
        let mut v = v_t.transpose();
        v.column_mut(2).neg_mut();
        rotation = v * u.transpose();
    }
    let translation = centroid_dst - rotation * centroid_src;
    RigidTransform::new(rotation, translation)
}

/// Rigid transform mapping the triple's query points onto its target
/// points. Rejects collinear query triples (triangle area ≤ 1e-9 m²).
pub fn estimate_rigid(triple: &[Correspondence; 3]) -> Result<RigidTransform, RegistrationError> {
    let q: Vec<Vector3<f64>> = triple.iter().map(|c| c.query_point).collect();
    let t: Vec<Vector3<f64>> = triple.iter().map(|c| c.target_point).collect();
    let area = 0.5 * (q[1] - q[0]).cross(&(q[2] - q[0])).norm();
    if area <= 1e-9 {
        return Err(RegistrationError::DegenerateTriple);
    }
    Ok(kabsch(&q, &t))
}

/// Number of correspondences with ‖p_q − T·p_t‖ < k_dist, where `t`
/// maps target-frame points into the query frame.
pub fn inlier_score(
    t_query_from_target: &RigidTransform,
    correspondences: &[Correspondence],
    k_dist: f64,
) -> usize {
    correspondences
        .iter()
        .filter(|c| (c.query_point - t_query_from_target.apply(&c.target_point)).norm() < k_dist)
        .count()
}

struct ChunkBest {
    inlier_count: usize,
    chunk: usize,
    iter_in_chunk: usize,
    transform: RigidTransform,
    sample: [usize; 3],
}

const RANSAC_CHUNK: usize = 4096;

fn run_chunk(
    chunk: usize,
    iterations: usize,
    correspondences: &[Correspondence],
    cfg: &RansacConfig,
) -> Option<ChunkBest> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        cfg.rng_seed ^ (chunk as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    let n = correspondences.len();
    let mut best: Option<ChunkBest> = None;
    for iter in 0..iterations {
        // Three distinct indices, uniform, without replacement.
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n);
        while b == a {
            b = rng.random_range(0..n);
        }
        let mut c = rng.random_range(0..n);
        while c == a || c == b {
            c = rng.random_range(0..n);
        }
        let triple = [correspondences[a], correspondences[b], correspondences[c]];
        if !consistency_check(&triple, cfg.k_consist) {
            continue;
        }
        let Ok(t_target_from_query) = estimate_rigid(&triple) else {
            continue;
        };
        let t = t_target_from_query.inverse();
        let score = inlier_score(&t, correspondences, cfg.k_dist);
        let improves = best.as_ref().is_none_or(|b| score > b.inlier_count);
        if improves {
            best = Some(ChunkBest {
                inlier_count: score,
                chunk,
                iter_in_chunk: iter,
                transform: t,
                sample: [a, b, c],
            });
            if let Some(ratio) = cfg.early_exit_inlier_ratio {
                if score as f64 >= ratio * n as f64 {
                    break;
                }
            }
        }
    }
    best
}

/// Robust registration: repeatedly samples 3 distinct correspondences,
/// filters by [`consistency_check`], estimates the rigid transform, and
/// scores inliers. Returns the candidate with the most inliers; ties go to
/// the earliest (chunk, iteration). Deterministic for a fixed seed,
/// independent of thread count: iterations are split into fixed chunks
/// with per-chunk derived seeds and reduced in chunk order.
pub fn ransac_register(
    correspondences: &[Correspondence],
    cfg: &RansacConfig,
) -> Result<TransformCandidate, RegistrationError> {
    if correspondences.len() < 3 {
        return Err(RegistrationError::InsufficientCorrespondences(
            correspondences.len(),
        ));
    }
    let chunks = cfg.max_iterations.div_ceil(RANSAC_CHUNK);
    let chunk_results: Vec<Option<ChunkBest>> = if cfg.early_exit_inlier_ratio.is_some() {
        // Early exit trades the parallel budget for sequential scanning so
        // the exit point is well-defined.
        let mut out = Vec::with_capacity(chunks);
        let mut achieved = false;
        for chunk in 0..chunks {
            if achieved {
                out.push(None);
                continue;
            }
            let iters = RANSAC_CHUNK.min(cfg.max_iterations - chunk * RANSAC_CHUNK);
            let best = run_chunk(chunk, iters, correspondences, cfg);
            if let (Some(b), Some(ratio)) = (&best, cfg.early_exit_inlier_ratio) {
                if b.inlier_count as f64 >= ratio * correspondences.len() as f64 {
                    achieved = true;
                }
            }
            out.push(best);
        }
        out
    } else {
        (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let iters = RANSAC_CHUNK.min(cfg.max_iterations - chunk * RANSAC_CHUNK);
                run_chunk(chunk, iters, correspondences, cfg)
            })
            .collect()
    };

    let mut best: Option<ChunkBest> = None;
    for candidate in chunk_results.into_iter().flatten() {
        let wins = match &best {
            None => true,
            Some(b) => {
                candidate.inlier_count > b.inlier_count
                    || (candidate.inlier_count == b.inlier_count
                        && (candidate.chunk, candidate.iter_in_chunk) < (b.chunk, b.iter_in_chunk))
            }
        };
        if wins {
            best = Some(candidate);
        }
    }
    best.map(|b| TransformCandidate {
        transform: b.transform,
        inlier_count: b.inlier_count,
        sample: b.sample,
    })
    .ok_or(RegistrationError::NoValidCandidate)
}
