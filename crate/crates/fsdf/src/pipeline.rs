//! End-to-end driver: feature extraction, pairwise matching, PR-curve
//! evaluation and the free-space ablation.

use rayon::prelude::*;
use thiserror::Error;

use crate::descriptor::{describe, Descriptor, DescriptorParams};
use crate::filter::{blur_sdf, gradient_from_blurred, hessian_from_blurred, FilterError};
use crate::fitness::{
    decide, evaluate_fitness, FitnessParams, MatchDecision, MatchResult, SdfAccumulation,
};
use crate::isosurface::{extract_isosurface, IsoSurfaceCloud};
use crate::keypoint::{
    detect_extrema, doh_response, filter_by_surface_distance, select_top_n, Keypoint,
};
use crate::lrf::{assign_lrfs, collect_support, structure_tensor, CurvatureSource, Lrf, LrfError};
use crate::register::{find_correspondences, ransac_register, RansacConfig, RegistrationError};
use crate::scene::evaluation_pairs;
use crate::submap::{SdfError, SdfSubmap};

#[derive(Error, Debug)]
pub enum PipelineError {
    #[error("evaluation needs at least 2 submaps, got {0}")]
    InsufficientSubmaps(usize),
    #[error(transparent)]
    Sdf(#[from] SdfError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Registration(#[from] RegistrationError),
    #[error("invalid fitness sweep: {0}")]
    InvalidSweep(String),
}

/// All pipeline parameters. Defaults follow the method's fixed settings;
/// `k_dist` is scene-scale and has no default.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Descriptor support radius, voxels.
    pub r_f: f64,
    /// Angular divisions per 180°.
    pub n_div: usize,
    /// Neighbors per query descriptor.
    pub knn: usize,
    pub alpha_dist: f64,
    pub alpha_class: f64,
    /// Blur sigma for gradient/Hessian, voxels.
    pub sigma_grad: f64,
    /// Gaussian support weighting sigma, voxels.
    pub sigma_desc: f64,
    /// RANSAC inlier radius, meters. Scene-scale, required.
    pub k_dist: f64,
    pub k_consist: f64,
    pub k_axis: f64,
    pub k_overlap: f64,
    pub max_keypoints: usize,
    pub ransac_iterations: usize,
    pub seed: u64,
    /// Keep only keypoints with |Φ| < d_lim (free-space ablation).
    pub d_lim: Option<f64>,
    pub curvature_source: CurvatureSource,
    pub sdf_accumulation: SdfAccumulation,
    pub early_exit_inlier_ratio: Option<f64>,
}

impl PipelineConfig {
    pub fn new(k_dist: f64) -> Self {
        Self {
            r_f: 15.0,
            n_div: 10,
            knn: 5,
            alpha_dist: 1e-7,
            alpha_class: 1e-5,
            sigma_grad: 2.0,
            sigma_desc: 15.0,
            k_dist,
            k_consist: 0.9,
            k_axis: 0.5,
            k_overlap: 0.15,
            max_keypoints: 5000,
            ransac_iterations: 4_000_000,
            seed: 0,
            d_lim: None,
            curvature_source: CurvatureSource::default(),
            sdf_accumulation: SdfAccumulation::default(),
            early_exit_inlier_ratio: None,
        }
    }

    pub fn descriptor_params(&self) -> DescriptorParams {
        DescriptorParams {
            n_div: self.n_div,
            alpha_dist: self.alpha_dist,
            alpha_class: self.alpha_class,
            curvature_source: self.curvature_source,
        }
    }

    pub fn ransac_config(&self) -> RansacConfig {
        RansacConfig {
            k_neighbors: self.knn,
            k_consist: self.k_consist,
            k_dist: self.k_dist,
            max_iterations: self.ransac_iterations,
            rng_seed: self.seed,
            early_exit_inlier_ratio: self.early_exit_inlier_ratio,
        }
    }

    pub fn fitness_params(&self) -> FitnessParams {
        FitnessParams {
            k_overlap: self.k_overlap,
            mode: self.sdf_accumulation,
        }
    }
}

/// Features of one submap: detected keypoints, their frames, and one
/// descriptor per (keypoint, LRF).
#[derive(Clone, Debug, Default)]
pub struct FeatureSet {
    pub keypoints: Vec<Keypoint>,
    /// (keypoint index into `keypoints`, frame).
    pub lrfs: Vec<(usize, Lrf)>,
    pub descriptors: Vec<Descriptor>,
}

/// Chains filtering → keypoints → LRF → description. The keypoint budget
/// applies after the optional surface-distance filter, so restricted runs
/// refill from the same response ordering. Deterministic: keypoints are
/// processed in selection order and failures (thin support, degenerate
/// tensors) simply skip the keypoint's descriptors.
pub fn extract_features(submap: &SdfSubmap, cfg: &PipelineConfig) -> FeatureSet {
    if submap.is_empty() {
        return FeatureSet::default();
    }
    let Ok(blurred) = blur_sdf(submap, cfg.sigma_grad) else {
        return FeatureSet::default();
    };
    let gradient = gradient_from_blurred(&blurred, submap.voxel_size());
    let hessian = hessian_from_blurred(&blurred, submap.voxel_size());
    let doh = doh_response(&hessian);
    let mut keypoints = detect_extrema(&doh, &hessian, submap);
    if let Some(d_lim) = cfg.d_lim {
        keypoints = filter_by_surface_distance(keypoints, d_lim);
    }
    let keypoints = select_top_n(keypoints, cfg.max_keypoints);

    let params = cfg.descriptor_params();
    type KeypointFeatures = (Vec<(usize, Lrf)>, Vec<Descriptor>);
    let per_kp: Vec<KeypointFeatures> = keypoints
        .par_iter()
        .enumerate()
        .map(|(kp_idx, kp)| {
            let samples = match collect_support(&gradient, kp, cfg.r_f, cfg.sigma_desc) {
                Ok(s) => s,
                Err(LrfError::InsufficientSupport { .. }) => return (Vec::new(), Vec::new()),
                Err(LrfError::DegenerateTensor) => unreachable!(),
            };
            let tensor = structure_tensor(&samples);
            let lrfs = match assign_lrfs(&tensor, &samples, cfg.k_axis) {
                Ok(l) => l,
                Err(_) => return (Vec::new(), Vec::new()),
            };
            let mut lrf_rows = Vec::with_capacity(lrfs.len());
            let mut descriptors = Vec::with_capacity(lrfs.len());
            for (ordinal, lrf) in lrfs.iter().enumerate() {
                let mut d = describe(&samples, lrf, submap, kp, &params);
                d.lrf_ordinal = ordinal as u8;
                lrf_rows.push((kp_idx, *lrf));
                descriptors.push(d);
            }
            (lrf_rows, descriptors)
        })
        .collect();

    let mut lrfs = Vec::new();
    let mut descriptors = Vec::new();
    for (l, d) in per_kp {
        lrfs.extend(l);
        descriptors.extend(d);
    }
    FeatureSet {
        keypoints,
        lrfs,
        descriptors,
    }
}

/// A submap ready for matching: ESDF submap, iso-surface cloud, features.
#[derive(Clone, Debug)]
pub struct PreparedSubmap {
    pub submap: SdfSubmap,
    pub iso: IsoSurfaceCloud,
    pub features: FeatureSet,
}

/// Extracts the iso surface and features once; an all-one-sign field
/// yields an empty cloud (such a submap can never pass the overlap gate).
pub fn prepare_submap(submap: SdfSubmap, cfg: &PipelineConfig) -> PreparedSubmap {
    let iso = extract_isosurface(&submap).unwrap_or_default();
    let features = extract_features(&submap, cfg);
    PreparedSubmap {
        submap,
        iso,
        features,
    }
}

/// Full pairwise matching: correspondences → RANSAC → fitness → decision.
pub fn match_pair(
    query: &PreparedSubmap,
    target: &PreparedSubmap,
    cfg: &PipelineConfig,
    fitness_threshold: f64,
) -> MatchResult {
    let no_candidate = MatchResult {
        query_id: query.submap.id,
        target_id: target.submap.id,
        transform: None,
        inlier_count: 0,
        overlap_fraction: 0.0,
        fitness: None,
        decision: MatchDecision::NoCandidate,
    };
    if query.features.descriptors.is_empty() || target.features.descriptors.is_empty() {
        return no_candidate;
    }
    let correspondences = match find_correspondences(
        &query.features.descriptors,
        &target.features.descriptors,
        cfg.knn,
    ) {
        Ok(c) => c,
        Err(_) => return no_candidate,
    };
    let candidate = match ransac_register(&correspondences, &cfg.ransac_config()) {
        Ok(c) => c,
        Err(_) => return no_candidate,
    };
    let outcome = evaluate_fitness(
        (&query.submap, &query.iso),
        (&target.submap, &target.iso),
        &candidate.transform,
        &cfg.fitness_params(),
    );
    MatchResult {
        query_id: query.submap.id,
        target_id: target.submap.id,
        transform: Some(candidate.transform),
        inlier_count: candidate.inlier_count,
        overlap_fraction: outcome.overlap_fraction,
        fitness: outcome.fitness,
        decision: decide(&outcome, fitness_threshold),
    }
}

/// Threshold sweep `lo:hi:n` (n evenly spaced values, inclusive).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitnessSweep {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl FitnessSweep {
    pub fn thresholds(&self) -> Vec<f64> {
        if self.n <= 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

impl std::str::FromStr for FitnessSweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:n, got {s:?}"));
        }
        let lo: f64 = parts[0].parse().map_err(|e| format!("lo: {e}"))?;
        let hi: f64 = parts[1].parse().map_err(|e| format!("hi: {e}"))?;
        let n: usize = parts[2].parse().map_err(|e| format!("n: {e}"))?;
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo || n == 0 {
            return Err(format!("invalid sweep {s:?}"));
        }
        Ok(Self { lo, hi, n })
    }
}

/// Evaluation protocol parameters.
#[derive(Clone, Copy, Debug)]
pub struct EvaluationParams {
    /// Predicted matches additionally need translation error within this
    /// gate; violators always count as false positives.
    pub pose_gate: f64,
    /// Ground-truth label: pairs with more overlap volume than this are
    /// true matches.
    pub match_volume: f64,
    /// Threshold used for the per-pair decision column.
    pub fitness_threshold: f64,
    pub sweep: FitnessSweep,
}

impl Default for EvaluationParams {
    fn default() -> Self {
        Self {
            pose_gate: 0.2,
            match_volume: 0.05,
            fitness_threshold: 0.02,
            sweep: FitnessSweep {
                lo: 0.0,
                hi: 0.05,
                n: 51,
            },
        }
    }
}

/// One evaluated pair.
#[derive(Clone, Debug)]
pub struct PairRecord {
    pub query_id: u32,
    pub target_id: u32,
    pub gt_overlap_volume: f64,
    pub gt_match: bool,
    pub inlier_count: usize,
    pub overlap_fraction: f64,
    pub fitness: Option<f64>,
    pub decision: MatchDecision,
    pub translation_error: Option<f64>,
    pub rotation_error_deg: Option<f64>,
}

impl PairRecord {
    /// Would this pair be predicted positive at the given threshold?
    fn matched_at(&self, threshold: f64) -> bool {
        matches!(self.fitness, Some(f) if f.abs() < threshold)
    }

    fn pose_ok(&self, pose_gate: f64) -> bool {
        matches!(self.translation_error, Some(e) if e <= pose_gate)
    }
}

/// One row of the precision-recall sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

#[derive(Clone, Debug)]
pub struct EvaluationReport {
    pub pairs: Vec<PairRecord>,
    pub pr: Vec<PrPoint>,
}

fn pr_points(pairs: &[PairRecord], sweep: &FitnessSweep, pose_gate: f64) -> Vec<PrPoint> {
    sweep
        .thresholds()
        .into_iter()
        .map(|threshold| {
            let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
            for pair in pairs {
                if pair.matched_at(threshold) {
                    // A predicted match with a failing pose is always a
                    // false positive, true overlap or not.
                    if pair.pose_ok(pose_gate) && pair.gt_match {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                } else if pair.gt_match {
                    fn_ += 1;
                } else {
                    tn += 1;
                }
            }
            let precision = if tp + fp > 0 {
                Some(tp as f64 / (tp + fp) as f64)
            } else {
                None
            };
            let recall = if tp + fn_ > 0 {
                Some(tp as f64 / (tp + fn_) as f64)
            } else {
                None
            };
            PrPoint {
                threshold,
                precision,
                recall,
                tp,
                fp,
                tn,
                fn_,
            }
        })
        .collect()
}

/// Exhaustive unordered pairwise evaluation with ground-truth labels from
/// overlap volume under the submaps' stored poses. The lower-id submap of
/// each pair acts as the query.
pub fn evaluate_collection(
    submaps: &[SdfSubmap],
    cfg: &PipelineConfig,
    eval: &EvaluationParams,
) -> Result<EvaluationReport, PipelineError> {
    if submaps.len() < 2 {
        return Err(PipelineError::InsufficientSubmaps(submaps.len()));
    }
    let prepared: Vec<PreparedSubmap> = submaps
        .par_iter()
        .map(|s| prepare_submap(s.clone(), cfg))
        .collect();

    let gt = evaluation_pairs(submaps, eval.match_volume);
    let pairs: Vec<PairRecord> = gt
        .par_iter()
        .map(|pair| {
            let result = match_pair(
                &prepared[pair.a],
                &prepared[pair.b],
                cfg,
                eval.fitness_threshold,
            );
            let (translation_error, rotation_error_deg) = match &result.transform {
                Some(t) => (
                    Some(t.translation_distance_to(&pair.t_ab)),
                    Some(t.rotation_angle_to(&pair.t_ab).to_degrees()),
                ),
                None => (None, None),
            };
            PairRecord {
                query_id: result.query_id,
                target_id: result.target_id,
                gt_overlap_volume: pair.overlap_volume,
                gt_match: pair.is_match,
                inlier_count: result.inlier_count,
                overlap_fraction: result.overlap_fraction,
                fitness: result.fitness,
                decision: result.decision,
                translation_error,
                rotation_error_deg,
            }
        })
        .collect();

    let pr = pr_points(&pairs, &eval.sweep, eval.pose_gate);
    Ok(EvaluationReport { pairs, pr })
}

/// Re-runs the evaluation once unrestricted and once per d_lim, refilling
/// the keypoint budget from the unfiltered response ordering each time.
pub fn ablate_freespace(
    submaps: &[SdfSubmap],
    cfg: &PipelineConfig,
    d_lims: &[f64],
    eval: &EvaluationParams,
) -> Result<Vec<(Option<f64>, EvaluationReport)>, PipelineError> {
    let mut out = Vec::with_capacity(d_lims.len() + 1);
    let baseline = {
        let mut c = cfg.clone();
        c.d_lim = None;
        evaluate_collection(submaps, &c, eval)?
    };
    out.push((None, baseline));
    for &d_lim in d_lims {
        let mut c = cfg.clone();
        c.d_lim = Some(d_lim);
        out.push((Some(d_lim), evaluate_collection(submaps, &c, eval)?));
    }
    Ok(out)
}

/// Area under the precision-recall curve by trapezoidal integration over
/// defined points, anchored at recall 0 with the precision of the
/// lowest-recall point. Used for relative comparisons between runs of the
/// same fixture.
pub fn area_under_pr(points: &[PrPoint]) -> f64 {
    let mut rp: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| match (p.recall, p.precision) {
            (Some(r), Some(pr)) => Some((r, pr)),
            _ => None,
        })
        .collect();
    if rp.is_empty() {
        return 0.0;
    }
    rp.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut prev = (0.0, rp[0].1);
    for (r, p) in rp {
        area += (r - prev.0) * (p + prev.1) / 2.0;
        prev = (r, p);
    }
    area
}

// ── CSV emission ────────────────────────────────────────────────────────

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `pairs.csv`: one row per evaluated pair.
pub fn pairs_csv(pairs: &[PairRecord]) -> String {
    let mut out = String::from(
        "query_id,target_id,gt_overlap_volume,gt_match,inlier_count,overlap_fraction,fitness,decision,translation_error,rotation_error_deg\n",
    );
    for p in pairs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            p.query_id,
            p.target_id,
            p.gt_overlap_volume,
            p.gt_match,
            p.inlier_count,
            p.overlap_fraction,
            fmt_opt(p.fitness),
            p.decision.as_str(),
            fmt_opt(p.translation_error),
            fmt_opt(p.rotation_error_deg),
        ));
    }
    out
}

/// `pr.csv`: one row per sweep threshold.
pub fn pr_csv(points: &[PrPoint]) -> String {
    let mut out = String::from("threshold,precision,recall,tp,fp,tn,fn\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.threshold,
            fmt_opt(p.precision),
            fmt_opt(p.recall),
            p.tp,
            p.fp,
            p.tn,
            p.fn_,
        ));
    }
    out
}

/// `keypoints.csv`: index, position, response and SDF value per keypoint.
pub fn keypoints_csv(keypoints: &[Keypoint]) -> String {
    let mut out = String::from("i,j,k,x,y,z,response,sdf_value\n");
    for kp in keypoints {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            kp.index.i,
            kp.index.j,
            kp.index.k,
            kp.position.x,
            kp.position.y,
            kp.position.z,
            kp.response,
            kp.sdf_value,
        ));
    }
    out
}

/// LRF debug dump: keypoint index, ordinal, rotation entries (row-major),
/// eigenvalues.
pub fn lrfs_csv(features: &FeatureSet) -> String {
    let mut out =
        String::from("i,j,k,ordinal,r00,r01,r02,r10,r11,r12,r20,r21,r22,eig1,eig2,eig3\n");
    let mut prev_kp = usize::MAX;
    let mut ordinal = 0usize;
    for (kp_idx, lrf) in &features.lrfs {
        if *kp_idx != prev_kp {
            ordinal = 0;
            prev_kp = *kp_idx;
        }
        let kp = &features.keypoints[*kp_idx];
        let r = &lrf.rotation;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            kp.index.i,
            kp.index.j,
            kp.index.k,
            ordinal,
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            lrf.eigenvalues[0],
            lrf.eigenvalues[1],
            lrf.eigenvalues[2],
        ));
        ordinal += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::MatchDecision;

    fn record(gt: bool, fitness: Option<f64>, trans_err: Option<f64>) -> PairRecord {
        PairRecord {
            query_id: 0,
            target_id: 1,
            gt_overlap_volume: if gt { 1.0 } else { 0.0 },
            gt_match: gt,
            inlier_count: 0,
            overlap_fraction: 0.5,
            fitness,
            decision: MatchDecision::NoCandidate,
            translation_error: trans_err,
            rotation_error_deg: trans_err.map(|_| 0.0),
        }
    }

    #[test]
    fn sweep_parses_and_spaces_thresholds() {
        let sweep: FitnessSweep = "0:0.1:11".parse().unwrap();
        let t = sweep.thresholds();
        assert_eq!(t.len(), 11);
        assert_eq!(t[0], 0.0);
        assert!((t[10] - 0.1).abs() < 1e-15);
        assert!("0.1:0:5".parse::<FitnessSweep>().is_err());
        assert!("1:2".parse::<FitnessSweep>().is_err());
        assert!("a:b:c".parse::<FitnessSweep>().is_err());
    }

    #[test]
    fn pr_identities_hold() {
        let pairs = vec![
            record(true, Some(-0.01), Some(0.05)),
            record(true, Some(-0.04), Some(0.05)),
            record(false, Some(-0.02), Some(0.05)),
            record(false, None, None),
            record(true, None, None),
        ];
        let sweep = FitnessSweep {
            lo: 0.0,
            hi: 0.05,
            n: 6,
        };
        let points = pr_points(&pairs, &sweep, 0.2);
        for p in &points {
            assert_eq!(p.tp + p.fp + p.tn + p.fn_, pairs.len());
            if let Some(precision) = p.precision {
                assert!((precision * (p.tp + p.fp) as f64 - p.tp as f64).abs() < 1e-12);
            } else {
                assert_eq!(p.tp + p.fp, 0);
            }
            if let Some(recall) = p.recall {
                assert!((recall * (p.tp + p.fn_) as f64 - p.tp as f64).abs() < 1e-12);
            }
        }
        // Monotone positives as the threshold loosens.
        let mut prev = 0;
        for p in &points {
            assert!(p.tp + p.fp >= prev);
            prev = p.tp + p.fp;
        }
    }

    #[test]
    fn pose_gate_violation_is_always_fp() {
        let pairs = vec![record(true, Some(-0.01), Some(0.5))];
        let sweep = FitnessSweep {
            lo: 0.05,
            hi: 0.05,
            n: 1,
        };
        let points = pr_points(&pairs, &sweep, 0.2);
        assert_eq!(points[0].fp, 1);
        assert_eq!(points[0].tp, 0);
    }

    #[test]
    fn no_positives_leaves_precision_undefined() {
        let pairs = vec![record(false, None, None), record(false, None, None)];
        let sweep = FitnessSweep {
            lo: 0.0,
            hi: 0.1,
            n: 2,
        };
        let points = pr_points(&pairs, &sweep, 0.2);
        for p in points {
            assert_eq!(p.precision, None);
            assert_eq!(p.recall, None); // no true positives exist either
            assert_eq!(p.tn, 2);
        }
    }

    #[test]
    fn aupr_of_perfect_detector_is_one() {
        let points = vec![
            PrPoint {
                threshold: 0.01,
                precision: Some(1.0),
                recall: Some(0.5),
                tp: 1,
                fp: 0,
                tn: 1,
                fn_: 1,
            },
            PrPoint {
                threshold: 0.05,
                precision: Some(1.0),
                recall: Some(1.0),
                tp: 2,
                fp: 0,
                tn: 1,
                fn_: 0,
            },
        ];
        assert!((area_under_pr(&points) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_emission_is_stable() {
        let pairs = vec![record(true, Some(-0.0125), Some(0.01))];
        let a = pairs_csv(&pairs);
        let b = pairs_csv(&pairs);
        assert_eq!(a, b);
        assert!(a.starts_with("query_id,"));
        assert!(a.contains("-0.0125"));
        // Undefined fields are empty cells.
        let undef = vec![record(false, None, None)];
        let csv = pairs_csv(&undef);
        assert!(csv.lines().nth(1).unwrap().contains(",,"));
    }
}
