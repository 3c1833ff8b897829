//! `fsdf`: build SDF submaps, extract freespace features, and match or
//! evaluate submap collections.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use fsdf::esdf::compute_esdf;
use fsdf::integrate::integrate_pointcloud;
use fsdf::io::archive::{load_submap, save_submap};
use fsdf::io::{load_pointcloud, parse_config, parse_scene_spec};
use fsdf::pipeline::{
    ablate_freespace, area_under_pr, evaluate_collection, keypoints_csv, lrfs_csv, match_pair,
    pairs_csv, pr_csv, prepare_submap, EvaluationParams, FitnessSweep, PipelineConfig,
};
use fsdf::{build_synthetic_scene, carve_submaps, RigidTransform, SdfSubmap};

mod errors;
use errors::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "fsdf",
    about = "SDF-native place recognition: submaps, freespace features, registration",
    version
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize or carve a synthetic scene into submap archives.
    Synth(SynthArgs),
    /// Integrate a pointcloud into a TSDF, extend it to an ESDF, archive it.
    Build(BuildArgs),
    /// Extract keypoints, LRFs and descriptors from a submap archive.
    Features(FeaturesArgs),
    /// Match one query submap against one target submap.
    Match(MatchArgs),
    /// Exhaustive pairwise evaluation of a submap collection with PR sweep.
    Evaluate(EvaluateArgs),
    /// Evaluation repeated under keypoint surface-distance restrictions.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scene spec file (see README for the grammar).
    #[arg(long)]
    scene: PathBuf,
    /// Output directory for submap_###.fsdf archives.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Input pointcloud (.ply ascii, .xyz, .txt).
    #[arg(long)]
    cloud: PathBuf,
    /// Output archive path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    voxel_size: f64,
    #[arg(long, default_value_t = 0.3)]
    truncation: f64,
    /// ESDF extension radius; defaults to 15 voxels.
    #[arg(long)]
    max_distance: Option<f64>,
    /// Sensor origin "x,y,z" in the submap frame.
    #[arg(long, default_value = "0,0,0")]
    origin: String,
    /// Submap id stored alongside the archive.
    #[arg(long, default_value_t = 0)]
    id: u32,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Key=value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RANSAC inlier radius in meters (scene-scale, required for matching).
    #[arg(long)]
    k_dist: Option<f64>,
    /// RANSAC iteration budget.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Neighbors per query descriptor.
    #[arg(long)]
    knn: Option<usize>,
    /// Minimum iso-point overlap fraction.
    #[arg(long)]
    k_overlap: Option<f64>,
    #[arg(long)]
    max_keypoints: Option<usize>,
    /// Restrict keypoints to |Φ| < d_lim meters.
    #[arg(long)]
    d_lim: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self, needs_k_dist: bool) -> CliResult<PipelineConfig> {
        let mut cfg = PipelineConfig::new(0.0);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            cfg = parse_config(&text, &cfg).map_err(|e| CliError::Data(e.to_string()))?;
        }
        if let Some(v) = self.k_dist {
            cfg.k_dist = v;
        }
        if let Some(v) = self.iters {
            cfg.ransac_iterations = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.knn {
            cfg.knn = v;
        }
        if let Some(v) = self.k_overlap {
            cfg.k_overlap = v;
        }
        if let Some(v) = self.max_keypoints {
            cfg.max_keypoints = v;
        }
        if let Some(v) = self.d_lim {
            cfg.d_lim = Some(v);
        }
        if needs_k_dist && (cfg.k_dist <= 0.0 || cfg.k_dist.is_nan()) {
            return Err(CliError::Usage(
                "k_dist must be set via --k-dist or the config file".into(),
            ));
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    submap: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out_keypoints: Option<PathBuf>,
    #[arg(long)]
    out_descriptors: Option<PathBuf>,
    #[arg(long)]
    out_lrfs: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Fitness magnitude below which the pair is declared matched.
    #[arg(long, default_value_t = 0.02)]
    fitness_threshold: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of submap archives (*.fsdf), poses taken as ground truth.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Fitness threshold sweep lo:hi:n for the PR table.
    #[arg(long, default_value = "0:0.05:51")]
    fitness_sweep: FitnessSweep,
    /// Translation gate for predicted matches, meters.
    #[arg(long, default_value_t = 0.2)]
    pose_gate: f64,
    /// Ground-truth overlap volume threshold, m³.
    #[arg(long, default_value_t = 0.05)]
    match_volume: f64,
    /// Threshold for the decision column of pairs.csv.
    #[arg(long, default_value_t = 0.02)]
    fitness_threshold: f64,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    eval: EvaluateArgs,
    /// Surface-distance restrictions to sweep, meters.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.30, 0.25, 0.20, 0.15, 0.10, 0.05])]
    d_lims: Vec<f64>,
}

fn parse_vec3(s: &str) -> CliResult<Vector3<f64>> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("expected x,y,z, got {s:?}")));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(parts.iter()) {
        *slot = p
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad coordinate {p:?}")))?;
    }
    Ok(Vector3::new(v[0], v[1], v[2]))
}

fn run_synth(args: &SynthArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.scene)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.scene.display())))?;
    let spec = parse_scene_spec(&text).map_err(|e| CliError::Data(e.to_string()))?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Io(e.to_string()))?;

    let submaps = if spec.viewpoints.is_empty() {
        vec![build_synthetic_scene(&spec).map_err(|e| CliError::Data(e.to_string()))?]
    } else {
        carve_submaps(&spec).map_err(|e| CliError::Data(e.to_string()))?
    };
    for submap in &submaps {
        let path = args.out_dir.join(format!("submap_{:03}.fsdf", submap.id));
        save_submap(&path, submap).map_err(|e| CliError::Io(e.to_string()))?;
        println!(
            "wrote {} ({} voxels, voxel_size {})",
            path.display(),
            submap.len(),
            submap.voxel_size()
        );
    }
    Ok(())
}

fn run_build(args: &BuildArgs) -> CliResult<()> {
    let points = load_pointcloud(&args.cloud).map_err(|e| CliError::Data(e.to_string()))?;
    let origin = parse_vec3(&args.origin)?;
    let max_distance = args.max_distance.unwrap_or(15.0 * args.voxel_size);
    let mut submap = SdfSubmap::new(
        args.id,
        args.voxel_size,
        args.truncation,
        RigidTransform::identity(),
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let stats = integrate_pointcloud(&mut submap, &origin, &points)
        .map_err(|e| CliError::Processing(e.to_string()))?;
    if stats.rejected_nonfinite > 0 {
        eprintln!("rejected {} non-finite points", stats.rejected_nonfinite);
    }
    let esdf =
        compute_esdf(&submap, max_distance).map_err(|e| CliError::Processing(e.to_string()))?;
    save_submap(&args.out, &esdf).map_err(|e| CliError::Io(e.to_string()))?;
    println!(
        "wrote {} ({} voxels from {} points)",
        args.out.display(),
        esdf.len(),
        points.len()
    );
    Ok(())
}

fn run_features(args: &FeaturesArgs) -> CliResult<()> {
    let cfg = args.config.resolve(false)?;
    let submap = load_submap(&args.submap, 0).map_err(|e| CliError::Data(e.to_string()))?;
    let prepared = prepare_submap(submap, &cfg);
    let f = &prepared.features;
    println!(
        "keypoints {}  lrfs {}  descriptors {}",
        f.keypoints.len(),
        f.lrfs.len(),
        f.descriptors.len()
    );
    if let Some(path) = &args.out_keypoints {
        std::fs::write(path, keypoints_csv(&f.keypoints))
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    if let Some(path) = &args.out_lrfs {
        std::fs::write(path, lrfs_csv(f)).map_err(|e| CliError::Io(e.to_string()))?;
    }
    if let Some(path) = &args.out_descriptors {
        let bytes = fsdf::io::write_descriptor_dump(&f.descriptors, cfg.n_div)
            .map_err(|e| CliError::Processing(e.to_string()))?;
        std::fs::write(path, bytes).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn run_match(args: &MatchArgs) -> CliResult<()> {
    let cfg = args.config.resolve(true)?;
    let query = load_submap(&args.query, 0).map_err(|e| CliError::Data(e.to_string()))?;
    let target = load_submap(&args.target, 1).map_err(|e| CliError::Data(e.to_string()))?;
    let query = prepare_submap(query, &cfg);
    let target = prepare_submap(target, &cfg);
    let result = match_pair(&query, &target, &cfg, args.fitness_threshold);
    let fitness = result
        .fitness
        .map(|f| f.to_string())
        .unwrap_or_else(|| "n/a".into());
    println!(
        "decision={} inliers={} overlap={:.4} fitness={}",
        result.decision.as_str(),
        result.inlier_count,
        result.overlap_fraction,
        fitness
    );
    if let Some(t) = &result.transform {
        println!(
            "transform (target->query): t=[{} {} {}] R={:?}",
            t.translation.x,
            t.translation.y,
            t.translation.z,
            t.rotation.as_slice()
        );
    }
    Ok(())
}

fn load_collection(dir: &Path) -> CliResult<Vec<fsdf::SdfSubmap>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "fsdf"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "no .fsdf archives in {}",
            dir.display()
        )));
    }
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| load_submap(p, i as u32).map_err(|e| CliError::Data(e.to_string())))
        .collect()
}

fn run_evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let cfg = args.config.resolve(true)?;
    let submaps = load_collection(&args.dir)?;
    let eval = EvaluationParams {
        pose_gate: args.pose_gate,
        match_volume: args.match_volume,
        fitness_threshold: args.fitness_threshold,
        sweep: args.fitness_sweep,
    };
    let report = evaluate_collection(&submaps, &cfg, &eval)
        .map_err(|e| CliError::Processing(e.to_string()))?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(args.out_dir.join("pairs.csv"), pairs_csv(&report.pairs))
        .map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(args.out_dir.join("pr.csv"), pr_csv(&report.pr))
        .map_err(|e| CliError::Io(e.to_string()))?;
    println!(
        "evaluated {} pairs over {} submaps; aupr {}",
        report.pairs.len(),
        submaps.len(),
        area_under_pr(&report.pr)
    );
    Ok(())
}

fn run_ablate(args: &AblateArgs) -> CliResult<()> {
    let cfg = args.eval.config.resolve(true)?;
    let submaps = load_collection(&args.eval.dir)?;
    let eval = EvaluationParams {
        pose_gate: args.eval.pose_gate,
        match_volume: args.eval.match_volume,
        fitness_threshold: args.eval.fitness_threshold,
        sweep: args.eval.fitness_sweep,
    };
    let reports = ablate_freespace(&submaps, &cfg, &args.d_lims, &eval)
        .map_err(|e| CliError::Processing(e.to_string()))?;
    std::fs::create_dir_all(&args.eval.out_dir).map_err(|e| CliError::Io(e.to_string()))?;
    for (d_lim, report) in &reports {
        let tag = match d_lim {
            None => "baseline".to_string(),
            Some(v) => format!("dlim_{v}"),
        };
        std::fs::write(
            args.eval.out_dir.join(format!("pairs_{tag}.csv")),
            pairs_csv(&report.pairs),
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(
            args.eval.out_dir.join(format!("pr_{tag}.csv")),
            pr_csv(&report.pr),
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
        println!("{tag}: aupr {}", area_under_pr(&report.pr));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error (usage): cannot configure {threads} threads: {e}");
            return ExitCode::from(64);
        }
    }
    let result = match &cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Build(args) => run_build(args),
        Command::Features(args) => run_features(args),
        Command::Match(args) => run_match(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Ablate(args) => run_ablate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {}", e.category(), e);
            ExitCode::from(e.exit_code())
        }
    }
}
