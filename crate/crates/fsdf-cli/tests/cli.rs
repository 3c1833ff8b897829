//! End-to-end runs of the `fsdf` binary.

use std::path::Path;
use std::process::Command;

fn fsdf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fsdf"))
}

const SCENE: &str = "\
voxel_size 0.05
truncation 0.3
max_distance 0.75
noise_sigma 0.01
seed 7
plane 0 0 0  0 0 1
box 0.6 0.2 0.25   0.3 0.22 0.25
box -0.55 -0.45 0.15  0.2 0.3 0.15
box -0.2 0.7 0.45  0.15 0.15 0.45
sphere 0.4 -0.65 0.3 0.25
sphere -0.6 0.35 0.28 0.26
sphere 0.9 0.6 0.2 0.18
bounds -1.6 -1.6 -0.3  1.8 1.8 1.4
viewpoint 0 0 0.55  0 0 0  1.3 1.3 0.8
viewpoint 0.35 0.2 0.55  25 0 0  1.3 1.3 0.8
";

fn write_scene(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("scene.txt");
    std::fs::write(&path, SCENE).unwrap();
    path
}

#[test]
fn synth_features_match_evaluate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path());
    let maps = tmp.path().join("maps");

    let out = fsdf()
        .args(["synth", "--scene"])
        .arg(&scene)
        .arg("--out-dir")
        .arg(&maps)
        .output()
        .unwrap();
    assert!(out.status.success(), "synth failed: {out:?}");
    assert!(maps.join("submap_000.fsdf").exists());
    assert!(maps.join("submap_001.fsdf").exists());

    // Features with CSV and binary dumps.
    let kp_csv = tmp.path().join("keypoints.csv");
    let desc_bin = tmp.path().join("descriptors.bin");
    let lrf_csv = tmp.path().join("lrfs.csv");
    let out = fsdf()
        .args(["features", "--submap"])
        .arg(maps.join("submap_000.fsdf"))
        .arg("--out-keypoints")
        .arg(&kp_csv)
        .arg("--out-descriptors")
        .arg(&desc_bin)
        .arg("--out-lrfs")
        .arg(&lrf_csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "features failed: {out:?}");
    let kp_text = std::fs::read_to_string(&kp_csv).unwrap();
    assert!(kp_text.starts_with("i,j,k,x,y,z,response,sdf_value"));
    assert!(kp_text.lines().count() > 5);
    assert!(std::fs::metadata(&desc_bin).unwrap().len() > 12);
    assert!(std::fs::read_to_string(&lrf_csv).unwrap().lines().count() > 1);

    // Pairwise match.
    let out = fsdf()
        .args(["match", "--query"])
        .arg(maps.join("submap_000.fsdf"))
        .arg("--target")
        .arg(maps.join("submap_001.fsdf"))
        .args([
            "--k-dist",
            "0.05",
            "--iters",
            "30000",
            "--seed",
            "1",
            "--fitness-threshold",
            "0.03",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "match failed: {out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("decision=matched"), "stdout: {stdout}");

    // Evaluation, twice: identical CSV bytes.
    let run_eval = |out_dir: &Path| {
        let out = fsdf()
            .args(["evaluate", "--dir"])
            .arg(&maps)
            .arg("--out-dir")
            .arg(out_dir)
            .args([
                "--k-dist",
                "0.05",
                "--iters",
                "30000",
                "--seed",
                "1",
                "--fitness-sweep",
                "0:0.05:11",
                "--fitness-threshold",
                "0.03",
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "evaluate failed: {out:?}");
    };
    let eval_a = tmp.path().join("eval_a");
    let eval_b = tmp.path().join("eval_b");
    run_eval(&eval_a);
    run_eval(&eval_b);
    for name in ["pairs.csv", "pr.csv"] {
        let a = std::fs::read(eval_a.join(name)).unwrap();
        let b = std::fs::read(eval_b.join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs between runs");
    }
    let pairs = std::fs::read_to_string(eval_a.join("pairs.csv")).unwrap();
    assert!(pairs.contains("matched"), "pairs.csv: {pairs}");
}

#[test]
fn build_ingests_xyz_pointclouds() {
    let tmp = tempfile::tempdir().unwrap();
    // A coarse unit sphere sampled from its center.
    let mut cloud = String::new();
    let n = 4000;
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0_f64 - z * z).sqrt();
        let phi = 2.399963229728653 * i as f64;
        cloud.push_str(&format!("{} {} {}\n", r * phi.cos(), r * phi.sin(), z));
    }
    let cloud_path = tmp.path().join("sphere.xyz");
    std::fs::write(&cloud_path, cloud).unwrap();

    let out_path = tmp.path().join("sphere.fsdf");
    let out = fsdf()
        .args(["build", "--cloud"])
        .arg(&cloud_path)
        .arg("--out")
        .arg(&out_path)
        .args(["--voxel-size", "0.1", "--truncation", "0.3"])
        .output()
        .unwrap();
    assert!(out.status.success(), "build failed: {out:?}");
    assert!(std::fs::metadata(&out_path).unwrap().len() > 100);

    // The archive loads back and has a surface.
    let features = fsdf()
        .args(["features", "--submap"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(features.status.success());
}

#[test]
fn error_categories_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();

    // Usage error: k_dist missing.
    let out = fsdf()
        .args(["match", "--query", "a.fsdf", "--target", "b.fsdf"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(64), "usage: {out:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("error (usage)"));

    // Data error: malformed archive.
    let bad = tmp.path().join("bad.fsdf");
    std::fs::write(&bad, b"not an archive").unwrap();
    let out = fsdf()
        .args(["features", "--submap"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(65), "data: {out:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("error (data)"));

    // IO error: missing scene file.
    let out = fsdf()
        .args(["synth", "--scene"])
        .arg(tmp.path().join("nope.txt"))
        .arg("--out-dir")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(66), "io: {out:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("error (io)"));

    // Clap usage errors exit 2 with a message.
    let out = fsdf().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ablate_writes_per_dlim_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path());
    let maps = tmp.path().join("maps");
    assert!(fsdf()
        .args(["synth", "--scene"])
        .arg(&scene)
        .arg("--out-dir")
        .arg(&maps)
        .status()
        .unwrap()
        .success());

    let out_dir = tmp.path().join("ablate");
    let out = fsdf()
        .args(["ablate", "--dir"])
        .arg(&maps)
        .arg("--out-dir")
        .arg(&out_dir)
        .args([
            "--k-dist",
            "0.05",
            "--iters",
            "20000",
            "--seed",
            "2",
            "--d-lims",
            "0.30,0.05",
            "--fitness-sweep",
            "0:0.05:6",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "ablate failed: {out:?}");
    for name in [
        "pr_baseline.csv",
        "pr_dlim_0.3.csv",
        "pr_dlim_0.05.csv",
        "pairs_baseline.csv",
        "pairs_dlim_0.3.csv",
        "pairs_dlim_0.05.csv",
    ] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("baseline: aupr"));
}
