//! End-to-end command tests: every subcommand runs against real files in a
//! temp directory, and the exit-code contract is pinned.

use std::path::{Path, PathBuf};

use clap::Parser;

use loki::assets::synthetic::{generate_synthetic_clip, SyntheticClipConfig};
use loki::assets::{save_clip_bundle, ClipBundle, FrameParams};
use loki::cli::{run_command, Cli, CliError};
use loki::driver_map::DriverMap;
use loki::{Camera, TensorContainer};

fn run(args: &[&str]) -> Result<(), CliError> {
    let cli = Cli::try_parse_from(args).expect("arguments must parse");
    run_command(cli.command)
}

fn gen_assets(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join(format!("assets_{seed}.lka"));
    run(&[
        "loki",
        "gen-assets",
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ])
    .unwrap();
    path
}

fn synthetic_clip(dir: &Path, name: &str, seed: u64, frames: usize) -> PathBuf {
    let clip = generate_synthetic_clip(&SyntheticClipConfig {
        seed,
        n_shape_coeffs: 8,
        n_expr_coeffs: 6,
        n_frames: frames,
        image_width: 64,
        image_height: 64,
        ..Default::default()
    });
    let path = dir.join(name);
    save_clip_bundle(&clip, &path).unwrap();
    path
}

#[test]
fn gen_assets_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_assets(dir.path(), 7);
    let b_path = dir.path().join("again.lka");
    run(&[
        "loki",
        "gen-assets",
        "--seed",
        "7",
        "--out",
        b_path.to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b_path).unwrap());
}

#[test]
fn gen_assets_requires_out_flag() {
    assert!(Cli::try_parse_from(["loki", "gen-assets", "--seed", "7"]).is_err());
}

#[test]
fn unknown_flags_are_rejected() {
    assert!(Cli::try_parse_from(["loki", "gen-assets", "--out", "x.lka", "--bogus", "1"]).is_err());
}

#[test]
fn gen_assets_container_has_all_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_assets(dir.path(), 0);
    let c = TensorContainer::read_file(&path).unwrap();
    for name in [
        "template_vertices",
        "faces",
        "shape_basis",
        "expr_basis",
        "pose_corrective_basis",
        "blend_weights",
        "joint_regressor",
        "joint_parents",
        "head_vertex_mask",
        "inner_mouth_count",
        "lip_anchor_index",
        "deformation_sigma",
    ] {
        assert!(c.get(name).is_some(), "missing entry {name}");
    }
}

#[test]
fn eval_mesh_writes_posed_mesh_container() {
    let dir = tempfile::tempdir().unwrap();
    let assets = gen_assets(dir.path(), 1);
    let clip = synthetic_clip(dir.path(), "clip.json", 5, 3);
    let out = dir.path().join("mesh.lka");
    run(&[
        "loki",
        "eval-mesh",
        "--assets",
        assets.to_str().unwrap(),
        "--clip",
        clip.to_str().unwrap(),
        "--frame",
        "2",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let c = TensorContainer::read_file(&out).unwrap();
    let (vshape, _) = c.f64s("vertices").unwrap();
    assert_eq!(vshape, &[162 + 20, 3]);
    let (dshape, d) = c.f64s("delta_expr").unwrap();
    assert_eq!(dshape, vshape);
    // Cavity rows at the tail are exactly zero.
    assert!(d[162 * 3..].iter().all(|&x| x == 0.0));
    let (jshape, _) = c.f64s("joints").unwrap();
    assert_eq!(jshape, &[5, 3]);
}

#[test]
fn render_map_shapes_modes_and_viz() {
    let dir = tempfile::tempdir().unwrap();
    let assets = gen_assets(dir.path(), 2);
    let clip = synthetic_clip(dir.path(), "clip.json", 6, 2);
    let out = dir.path().join("map.lka");
    let viz = dir.path().join("viz");
    let raster_dir = dir.path().join("raster");
    run(&[
        "loki",
        "render-map",
        "--assets",
        assets.to_str().unwrap(),
        "--clip",
        clip.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--resolution",
        "48x40",
        "--viz",
        viz.to_str().unwrap(),
        "--raster-debug",
        raster_dir.to_str().unwrap(),
    ])
    .unwrap();
    let map = DriverMap::read_file(&out).unwrap();
    assert_eq!(map.tensor.shape(), &[45, 40, 48]);
    assert!(viz.join("deformation_magnitude.png").exists());
    assert!(viz.join("deformation_magnitude.json").exists());
    assert!(viz.join("posenc_sin_x_k0.png").exists());
    assert!(viz.join("posenc_sin_x_k6.png").exists());
    assert!(raster_dir.join("face_index.pgm").exists());
    assert!(raster_dir.join("depth.pgm").exists());

    let ablated = dir.path().join("no_pe.lka");
    run(&[
        "loki",
        "render-map",
        "--assets",
        assets.to_str().unwrap(),
        "--clip",
        clip.to_str().unwrap(),
        "--mode",
        "no_posenc",
        "--out",
        ablated.to_str().unwrap(),
        "--resolution",
        "48x40",
    ])
    .unwrap();
    let ablated = DriverMap::read_file(&ablated).unwrap();
    assert!(ablated
        .tensor
        .slice(ndarray::s![..42, .., ..])
        .iter()
        .all(|&v| v == 0.0));
    assert_eq!(
        ablated.tensor.slice(ndarray::s![42.., .., ..]),
        map.tensor.slice(ndarray::s![42.., .., ..])
    );
}

#[test]
fn neutral_frame_magnitude_png_is_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let assets = gen_assets(dir.path(), 10);
    // An all-zero clip: no expression, so no deformation anywhere.
    let clip = ClipBundle {
        shape: vec![0.0; 8],
        camera: Camera::front_facing(64, 64, 2.5),
        fps: 25.0,
        frames: vec![FrameParams::zero(6)],
    };
    let clip_path = dir.path().join("neutral.json");
    save_clip_bundle(&clip, &clip_path).unwrap();
    let viz = dir.path().join("viz");
    run(&[
        "loki",
        "render-map",
        "--assets",
        assets.to_str().unwrap(),
        "--clip",
        clip_path.to_str().unwrap(),
        "--out",
        dir.path().join("map.lka").to_str().unwrap(),
        "--viz",
        viz.to_str().unwrap(),
    ])
    .unwrap();
    let img = image::open(viz.join("deformation_magnitude.png"))
        .unwrap()
        .to_rgb8();
    let first = *img.get_pixel(0, 0);
    assert!(
        img.pixels().all(|p| *p == first),
        "magnitude image not uniform"
    );
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(viz.join("deformation_magnitude.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["max"], 0.0);
}

#[test]
fn retarget_with_same_bundle_matches_render_map() {
    let dir = tempfile::tempdir().unwrap();
    let assets = gen_assets(dir.path(), 3);
    let clip = synthetic_clip(dir.path(), "clip.json", 7, 4);
    let out_dir = dir.path().join("maps");
    run(&[
        "loki",
        "retarget",
        "--assets",
        assets.to_str().unwrap(),
        "--ref-clip",
        clip.to_str().unwrap(),
        "--drv-clip",
        clip.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .unwrap();

    for t in 0..4 {
        let own = dir.path().join(format!("own_{t}.lka"));
        run(&[
            "loki",
            "render-map",
            "--assets",
            assets.to_str().unwrap(),
            "--clip",
            clip.to_str().unwrap(),
            "--frame",
            &t.to_string(),
            "--out",
            own.to_str().unwrap(),
        ])
        .unwrap();
        let retargeted = out_dir.join(format!("map_{t:04}.lka"));
        assert_eq!(
            std::fs::read(&retargeted).unwrap(),
            std::fs::read(&own).unwrap(),
            "frame {t} differs"
        );
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["frames"], 4);
    let ref_hash = manifest["reference_bundle_sha256"].as_str().unwrap();
    let drv_hash = manifest["driver_bundle_sha256"].as_str().unwrap();
    assert_eq!(ref_hash.len(), 64);
    assert_eq!(ref_hash, drv_hash);
}

#[test]
fn retarget_produces_one_map_per_driver_frame() {
    let dir = tempfile::tempdir().unwrap();
    let assets = gen_assets(dir.path(), 4);
    let reference = synthetic_clip(dir.path(), "ref.json", 8, 2);
    let driver = synthetic_clip(dir.path(), "drv.json", 9, 16);
    let out_dir = dir.path().join("maps");
    run(&[
        "loki",
        "retarget",
        "--assets",
        assets.to_str().unwrap(),
        "--ref-clip",
        reference.to_str().unwrap(),
        "--drv-clip",
        driver.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--resolution",
        "32x32",
    ])
    .unwrap();
    let maps: Vec<_> = std::fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "lka"))
        .collect();
    assert_eq!(maps.len(), 16);
}

fn drift_clips(dir: &Path) -> (PathBuf, PathBuf) {
    let mut target_frames = Vec::new();
    let mut pred_frames = Vec::new();
    for t in 0..16 {
        let base = FrameParams::zero(6);
        target_frames.push(base.clone());
        let mut drifted = base;
        drifted.global_rotation = [0.0, 0.0, (t as f64).to_radians()];
        pred_frames.push(drifted);
    }
    let camera = Camera::front_facing(64, 64, 2.5);
    let make = |frames: Vec<FrameParams>| ClipBundle {
        shape: vec![0.0; 8],
        camera: camera.clone(),
        fps: 25.0,
        frames,
    };
    let target = dir.join("target.json");
    let pred = dir.join("pred.json");
    save_clip_bundle(&make(target_frames), &target).unwrap();
    save_clip_bundle(&make(pred_frames), &pred).unwrap();
    (target, pred)
}

#[test]
fn metric_hpf_drift_fixture_reports_7_5_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let (target, pred) = drift_clips(dir.path());
    let csv = dir.path().join("hpf.csv");
    let json = dir.path().join("hpf.json");
    run(&[
        "loki",
        "metric",
        "hpf",
        "--target",
        target.to_str().unwrap(),
        "--pred",
        pred.to_str().unwrap(),
        "--sample-id",
        "drift",
        "--out-csv",
        csv.to_str().unwrap(),
        "--out-json",
        json.to_str().unwrap(),
    ])
    .unwrap();

    let aggregate: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(aggregate["metric"], "hpf");
    assert_eq!(aggregate["n"], 16);
    assert!((aggregate["mean"].as_f64().unwrap() - 7.5).abs() < 1e-9);

    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sample_id,frame,value");
    assert_eq!(lines.len(), 17);
    assert!(lines[1].starts_with("drift,0,0"));
    let row5: Vec<&str> = lines[6].split(',').collect();
    assert!((row5[2].parse::<f64>().unwrap() - 5.0).abs() < 1e-9);
}

#[test]
fn metric_self_pairs_report_zero_for_both_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let assets = gen_assets(dir.path(), 5);
    let clip = synthetic_clip(dir.path(), "clip.json", 11, 4);
    for metric in ["hpf", "hef"] {
        let json = dir.path().join(format!("{metric}.json"));
        run(&[
            "loki",
            "metric",
            metric,
            "--assets",
            assets.to_str().unwrap(),
            "--target",
            clip.to_str().unwrap(),
            "--pred",
            clip.to_str().unwrap(),
            "--out-json",
            json.to_str().unwrap(),
        ])
        .unwrap();
        let aggregate: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
        assert_eq!(aggregate["mean"], 0.0, "{metric} self-pair");
    }
}

#[test]
fn metric_frame_count_mismatch_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = synthetic_clip(dir.path(), "a.json", 12, 4);
    let b = synthetic_clip(dir.path(), "b.json", 13, 5);
    let err = run(&[
        "loki",
        "metric",
        "hpf",
        "--target",
        a.to_str().unwrap(),
        "--pred",
        b.to_str().unwrap(),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains('4') && err.to_string().contains('5'));
}

#[test]
fn metric_hef_requires_assets() {
    let dir = tempfile::tempdir().unwrap();
    let clip = synthetic_clip(dir.path(), "c.json", 14, 2);
    let err = run(&[
        "loki",
        "metric",
        "hef",
        "--target",
        clip.to_str().unwrap(),
        "--pred",
        clip.to_str().unwrap(),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn missing_input_file_is_io_error() {
    let err = run(&[
        "loki",
        "eval-mesh",
        "--assets",
        "/nonexistent/assets.lka",
        "--clip",
        "/nonexistent/clip.json",
        "--out",
        "/tmp/out.lka",
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn calibrate_synthetic_corpus_orders_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let assets = gen_assets(dir.path(), 6);
    let json = dir.path().join("calibration.json");
    run(&[
        "loki",
        "calibrate",
        "--assets",
        assets.to_str().unwrap(),
        "--synthetic",
        "6",
        "--frames",
        "6",
        "--pairs",
        "8",
        "--seed",
        "3",
        "--resolution",
        "48x48",
        "--out-json",
        json.to_str().unwrap(),
    ])
    .unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let anchors = &v["anchors"];
    assert_eq!(anchors["self_anchor"], 0.0);
    let near = anchors["near_frame"]["mean"].as_f64().unwrap();
    let cross = anchors["no_skill"]["mean"].as_f64().unwrap();
    let ceiling = anchors["ceiling"].as_f64().unwrap();
    assert!(near <= cross && cross <= ceiling);
}

#[test]
fn calibrate_requires_exactly_one_corpus_source() {
    let dir = tempfile::tempdir().unwrap();
    let assets = gen_assets(dir.path(), 8);
    let err = run(&["loki", "calibrate", "--assets", assets.to_str().unwrap()]).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn calibrate_reads_corpus_directory() {
    let dir = tempfile::tempdir().unwrap();
    let assets = gen_assets(dir.path(), 9);
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    for i in 0..3 {
        synthetic_clip(&corpus, &format!("clip_{i}.json"), 50 + i as u64, 4);
    }
    run(&[
        "loki",
        "calibrate",
        "--assets",
        assets.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--pairs",
        "4",
        "--resolution",
        "32x32",
    ])
    .unwrap();
}

#[test]
fn ddim_demo_reports_tiny_oracle_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ddim.csv");
    run(&[
        "loki",
        "ddim-demo",
        "--steps",
        "50",
        "--seed",
        "1",
        "--out-csv",
        csv.to_str().unwrap(),
    ])
    .unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,timestep,z0_rel_error");
    assert_eq!(lines.len(), 51);
    for line in &lines[1..] {
        let err: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(err < 1e-6, "oracle error {err} in {line}");
    }
}

#[test]
fn ddim_demo_zero_terminal_variant_runs() {
    run(&[
        "loki",
        "ddim-demo",
        "--steps",
        "10",
        "--size",
        "32",
        "--zero-terminal",
    ])
    .unwrap();
}

/// Exit-code contract through the real binary: 0 on success (with the
/// effective-config line on stdout), 2 on configuration errors, 3 on IO
/// errors. `LOKI_THREADS` is accepted.
#[test]
fn binary_exit_codes_and_config_line() {
    let bin = env!("CARGO_BIN_EXE_loki");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("assets.lka");

    let ok = std::process::Command::new(bin)
        .args(["gen-assets", "--seed", "3", "--out", out.to_str().unwrap()])
        .env("LOKI_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(out.exists());
    let stdout = String::from_utf8(ok.stdout).unwrap();
    let config: serde_json::Value = serde_json::from_str(stdout.lines().next().unwrap()).unwrap();
    assert_eq!(config["command"], "gen-assets");
    assert_eq!(config["config"]["seed"], 3);

    let usage = std::process::Command::new(bin)
        .args(["gen-assets", "--seed", "3"])
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(2), "missing --out must exit 2");
    assert!(String::from_utf8_lossy(&usage.stderr).contains("--out"));

    let config_err = std::process::Command::new(bin)
        .args([
            "gen-assets",
            "--joints",
            "1",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        config_err.status.code(),
        Some(2),
        "degenerate sizes must exit 2"
    );

    let io_err = std::process::Command::new(bin)
        .args([
            "eval-mesh",
            "--assets",
            "/nonexistent/assets.lka",
            "--clip",
            "/nonexistent/clip.json",
            "--out",
            dir.path().join("m.lka").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(io_err.status.code(), Some(3), "missing inputs must exit 3");
}
