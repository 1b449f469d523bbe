//! Command surface for the `loki` binary.
//!
//! Every command prints one effective-config JSON line before doing work,
//! funnels all randomness through explicit seeds, and writes outputs
//! atomically (temp file + rename). Exit codes: 0 success, 2 configuration
//! error, 3 IO error. The `LOKI_THREADS` environment variable caps
//! parallelism.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::assets::synthetic::{
    generate_synthetic_assets, generate_synthetic_corpus, SyntheticAssetConfig, SyntheticClipConfig,
};
use crate::assets::{
    load_clip_bundle, ClipBundle, ClipError, ContainerError, FaceModelAssets, TensorContainer,
    TensorData,
};
use crate::camera::Camera;
use crate::diffusion::{
    self, ddim_timestep_ladder, enforce_zero_terminal_snr, linear_schedule, NoiseSchedule,
};
use crate::driver_map::{build_driver_map, retarget, EncodedTemplate, MapError, MapMode};
use crate::face_model::{self, PoseParams};
use crate::metrics::{
    hef, hef_calibrate, hpf, MetricError, MetricKind, MetricReport, PoseTrajectory,
};
use crate::raster;
use crate::viz;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ContainerError> for CliError {
    fn from(e: ContainerError) -> Self {
        match e {
            ContainerError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<crate::assets::AssetsError> for CliError {
    fn from(e: crate::assets::AssetsError) -> Self {
        match e {
            crate::assets::AssetsError::Container(c) => c.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ClipError> for CliError {
    fn from(e: ClipError) -> Self {
        match e {
            ClipError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::Container(c) => c.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<face_model::ModelError> for CliError {
    fn from(e: face_model::ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<diffusion::ScheduleError> for CliError {
    fn from(e: diffusion::ScheduleError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<viz::VizError> for CliError {
    fn from(e: viz::VizError) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "loki",
    version,
    about = "Parametric face conditioning pipeline: assets, driver maps, retargeting, metrics, sampler math"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate seeded synthetic face-model assets (.lka container)
    GenAssets(GenAssetsArgs),
    /// Evaluate the posed mesh for one frame of a clip
    EvalMesh(EvalMeshArgs),
    /// Build the 45-channel driver map for one frame
    RenderMap(RenderMapArgs),
    /// Cross-identity substitution: reference identity + camera, driver expression + pose
    Retarget(RetargetArgs),
    /// Reenactment metrics over a target/prediction clip pair
    Metric {
        #[command(subcommand)]
        metric: MetricCommand,
    },
    /// Four-anchor calibration of the expression metric
    Calibrate(CalibrateArgs),
    /// Oracle-denoiser sampling loop; prints per-step reconstruction error
    DdimDemo(DdimDemoArgs),
}

#[derive(Subcommand, Debug)]
pub enum MetricCommand {
    /// Head-pose follow (degrees, lower is better)
    Hpf(MetricArgs),
    /// Expression follow (normalised deformation units, lower is better)
    Hef(MetricArgs),
}

/// `WxH`, e.g. `128x128`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl std::str::FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
        let parse = |v: &str| {
            v.parse::<u32>()
                .map_err(|e| format!("bad dimension {v:?}: {e}"))
                .and_then(|n| {
                    if n == 0 {
                        Err("dimension must be positive".into())
                    } else {
                        Ok(n)
                    }
                })
        };
        Ok(Resolution {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

#[derive(Args, Debug, Serialize)]
pub struct GenAssetsArgs {
    /// Output .lka path
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rounded up to the nearest closed icosphere size
    #[arg(long, default_value_t = 162)]
    pub vertices: usize,
    #[arg(long, default_value_t = 8)]
    pub shape_coeffs: usize,
    #[arg(long, default_value_t = 6)]
    pub expr_coeffs: usize,
    #[arg(long, default_value_t = 5)]
    pub joints: usize,
    #[arg(long, default_value_t = 20)]
    pub inner_mouth: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalMeshArgs {
    #[arg(long)]
    pub assets: PathBuf,
    #[arg(long)]
    pub clip: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct RenderMapArgs {
    #[arg(long)]
    pub assets: PathBuf,
    #[arg(long)]
    pub clip: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    /// full | no_deformation | no_posenc
    #[arg(long, default_value = "full")]
    pub mode: MapMode,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the clip camera's resolution (intrinsics rescale with it)
    #[arg(long)]
    pub resolution: Option<Resolution>,
    /// Directory for PNG visualisations (deformation magnitude + PE slices)
    #[arg(long)]
    pub viz: Option<PathBuf>,
    /// Directory for PGM dumps of the raster buffer (face index + depth)
    #[arg(long)]
    pub raster_debug: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct RetargetArgs {
    #[arg(long)]
    pub assets: PathBuf,
    /// Clip providing identity shape and camera
    #[arg(long)]
    pub ref_clip: PathBuf,
    /// Clip providing per-frame expression and pose
    #[arg(long)]
    pub drv_clip: PathBuf,
    /// Output directory; one map container per driver frame plus a manifest
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub resolution: Option<Resolution>,
}

#[derive(Args, Debug, Serialize)]
pub struct MetricArgs {
    /// Needed for hef (deformation rendering); ignored by hpf
    #[arg(long)]
    pub assets: Option<PathBuf>,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, default_value = "sample")]
    pub sample_id: String,
    #[arg(long)]
    pub resolution: Option<Resolution>,
    /// Per-frame CSV (`sample_id, frame, value`)
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Aggregate JSON (`metric, mean, std, n`)
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub assets: PathBuf,
    /// Directory of clip-bundle JSON files
    #[arg(long, conflicts_with = "synthetic")]
    pub corpus: Option<PathBuf>,
    /// Generate a seeded synthetic corpus of this many clips instead
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Frames per synthetic clip
    #[arg(long, default_value_t = 16)]
    pub frames: usize,
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Near-frame anchor window (frames)
    #[arg(long, default_value_t = 2)]
    pub near_window: usize,
    #[arg(long)]
    pub resolution: Option<Resolution>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct DdimDemoArgs {
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub train_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Latent size (elements)
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Apply the zero-terminal-SNR correction before sampling
    #[arg(long, default_value_t = false)]
    pub zero_terminal: bool,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

/// Builds the global thread pool from `LOKI_THREADS` (no-op when unset or
/// already initialised).
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var("LOKI_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    run_command(cli.command)
}

pub fn run_command(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenAssets(args) => cmd_gen_assets(args),
        Command::EvalMesh(args) => cmd_eval_mesh(args),
        Command::RenderMap(args) => cmd_render_map(args),
        Command::Retarget(args) => cmd_retarget(args),
        Command::Metric { metric } => match metric {
            MetricCommand::Hpf(args) => cmd_metric(MetricKind::Hpf, args),
            MetricCommand::Hef(args) => cmd_metric(MetricKind::Hef, args),
        },
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::DdimDemo(args) => cmd_ddim_demo(args),
    }
}

fn print_config(command: &str, args: &impl Serialize) {
    let line = serde_json::json!({
        "schema_version": CONFIG_SCHEMA_VERSION,
        "command": command,
        "config": args,
    });
    println!("{line}");
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| CliError::Io(format!("creating temp file: {e}")))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("renaming into {}: {}", path.display(), e.error)))?;
    Ok(())
}

fn sha256_hex(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn load_assets_and_clip(
    assets_path: &Path,
    clip_path: &Path,
) -> Result<(FaceModelAssets, ClipBundle), CliError> {
    let assets = FaceModelAssets::read_file(assets_path)?;
    let clip = load_clip_bundle(clip_path)?;
    clip.validate_dims(assets.n_shape_coeffs(), assets.n_expr_coeffs())?;
    Ok((assets, clip))
}

fn frame_checked(clip: &ClipBundle, frame: usize) -> Result<(), CliError> {
    if frame >= clip.n_frames() {
        return Err(CliError::Config(format!(
            "frame {frame} out of range; clip has {} frames",
            clip.n_frames()
        )));
    }
    Ok(())
}

fn effective_camera(camera: &Camera, resolution: Option<Resolution>) -> Camera {
    match resolution {
        Some(r) => camera.rescaled(r.width, r.height),
        None => camera.clone(),
    }
}

fn cmd_gen_assets(args: GenAssetsArgs) -> Result<(), CliError> {
    print_config("gen-assets", &args);
    let assets = generate_synthetic_assets(&SyntheticAssetConfig {
        seed: args.seed,
        n_vertices: args.vertices,
        n_shape_coeffs: args.shape_coeffs,
        n_expr_coeffs: args.expr_coeffs,
        n_joints: args.joints,
        inner_mouth_count: args.inner_mouth,
    })?;
    write_atomic(&args.out, &assets.to_container().to_bytes())?;
    println!(
        "{}",
        serde_json::json!({
            "written": args.out,
            "vertices": assets.n_vertices(),
            "faces": assets.faces.len(),
            "joints": assets.n_joints(),
            "inner_mouth": assets.inner_mouth_count,
            "deformation_sigma": assets.deformation_sigma,
        })
    );
    Ok(())
}

fn cmd_eval_mesh(args: EvalMeshArgs) -> Result<(), CliError> {
    print_config("eval-mesh", &args);
    let (assets, clip) = load_assets_and_clip(&args.assets, &args.clip)?;
    frame_checked(&clip, args.frame)?;
    let frame = &clip.frames[args.frame];
    let mesh = face_model::evaluate_mesh(
        &assets,
        &clip.shape,
        &frame.expression,
        &PoseParams::from_frame(frame),
    )?;

    let mut c = TensorContainer::new();
    let flatten = |vs: &[nalgebra::Vector3<f64>]| {
        let mut out = Vec::with_capacity(vs.len() * 3);
        for v in vs {
            out.extend_from_slice(&[v.x, v.y, v.z]);
        }
        out
    };
    c.push(
        "vertices",
        vec![mesh.vertices.len(), 3],
        TensorData::F64(flatten(&mesh.vertices)),
    )
    .expect("fresh container");
    c.push(
        "delta_expr",
        vec![mesh.delta_expr.len(), 3],
        TensorData::F64(flatten(&mesh.delta_expr)),
    )
    .expect("fresh container");
    c.push(
        "joints",
        vec![mesh.joints.len(), 3],
        TensorData::F64(flatten(&mesh.joints)),
    )
    .expect("fresh container");
    write_atomic(&args.out, &c.to_bytes())?;
    println!(
        "{}",
        serde_json::json!({ "written": args.out, "vertices": mesh.vertices.len() })
    );
    Ok(())
}

fn cmd_render_map(args: RenderMapArgs) -> Result<(), CliError> {
    print_config("render-map", &args);
    let (assets, clip) = load_assets_and_clip(&args.assets, &args.clip)?;
    frame_checked(&clip, args.frame)?;
    let camera = effective_camera(&clip.camera, args.resolution);
    let frame = &clip.frames[args.frame];
    let encoded = EncodedTemplate::from_assets(&assets)?;
    let map = build_driver_map(
        &assets,
        &encoded,
        &clip.shape,
        &frame.expression,
        &PoseParams::from_frame(frame),
        &camera,
        args.mode,
    )?;
    write_atomic(&args.out, &map.to_container().to_bytes())?;

    if let Some(dir) = &args.viz {
        std::fs::create_dir_all(dir)?;
        let magnitude = viz::deformation_magnitude(&map);
        let max = magnitude.iter().fold(0.0f32, |a, &b| a.max(b)) as f64;
        viz::save_magnitude_png(dir.join("deformation_magnitude.png"), magnitude.view(), max)?;
        std::fs::write(
            dir.join("deformation_magnitude.json"),
            serde_json::json!({ "max": max }).to_string(),
        )?;
        // One low- and one high-frequency encoding slice per axis block.
        for (name, channel) in [("posenc_sin_x_k0.png", 0usize), ("posenc_sin_x_k6.png", 6)] {
            viz::save_channel_png(
                dir.join(name),
                map.tensor.slice(ndarray::s![channel, .., ..]),
                -1.0,
                1.0,
            )?;
        }
    }

    if let Some(dir) = &args.raster_debug {
        std::fs::create_dir_all(dir)?;
        let mesh = face_model::evaluate_mesh(
            &assets,
            &clip.shape,
            &frame.expression,
            &PoseParams::from_frame(frame),
        )?;
        let buffer = raster::rasterize(&mesh.vertices, &assets.masked_extended_faces(), &camera);
        viz::save_face_index_pgm(dir.join("face_index.pgm"), &buffer)?;
        viz::save_depth_pgm(dir.join("depth.pgm"), &buffer)?;
    }

    println!(
        "{}",
        serde_json::json!({
            "written": args.out,
            "channels": map.tensor.shape()[0],
            "height": map.height(),
            "width": map.width(),
            "mode": args.mode.as_str(),
        })
    );
    Ok(())
}

fn cmd_retarget(args: RetargetArgs) -> Result<(), CliError> {
    print_config("retarget", &args);
    let assets = FaceModelAssets::read_file(&args.assets)?;
    let reference = load_clip_bundle(&args.ref_clip)?;
    let driver = load_clip_bundle(&args.drv_clip)?;
    reference.validate_dims(assets.n_shape_coeffs(), assets.n_expr_coeffs())?;
    driver.validate_dims(assets.n_shape_coeffs(), assets.n_expr_coeffs())?;

    std::fs::create_dir_all(&args.out_dir)?;
    let camera = effective_camera(&reference.camera, args.resolution);
    let encoded = EncodedTemplate::from_assets(&assets)?;

    let paths: Vec<PathBuf> = (0..driver.n_frames())
        .map(|t| args.out_dir.join(format!("map_{t:04}.lka")))
        .collect();
    (0..driver.n_frames())
        .into_par_iter()
        .map(|t| -> Result<(), CliError> {
            let frame = &driver.frames[t];
            let map = retarget(
                &assets,
                &encoded,
                &reference.shape,
                &camera,
                &frame.expression,
                &PoseParams::from_frame(frame),
            )?;
            write_atomic(&paths[t], &map.to_container().to_bytes())
        })
        .collect::<Result<Vec<()>, CliError>>()?;

    let manifest = serde_json::json!({
        "schema_version": CONFIG_SCHEMA_VERSION,
        "reference_bundle_sha256": sha256_hex(&args.ref_clip)?,
        "driver_bundle_sha256": sha256_hex(&args.drv_clip)?,
        "frames": driver.n_frames(),
        "resolution": [camera.width, camera.height],
    });
    write_atomic(
        &args.out_dir.join("manifest.json"),
        manifest.to_string().as_bytes(),
    )?;
    println!(
        "{}",
        serde_json::json!({ "written": args.out_dir, "maps": driver.n_frames() })
    );
    Ok(())
}

fn metric_outputs(report: &MetricReport, args: &MetricArgs) -> Result<(), CliError> {
    if let Some(csv) = &args.out_csv {
        let mut text = String::from("sample_id,frame,value\n");
        for (t, v) in report.per_frame.iter().enumerate() {
            text.push_str(&format!("{},{t},{v}\n", report.sample_id));
        }
        write_atomic(csv, text.as_bytes())?;
    }
    let aggregate = serde_json::json!({
        "schema_version": CONFIG_SCHEMA_VERSION,
        "metric": report.metric.as_str(),
        "sample_id": report.sample_id,
        "mean": report.mean,
        "std": report.std(),
        "n": report.per_frame.len(),
    });
    if let Some(json) = &args.out_json {
        write_atomic(json, aggregate.to_string().as_bytes())?;
    }
    println!("{aggregate}");
    Ok(())
}

fn cmd_metric(kind: MetricKind, args: MetricArgs) -> Result<(), CliError> {
    print_config(&format!("metric-{}", kind.as_str()), &args);
    let target = load_clip_bundle(&args.target)?;
    let pred = load_clip_bundle(&args.pred)?;
    if target.n_frames() != pred.n_frames() {
        return Err(CliError::Config(format!(
            "frame-count mismatch: target has {}, prediction has {}",
            target.n_frames(),
            pred.n_frames()
        )));
    }
    let report = match kind {
        MetricKind::Hpf => hpf(
            &PoseTrajectory::from_clip(&pred),
            &PoseTrajectory::from_clip(&target),
            &args.sample_id,
        )?,
        MetricKind::Hef => {
            let assets_path = args
                .assets
                .as_ref()
                .ok_or_else(|| CliError::Config("metric hef requires --assets".to_string()))?;
            let assets = FaceModelAssets::read_file(assets_path)?;
            target.validate_dims(assets.n_shape_coeffs(), assets.n_expr_coeffs())?;
            pred.validate_dims(assets.n_shape_coeffs(), assets.n_expr_coeffs())?;
            let encoded = EncodedTemplate::from_assets(&assets)?;
            let mut target = target;
            target.camera = effective_camera(&target.camera, args.resolution);
            hef(&assets, &encoded, &target, &pred, &args.sample_id)?
        }
    };
    metric_outputs(&report, &args)
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    print_config("calibrate", &args);
    let assets = FaceModelAssets::read_file(&args.assets)?;
    let encoded = EncodedTemplate::from_assets(&assets)?;

    let corpus: Vec<ClipBundle> = match (&args.corpus, args.synthetic) {
        (Some(dir), None) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(CliError::Config(format!(
                    "no .json clip bundles found in {}",
                    dir.display()
                )));
            }
            let mut clips = Vec::with_capacity(paths.len());
            for p in paths {
                let clip = load_clip_bundle(&p)?;
                clip.validate_dims(assets.n_shape_coeffs(), assets.n_expr_coeffs())?;
                clips.push(clip)
            }
            clips
        }
        (None, Some(n)) => {
            let res = args.resolution.unwrap_or(Resolution {
                width: 128,
                height: 128,
            });
            generate_synthetic_corpus(
                &SyntheticClipConfig {
                    seed: args.seed,
                    n_shape_coeffs: assets.n_shape_coeffs(),
                    n_expr_coeffs: assets.n_expr_coeffs(),
                    n_frames: args.frames,
                    image_width: res.width,
                    image_height: res.height,
                    ..Default::default()
                },
                n,
            )
        }
        _ => {
            return Err(CliError::Config(
                "exactly one of --corpus or --synthetic is required".to_string(),
            ))
        }
    };

    let corpus: Vec<ClipBundle> = match args.resolution {
        Some(r) => corpus
            .into_iter()
            .map(|mut c| {
                c.camera = c.camera.rescaled(r.width, r.height);
                c
            })
            .collect(),
        None => corpus,
    };

    let report = hef_calibrate(
        &assets,
        &encoded,
        &corpus,
        args.pairs,
        args.seed,
        args.near_window,
    )?;

    println!("anchor        mean        std        stderr     n");
    println!(
        "self          {:<11.6} -          -          1",
        report.self_anchor
    );
    let row = |name: &str, s: &Option<crate::metrics::AnchorStats>| match s {
        Some(s) => println!(
            "{name:<13} {:<11.6} {:<10.6} {:<10.6} {}",
            s.mean, s.std, s.stderr, s.n
        ),
        None => println!("{name:<13} unavailable"),
    };
    row("near_frame", &report.near_frame);
    row("no_skill", &report.no_skill);
    match report.ceiling {
        Some(c) => println!("ceiling       {c:<11.6} -          -          1"),
        None => println!("ceiling       unavailable"),
    }

    let json = serde_json::json!({
        "schema_version": CONFIG_SCHEMA_VERSION,
        "anchors": report,
        "clips": corpus.len(),
    });
    if let Some(path) = &args.out_json {
        write_atomic(path, json.to_string().as_bytes())?;
    }
    println!("{json}");
    Ok(())
}

fn cmd_ddim_demo(args: DdimDemoArgs) -> Result<(), CliError> {
    print_config("ddim-demo", &args);
    if args.size == 0 || args.steps == 0 {
        return Err(CliError::Config(
            "--size and --steps must be positive".into(),
        ));
    }
    let base = linear_schedule(
        args.train_steps,
        diffusion::DEFAULT_BETA_START,
        diffusion::DEFAULT_BETA_END,
    )?;
    let schedule: NoiseSchedule = if args.zero_terminal {
        enforce_zero_terminal_snr(&base)
    } else {
        base
    };

    use rand::SeedableRng;
    use rand_distr::Distribution;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
    let randn = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| rand_distr::StandardNormal.sample(rng))
            .collect()
    };
    let z0 = randn(&mut rng, args.size);
    let eps = randn(&mut rng, args.size);

    let ladder = ddim_timestep_ladder(args.train_steps, args.steps);
    let t_start = ladder[0];
    let mut z = diffusion::add_noise(&z0, &eps, &schedule, t_start)?;

    let rel_err = |a: &[f64], b: &[f64]| -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    };

    let mut csv = String::from("step,timestep,z0_rel_error\n");
    for (i, &t) in ladder.iter().enumerate() {
        let t_prev = ladder.get(i + 1).copied();
        let alpha = schedule.alpha_bar(t)?;
        let (z_next, z0_hat) = if alpha == 0.0 {
            // Pure-noise start on a corrected schedule: estimate at the first
            // sub-terminal index (pass-through update).
            let sub = t_prev
                .ok_or_else(|| CliError::Config("ladder ends on a zero-alpha index".to_string()))?;
            let a = schedule.alpha_bar(sub)?;
            let (sa, sn) = (a.sqrt(), (1.0 - a).sqrt());
            let z0_hat: Vec<f64> = z
                .iter()
                .zip(&eps)
                .map(|(&zv, &e)| (zv - sn * e) / sa)
                .collect();
            let z_next = z0_hat
                .iter()
                .zip(&eps)
                .map(|(&h, &e)| sa * h + sn * e)
                .collect();
            (z_next, z0_hat)
        } else {
            diffusion::ddim_step(&z, &eps, &schedule, t, t_prev)?
        };
        let line = format!("{i},{t},{:.6e}\n", rel_err(&z0_hat, &z0));
        print!("{line}");
        csv.push_str(&line);
        z = z_next;
    }
    let final_err = rel_err(&z, &z0);
    println!(
        "{}",
        serde_json::json!({ "final_rel_error": final_err, "steps": ladder.len() })
    );
    if let Some(path) = &args.out_csv {
        write_atomic(path, csv.as_bytes())?;
    }
    Ok(())
}
