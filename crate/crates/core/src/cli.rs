//! Command-line interface: synthesis, training, inference, evaluation and
//! the ablation harness.
//!
//! Exit codes: 0 success, 2 usage/configuration error, 3 data error,
//! 4 numerical failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dataset::{synthesize_dataset, Manifest, SynthesisConfig};
use crate::error::{Error, Result};
use crate::image::{gray_world_white_balance, io as raster_io, ColorSpace, Raster};
use crate::loss::{LossToggles, LossWeights};
use crate::metrics::{score_pair, MetricDomain, MetricReport};
use crate::nets::{
    load_checkpoint, raster_to_tensor, tensor_to_raster, PipeColorSpace, Pipeline, PipelineConfig,
};
use crate::sensor::NoiseMode;
use crate::train::{evaluate_pipeline, train, TrainConfig};

#[derive(Parser)]
#[command(name = "visnir", version, about = "Hot-mirror-free sensor simulation and VIS/NIR separation pipeline")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an aligned MIX/VIS/NIR dataset.
    Synth(SynthArgs),
    /// Train the pipeline on a synthesized dataset.
    Train(TrainArgs),
    /// Run a trained pipeline on one mixed capture.
    Infer(InferArgs),
    /// Score a prediction directory against a ground-truth directory.
    Eval(EvalArgs),
    /// Train and evaluate a set of ablation conditions.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of scenes (each yields 7 role images).
    #[arg(long)]
    scenes: usize,
    /// Scene size as HxW, e.g. 64x64.
    #[arg(long, default_value = "64x64")]
    size: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sensor noise: on (Poisson+Gaussian) or off (exact).
    #[arg(long, value_enum, default_value_t = NoiseArg::On)]
    noise: NoiseArg,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    On,
    Off,
}

impl From<NoiseArg> for NoiseMode {
    fn from(v: NoiseArg) -> Self {
        match v {
            NoiseArg::On => NoiseMode::PoissonGaussian,
            NoiseArg::Off => NoiseMode::Off,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory (from `synth`).
    #[arg(long)]
    data: PathBuf,
    /// Optional JSON config overriding training and loss settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint path prefix (writes <out>.json/.bin/.csv/.opt).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = PresetArg::Desk)]
    preset: PresetArg,
    /// Ablation condition id (1-10); defaults to the full model.
    #[arg(long)]
    ablation: Option<u8>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InferArgs {
    /// Checkpoint prefix (as written by `train`).
    #[arg(long)]
    ckpt: PathBuf,
    /// Input mixed image (.f32 with sidecar, or .png).
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Also write the intermediate maps.
    #[arg(long)]
    intermediates: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// JSON report path.
    #[arg(long)]
    report: PathBuf,
    /// Score raw floats instead of 8-bit-quantized values.
    #[arg(long)]
    float_domain: bool,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    data: PathBuf,
    /// Conditions to run, e.g. "1,5" or "1-10".
    #[arg(long, default_value = "1-10")]
    conditions: String,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for per-condition checkpoints (default: next to report).
    #[arg(long)]
    workdir: Option<PathBuf>,
}

/// Table of ablation conditions; ids map one-to-one onto the published rows.
#[derive(Debug, Clone, Serialize)]
pub struct AblationCondition {
    pub id: u8,
    pub description: String,
    pub use_ssim: bool,
    pub use_smooth: bool,
    pub use_perceptual: bool,
    pub use_separation: bool,
    pub use_restoration: bool,
    pub colorization_full_res: bool,
    pub color_space: PipeColorSpace,
}

pub fn ablation_condition(id: u8) -> Result<AblationCondition> {
    let mut c = AblationCondition {
        id,
        description: String::new(),
        use_ssim: true,
        use_smooth: true,
        use_perceptual: true,
        use_separation: true,
        use_restoration: true,
        colorization_full_res: false,
        color_space: PipeColorSpace::Yuv,
    };
    match id {
        1 => c.description = "full model".into(),
        2 => {
            c.description = "mae only (no ssim, no smoothness, no perceptual)".into();
            c.use_ssim = false;
            c.use_smooth = false;
            c.use_perceptual = false;
        }
        3 => {
            c.description = "mae + ssim (no smoothness, no perceptual)".into();
            c.use_smooth = false;
            c.use_perceptual = false;
        }
        4 => {
            c.description = "mae + ssim + smoothness (no perceptual)".into();
            c.use_perceptual = false;
        }
        5 => {
            c.description = "no separation, no restoration (direct U-Net)".into();
            c.use_separation = false;
            c.use_restoration = false;
        }
        6 => {
            c.description = "separation only, no restoration".into();
            c.use_restoration = false;
        }
        7 => {
            c.description = "no separation, restoration only".into();
            c.use_separation = false;
        }
        8 => {
            c.description = "colorization output at full resolution".into();
            c.colorization_full_res = true;
        }
        9 => {
            c.description = "restore in HSV color space".into();
            c.color_space = PipeColorSpace::Hsv;
        }
        10 => {
            c.description = "restore directly in RGB".into();
            c.color_space = PipeColorSpace::Rgb;
        }
        other => {
            return Err(Error::Validation(format!(
                "ablation id {other} out of range 1-10"
            )))
        }
    }
    Ok(c)
}

impl AblationCondition {
    pub fn toggles(&self) -> LossToggles {
        LossToggles {
            use_ssim: self.use_ssim,
            use_smooth: self.use_smooth,
            use_perceptual: self.use_perceptual,
        }
    }

    pub fn pipeline_config(&self, base: &PipelineConfig) -> PipelineConfig {
        PipelineConfig {
            use_separation: self.use_separation,
            use_restoration: self.use_restoration,
            colorization_full_res: self.colorization_full_res,
            color_space: self.color_space,
            ..base.clone()
        }
    }
}

/// Optional JSON file overriding training, loss and topology settings.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub train: Option<TrainConfig>,
    pub weights: Option<LossWeights>,
    pub pipeline: Option<PipelineOverrides>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOverrides {
    pub depth: Option<usize>,
    pub base_features: Option<usize>,
    pub restore_features: Option<usize>,
    pub restore_blocks: Option<usize>,
    pub epochs: Option<usize>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read(p)
                .map_err(|e| Error::Data(format!("cannot read config {}: {e}", p.display())))?;
            Ok(serde_json::from_slice(&text)?)
        }
    }
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::Validation(format!("size must be HxW, got {s}")))?;
    let h = h
        .parse()
        .map_err(|_| Error::Validation(format!("bad height in {s}")))?;
    let w = w
        .parse()
        .map_err(|_| Error::Validation(format!("bad width in {s}")))?;
    Ok((h, w))
}

fn parse_conditions(s: &str) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once('-') {
            let a: u8 = a.trim().parse().map_err(|_| bad_cond(part))?;
            let b: u8 = b.trim().parse().map_err(|_| bad_cond(part))?;
            if a > b {
                return Err(bad_cond(part));
            }
            out.extend(a..=b);
        } else if !part.is_empty() {
            out.push(part.parse().map_err(|_| bad_cond(part))?);
        }
    }
    if out.is_empty() {
        return Err(Error::Validation("no conditions requested".into()));
    }
    for &id in &out {
        ablation_condition(id)?;
    }
    Ok(out)
}

fn bad_cond(part: &str) -> Error {
    Error::Validation(format!("bad condition spec '{part}'"))
}

/// Parse arguments from the process environment and run. Returns the exit
/// code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ablate(a) => cmd_ablate(a),
    }
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let (h, w) = parse_size(&a.size)?;
    let cfg = SynthesisConfig::new(a.scenes, h, w, a.seed, a.noise.into());
    synthesize_dataset(&cfg, &a.out)?;
    println!("{}", a.out.join("manifest.json").display());
    Ok(())
}

/// Resolve preset + overrides + ablation into a concrete training setup.
fn resolve_training(
    preset: PresetArg,
    seed: u64,
    file: &FileConfig,
    ablation: u8,
) -> Result<(TrainConfig, LossWeights, LossToggles, PipelineConfig)> {
    let mut tc = file.train.clone().unwrap_or_else(|| match preset {
        PresetArg::Desk => TrainConfig::desk(seed),
        PresetArg::Paper => TrainConfig::paper(seed),
    });
    if file.train.is_none() {
        tc.seed = seed;
    }
    let weights = file.weights.clone().unwrap_or_default();
    let condition = ablation_condition(ablation)?;
    let mut base = match preset {
        PresetArg::Desk => PipelineConfig::desk(seed),
        PresetArg::Paper => PipelineConfig::paper(seed),
    };
    if let Some(o) = &file.pipeline {
        if let Some(d) = o.depth {
            base.depth = d;
        }
        if let Some(b) = o.base_features {
            base.base_features = b;
        }
        if let Some(f) = o.restore_features {
            base.restore_features = f;
        }
        if let Some(b) = o.restore_blocks {
            base.restore_blocks = b;
        }
        if let Some(e) = o.epochs {
            tc.epochs = e;
        }
    }
    tc.validate()?;
    weights.validate()?;
    let pc = condition.pipeline_config(&base);
    Ok((tc, weights, condition.toggles(), pc))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let file = load_file_config(a.config.as_deref())?;
    let manifest = Manifest::load(&a.data)?;
    let (tc, weights, toggles, pc) = resolve_training(a.preset, a.seed, &file, a.ablation.unwrap_or(1))?;
    let pipeline = Pipeline::<f32>::new(pc);
    let artifacts = train(&a.data, &manifest, &pipeline, &weights, &toggles, &tc, &a.out)?;
    println!("checkpoint: {}", artifacts.checkpoint_prefix.display());
    println!("loss curve: {}", artifacts.curve_path.display());
    Ok(())
}

fn load_input_raster(path: &Path) -> Result<Raster> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => raster_io::load_png(path),
        _ => raster_io::load_raster(path),
    }
}

fn preview(path: &Path, raster: &Raster) -> Result<()> {
    // visualisation is white balanced; exact float outputs are not
    let balanced = if raster.colorspace() == ColorSpace::Rgb {
        gray_world_white_balance(raster).unwrap_or_else(|_| raster.clone())
    } else {
        raster.clone()
    };
    raster_io::save_png(path, &balanced, 8)
}

fn cmd_infer(a: InferArgs) -> Result<()> {
    let pipeline = load_checkpoint(&a.ckpt)?;
    let input = load_input_raster(&a.input)?;
    let div = 1usize << pipeline.config.depth;
    if input.height() % div != 0 || input.width() % div != 0 {
        return Err(Error::Validation(format!(
            "input {}x{} is not divisible by 2^{} = {div}; crop or pad the image to a multiple of {div} and retry",
            input.height(),
            input.width(),
            pipeline.config.depth
        )));
    }
    std::fs::create_dir_all(&a.out)?;
    let mixed = raster_to_tensor::<f32>(&input);
    let out = pipeline.forward(&mixed)?;
    let final_rgb = tensor_to_raster(&out.final_rgb, ColorSpace::Rgb)?;
    raster_io::save_raster(&a.out.join("final.f32"), &final_rgb, "final", None, None)?;
    preview(&a.out.join("final.png"), &final_rgb)?;

    if a.intermediates {
        let mut extras: Vec<(&str, Raster)> = Vec::new();
        if let Some(t) = &out.nir_est {
            extras.push(("nir_est", tensor_to_raster(t, ColorSpace::Rgb)?));
        }
        if let Some(t) = &out.proportion {
            extras.push(("proportion", tensor_to_raster(t, ColorSpace::Rgb)?));
        }
        if let Some(t) = &out.vis_est {
            extras.push(("vis_est", tensor_to_raster(t, ColorSpace::Rgb)?));
        }
        if let Some(t) = &out.y_restored {
            extras.push(("y_restored", tensor_to_raster(t, ColorSpace::Gray)?));
        }
        if let Some(t) = &out.chroma {
            // chroma channels live in [-0.5,0.5] (YUV) or [0,1] (HSV);
            // shift into [0,1] and place the two planes side by side
            let s = t.shape();
            let lo = if pipeline.config.color_space == PipeColorSpace::Yuv {
                0.5
            } else {
                0.0
            };
            let mut montage = vec![0.0f32; s.h * s.w * 2];
            for y in 0..s.h {
                for x in 0..s.w {
                    let px = &t.data()[(y * s.w + x) * 2..(y * s.w + x) * 2 + 2];
                    montage[y * s.w * 2 + x] = (px[0] + lo).clamp(0.0, 1.0);
                    montage[y * s.w * 2 + s.w + x] = (px[1] + lo).clamp(0.0, 1.0);
                }
            }
            extras.push((
                "chroma",
                Raster::new(s.h, s.w * 2, 1, ColorSpace::Gray, montage)?,
            ));
        }
        for (name, raster) in &extras {
            preview(&a.out.join(format!("{name}.png")), raster)?;
        }
    }
    println!("{}", a.out.join("final.png").display());
    Ok(())
}

fn list_rasters(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", dir.display())))?;
    for entry in entries {
        let p = entry?.path();
        if p.extension().and_then(|e| e.to_str()) == Some("f32") {
            out.insert(
                p.file_name().unwrap().to_string_lossy().into_owned(),
                p.clone(),
            );
        }
    }
    if out.is_empty() {
        // fall back to PNGs
        for entry in std::fs::read_dir(dir)? {
            let p = entry?.path();
            if p.extension().and_then(|e| e.to_str()) == Some("png") {
                out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), p);
            }
        }
    }
    Ok(out)
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let pred = list_rasters(&a.pred)?;
    let gt = list_rasters(&a.gt)?;
    let pred_names: Vec<&String> = pred.keys().collect();
    let gt_names: Vec<&String> = gt.keys().collect();
    if pred_names != gt_names {
        return Err(Error::Data(format!(
            "prediction and ground-truth sets differ: {} vs {} files",
            pred_names.len(),
            gt_names.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Data("no rasters to evaluate".into()));
    }
    let domain = if a.float_domain {
        MetricDomain::Float
    } else {
        MetricDomain::Quantized8
    };
    let mut scores = Vec::new();
    for (name, ppath) in &pred {
        let p = load_input_raster(ppath)?;
        let g = load_input_raster(&gt[name])?;
        scores.push(score_pair(name, &p, &g, domain)?);
    }
    let report = MetricReport::from_scores(domain, scores);
    std::fs::write(&a.report, serde_json::to_vec_pretty(&report)?)?;
    println!("{}", a.report.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct AblationRow {
    condition: u8,
    description: String,
    psnr_db: Option<f64>,
    ssim: f64,
}

#[derive(Debug, Serialize)]
struct AblationReport {
    seed: u64,
    rows: Vec<AblationRow>,
}

fn cmd_ablate(a: AblateArgs) -> Result<()> {
    let ids = parse_conditions(&a.conditions)?;
    let file = load_file_config(a.config.as_deref())?;
    let manifest = Manifest::load(&a.data)?;
    let workdir = a
        .workdir
        .clone()
        .unwrap_or_else(|| a.report.parent().unwrap_or(Path::new(".")).join("ablation_work"));
    std::fs::create_dir_all(&workdir)?;

    let mut rows = Vec::new();
    for id in ids {
        let (tc, weights, toggles, pc) = resolve_training(PresetArg::Desk, a.seed, &file, id)?;
        let pipeline = Pipeline::<f32>::new(pc);
        let prefix = workdir.join(format!("cond{id:02}"));
        train(&a.data, &manifest, &pipeline, &weights, &toggles, &tc, &prefix)?;
        let eval = evaluate_pipeline(
            &a.data,
            &manifest,
            &pipeline,
            &manifest.split.test,
            MetricDomain::Quantized8,
        )?;
        let condition = ablation_condition(id)?;
        eprintln!(
            "condition {id:2}: psnr {:?} ssim {:.4} ({})",
            eval.mean_final_psnr, eval.mean_final_ssim, condition.description
        );
        rows.push(AblationRow {
            condition: id,
            description: condition.description,
            psnr_db: eval.mean_final_psnr,
            ssim: eval.mean_final_ssim,
        });
    }
    let report = AblationReport { seed: a.seed, rows };
    std::fs::write(&a.report, serde_json::to_vec_pretty(&report)?)?;
    println!("{}", a.report.display());
    Ok(())
}
