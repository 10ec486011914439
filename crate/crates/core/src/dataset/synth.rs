//! Dataset synthesis driver: one day capture set and one night capture set
//! per scene, written with sidecars and previews, split, and manifested.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{derive_seed, make_split, Manifest, SceneEntry};
use crate::error::{Error, Result};
use crate::image::{io as raster_io, Raster};
use crate::sensor::{
    synthesize_triple, CaptureOptions, IlluminationSchedule, NoiseMode, Phase, SceneSpec,
    SceneTriple, SensorConfig,
};
use crate::spectral::{synthetic_sensitivities, CurveRole, SpectralCurve};

/// Daytime illumination: strong broadband VIS plus the lamp's own NIR tail
/// covering 700-950 nm. The tail is what makes the deviation band non-empty
/// in daylight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayIllumination {
    pub vis_level: f64,
    pub nir_level: f64,
    pub exposure_s: f64,
}

/// Nighttime illumination: a trickle of ambient VIS and the 880 nm LED.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NightIllumination {
    pub vis_level: f64,
    pub nir_level: f64,
    pub exposure_s: f64,
    pub long_exposure_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub n_scenes: usize,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    pub noise: NoiseMode,
    pub sensor: SensorConfig,
    pub day: DayIllumination,
    pub night: NightIllumination,
}

impl SynthesisConfig {
    /// Desk-scale defaults. Levels are tuned so the day mixed capture stays
    /// below full well at unit reflectance and the night VIS capture is
    /// genuinely dark (tens of electrons).
    pub fn new(n_scenes: usize, height: usize, width: usize, seed: u64, noise: NoiseMode) -> Self {
        Self {
            n_scenes,
            height,
            width,
            seed,
            noise,
            sensor: SensorConfig {
                exposure_s: 0.08,
                ..SensorConfig::default()
            },
            day: DayIllumination {
                vis_level: 300.0,
                nir_level: 120.0,
                exposure_s: 0.08,
            },
            night: NightIllumination {
                vis_level: 3.0,
                nir_level: 600.0,
                exposure_s: 0.8,
                long_exposure_factor: 10.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scenes < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 scenes to split train/test, got {}",
                self.n_scenes
            )));
        }
        if self.height % 2 != 0 || self.width % 2 != 0 || self.height == 0 || self.width == 0 {
            return Err(Error::Validation(format!(
                "scene dimensions must be positive and even, got {}x{}",
                self.height, self.width
            )));
        }
        self.sensor.validate()
    }

    pub fn hash(&self) -> Result<String> {
        let canonical = serde_json::to_vec(self)?;
        let mut h = Sha256::new();
        h.update(&canonical);
        Ok(hex_string(&h.finalize()))
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn day_schedule(cfg: &SynthesisConfig) -> Result<IlluminationSchedule> {
    IlluminationSchedule::new(
        vec![cfg.day.vis_level],
        cfg.day.nir_level,
        SpectralCurve::flat_band(CurveRole::Irradiance, 1.0, 300.0, 700.0)?,
        SpectralCurve::flat_band(CurveRole::Irradiance, 1.0, 700.0, 960.0)?,
    )
}

fn night_schedule(cfg: &SynthesisConfig) -> Result<IlluminationSchedule> {
    IlluminationSchedule::new(
        vec![cfg.night.vis_level],
        cfg.night.nir_level,
        SpectralCurve::flat_band(CurveRole::Irradiance, 1.0, 300.0, 700.0)?,
        SpectralCurve::gaussian(CurveRole::Irradiance, 880.0, 15.0)?,
    )
}

/// Synthesize one scene's capture set for the given phase.
pub(crate) fn capture_scene(
    cfg: &SynthesisConfig,
    scene: &SceneSpec,
    phase: Phase,
    rng_seed: u64,
) -> Result<SceneTriple> {
    let (illum, exposure, long_factor) = match phase {
        Phase::Day => (day_schedule(cfg)?, cfg.day.exposure_s, 1.0),
        Phase::Night => (
            night_schedule(cfg)?,
            cfg.night.exposure_s,
            cfg.night.long_exposure_factor,
        ),
    };
    let sensor = cfg.sensor.with_exposure(exposure);
    let opts = CaptureOptions {
        mode: cfg.noise,
        phase,
        long_exposure_factor: long_factor,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    synthesize_triple(
        scene,
        &illum,
        0,
        &synthetic_sensitivities(),
        &sensor,
        &opts,
        &mut rng,
    )
}

fn write_role(
    root: &Path,
    scene_dir: &str,
    phase: Phase,
    role: &str,
    raster: &Raster,
    seed: u64,
) -> Result<String> {
    let rel = format!("{scene_dir}/{}_{role}.f32", phase.as_str());
    let path = root.join(&rel);
    raster_io::save_raster(&path, raster, role, Some(seed), None)?;
    raster_io::save_png(&path.with_extension("png"), raster, 8)?;
    Ok(rel)
}

/// Generate `n_scenes` scenes, each with a day triple and a night quadruple
/// (plus exact deviation maps), write everything under `out_dir` and return
/// the manifest (also saved as `manifest.json`).
pub fn synthesize_dataset(cfg: &SynthesisConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut scenes = Vec::new();
    for id in 0..cfg.n_scenes as u64 {
        let scene_dir = format!("scene_{id}");
        std::fs::create_dir_all(out_dir.join(&scene_dir))?;
        let scene = SceneSpec::random(cfg.height, cfg.width, derive_seed(cfg.seed, id * 2 + 1))?;

        for phase in [Phase::Day, Phase::Night] {
            let capture_seed = derive_seed(cfg.seed, id * 4 + if phase == Phase::Day { 2 } else { 3 });
            let triple = capture_scene(cfg, &scene, phase, capture_seed)?;
            let mut roles = BTreeMap::new();
            roles.insert(
                "mixed".to_string(),
                write_role(out_dir, &scene_dir, phase, "mixed", &triple.mixed, capture_seed)?,
            );
            roles.insert(
                "vis".to_string(),
                write_role(out_dir, &scene_dir, phase, "vis", &triple.vis, capture_seed)?,
            );
            roles.insert(
                "nir".to_string(),
                write_role(out_dir, &scene_dir, phase, "nir", &triple.nir, capture_seed)?,
            );
            if let Some(long) = &triple.vis_long {
                roles.insert(
                    "vis_long".to_string(),
                    write_role(out_dir, &scene_dir, phase, "vis_long", long, capture_seed)?,
                );
            }
            let mut aux = BTreeMap::new();
            aux.insert(
                "deviation".to_string(),
                write_role(out_dir, &scene_dir, phase, "deviation", &triple.deviation, capture_seed)?,
            );
            scenes.push(SceneEntry {
                id,
                phase,
                roles,
                aux,
            });
        }
    }

    let ids: Vec<u64> = (0..cfg.n_scenes as u64).collect();
    let mut split_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::MAX));
    let split = make_split(&ids, &mut split_rng);

    let manifest = Manifest {
        scenes,
        split,
        synthesis: cfg.clone(),
        config_hash: cfg.hash()?,
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}
