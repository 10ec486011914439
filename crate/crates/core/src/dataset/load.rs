//! Sample loading: aligned rasters with ground-truth targets.

use std::path::Path;

use super::Manifest;
use crate::error::{Error, Result};
use crate::image::{io as raster_io, ColorSpace, Raster};
use crate::sensor::Phase;

/// One training sample: the mixed capture and everything supervising it.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub scene_id: u64,
    pub phase: Phase,
    pub mixed: Raster,
    pub vis: Raster,
    pub nir: Raster,
    pub deviation: Raster,
    /// Long-exposure VIS reference; night samples only.
    pub vis_long: Option<Raster>,
}

impl TrainSample {
    /// Restoration reference: the clean capture for day scenes, the
    /// long-exposure capture for night scenes.
    pub fn reference_rgb(&self) -> &Raster {
        match self.phase {
            Phase::Day => &self.vis,
            Phase::Night => self.vis_long.as_ref().unwrap_or(&self.vis),
        }
    }

    /// Supervision target for the deviation fraction:
    /// `clamp(D / max(nir, eps), 0, 1)` with eps = 1e-3.
    pub fn proportion_target(&self) -> Raster {
        const EPS: f32 = 1e-3;
        let data = self
            .deviation
            .data()
            .iter()
            .zip(self.nir.data())
            .map(|(&d, &n)| (d / n.max(EPS)).clamp(0.0, 1.0))
            .collect();
        Raster::new(
            self.deviation.height(),
            self.deviation.width(),
            3,
            ColorSpace::Rgb,
            data,
        )
        .expect("target stays in range by construction")
    }
}

/// Load one scene/phase sample.
pub fn load_sample(root: &Path, manifest: &Manifest, id: u64, phase: Phase) -> Result<TrainSample> {
    let entry = manifest
        .entry(id, phase)
        .ok_or_else(|| Error::Data(format!("unknown scene id {id} for phase {}", phase.as_str())))?;
    let load = |role: &str| -> Result<Raster> {
        let rel = entry
            .roles
            .get(role)
            .ok_or_else(|| Error::Data(format!("scene {id}: role {role} missing")))?;
        raster_io::load_raster(&root.join(rel))
    };
    let deviation = {
        let rel = entry
            .aux
            .get("deviation")
            .ok_or_else(|| Error::Data(format!("scene {id}: deviation map missing")))?;
        raster_io::load_raster(&root.join(rel))?
    };
    Ok(TrainSample {
        scene_id: id,
        phase,
        mixed: load("mixed")?,
        vis: load("vis")?,
        nir: load("nir")?,
        deviation,
        vis_long: if phase == Phase::Night {
            Some(load("vis_long")?)
        } else {
            None
        },
    })
}

/// Load a batch in request order.
pub fn load_batch(
    root: &Path,
    manifest: &Manifest,
    ids: &[u64],
    phase: Phase,
) -> Result<Vec<TrainSample>> {
    ids.iter().map(|&id| load_sample(root, manifest, id, phase)).collect()
}
