//! Aligned data augmentation: one crop window, flip and rotation drawn per
//! sample and applied to every raster of it, so the physical pixel
//! correspondence (and the additivity invariant) survives.

use rand::Rng;

use crate::dataset::TrainSample;
use crate::error::{Error, Result};
use crate::image::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentDraw {
    pub y0: usize,
    pub x0: usize,
    pub patch: usize,
    pub flip_h: bool,
    /// Quarter turns, counter-clockwise.
    pub rot90: u8,
}

impl AugmentDraw {
    pub fn identity(h: usize, w: usize) -> Self {
        Self {
            y0: 0,
            x0: 0,
            patch: h.min(w),
            flip_h: false,
            rot90: 0,
        }
    }

    pub fn sample<R: Rng>(h: usize, w: usize, patch: usize, rng: &mut R) -> Result<Self> {
        if patch > h || patch > w {
            return Err(Error::Validation(format!(
                "crop {patch} larger than image {h}x{w}"
            )));
        }
        Ok(Self {
            y0: rng.gen_range(0..=h - patch),
            x0: rng.gen_range(0..=w - patch),
            patch,
            flip_h: rng.gen(),
            rot90: rng.gen_range(0..4),
        })
    }
}

fn crop(r: &Raster, y0: usize, x0: usize, size: usize) -> Raster {
    let c = r.channels();
    let mut data = Vec::with_capacity(size * size * c);
    for y in y0..y0 + size {
        for x in x0..x0 + size {
            for ch in 0..c {
                data.push(r.get(y, x, ch));
            }
        }
    }
    Raster::new(size, size, c, r.colorspace(), data).expect("crop keeps range")
}

fn flip_h(r: &Raster) -> Raster {
    let (h, w, c) = (r.height(), r.width(), r.channels());
    let mut data = Vec::with_capacity(h * w * c);
    for y in 0..h {
        for x in (0..w).rev() {
            for ch in 0..c {
                data.push(r.get(y, x, ch));
            }
        }
    }
    Raster::new(h, w, c, r.colorspace(), data).expect("flip keeps range")
}

fn rot90_ccw(r: &Raster) -> Raster {
    let (h, w, c) = (r.height(), r.width(), r.channels());
    // output (w, h): out[y][x] = in[x][w-1-y]
    let mut data = Vec::with_capacity(h * w * c);
    for y in 0..w {
        for x in 0..h {
            for ch in 0..c {
                data.push(r.get(x, w - 1 - y, ch));
            }
        }
    }
    Raster::new(w, h, c, r.colorspace(), data).expect("rotation keeps range")
}

fn apply_draw(r: &Raster, d: &AugmentDraw) -> Raster {
    let mut out = crop(r, d.y0, d.x0, d.patch);
    if d.flip_h {
        out = flip_h(&out);
    }
    for _ in 0..d.rot90 {
        out = rot90_ccw(&out);
    }
    out
}

/// Apply one random crop/flip/rotation to all rasters of the sample.
pub fn augment<R: Rng>(sample: &TrainSample, patch: usize, rng: &mut R) -> Result<TrainSample> {
    let d = AugmentDraw::sample(sample.mixed.height(), sample.mixed.width(), patch, rng)?;
    Ok(augment_with(sample, &d))
}

pub fn augment_with(sample: &TrainSample, d: &AugmentDraw) -> TrainSample {
    TrainSample {
        scene_id: sample.scene_id,
        phase: sample.phase,
        mixed: apply_draw(&sample.mixed, d),
        vis: apply_draw(&sample.vis, d),
        nir: apply_draw(&sample.nir, d),
        deviation: apply_draw(&sample.deviation, d),
        vis_long: sample.vis_long.as_ref().map(|r| apply_draw(r, d)),
    }
}
