//! Exact raster IO: flat little-endian f32 binaries with JSON sidecars,
//! plus 8/16-bit PNG export for visualisation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ColorSpace, Raster};
use crate::error::{Error, Result};

/// JSON sidecar describing a `.f32` raster file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub colorspace: ColorSpace,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

fn sidecar_path(raster_path: &Path) -> std::path::PathBuf {
    raster_path.with_extension("json")
}

/// Write `raster` as little-endian f32 plus a JSON sidecar next to it.
pub fn save_raster(
    path: &Path,
    raster: &Raster,
    role: &str,
    seed: Option<u64>,
    config: Option<serde_json::Value>,
) -> Result<()> {
    let mut bytes = Vec::with_capacity(raster.data().len() * 4);
    for &v in raster.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    let sidecar = Sidecar {
        height: raster.height(),
        width: raster.width(),
        channels: raster.channels(),
        colorspace: raster.colorspace(),
        role: role.to_string(),
        seed,
        config,
    };
    let json = serde_json::to_vec_pretty(&sidecar)?;
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn load_sidecar(raster_path: &Path) -> Result<Sidecar> {
    let text = fs::read(sidecar_path(raster_path)).map_err(|e| {
        Error::Data(format!(
            "missing sidecar for {}: {e}",
            raster_path.display()
        ))
    })?;
    Ok(serde_json::from_slice(&text)?)
}

pub fn load_raster(path: &Path) -> Result<Raster> {
    let sidecar = load_sidecar(path)?;
    let bytes = fs::read(path)
        .map_err(|e| Error::Data(format!("missing raster {}: {e}", path.display())))?;
    let expected = sidecar.height * sidecar.width * sidecar.channels * 4;
    if bytes.len() != expected {
        return Err(Error::Data(format!(
            "raster {} has {} bytes, sidecar says {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Raster::new(
        sidecar.height,
        sidecar.width,
        sidecar.channels,
        sidecar.colorspace,
        data,
    )
}

/// Export to PNG. `bits` must be 8 or 16; values are scaled from [0,1].
pub fn save_png(path: &Path, raster: &Raster, bits: u8) -> Result<()> {
    let (h, w) = (raster.height() as u32, raster.width() as u32);
    let err = |e: image::ImageError| Error::Data(format!("png write failed: {e}"));
    match (raster.channels(), bits) {
        (3, 8) => {
            let buf: Vec<u8> = raster
                .data()
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect();
            let img = image::RgbImage::from_raw(w, h, buf)
                .ok_or_else(|| Error::Data("png buffer size mismatch".into()))?;
            img.save(path).map_err(err)
        }
        (3, 16) => {
            let buf: Vec<u16> = raster
                .data()
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
                .collect();
            let img = image::ImageBuffer::<image::Rgb<u16>, _>::from_raw(w, h, buf)
                .ok_or_else(|| Error::Data("png buffer size mismatch".into()))?;
            img.save(path).map_err(err)
        }
        (1, 8) => {
            let buf: Vec<u8> = raster
                .data()
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect();
            let img = image::GrayImage::from_raw(w, h, buf)
                .ok_or_else(|| Error::Data("png buffer size mismatch".into()))?;
            img.save(path).map_err(err)
        }
        (1, 16) => {
            let buf: Vec<u16> = raster
                .data()
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
                .collect();
            let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w, h, buf)
                .ok_or_else(|| Error::Data("png buffer size mismatch".into()))?;
            img.save(path).map_err(err)
        }
        (_, b) => Err(Error::Validation(format!("unsupported png depth {b}"))),
    }
}

/// Load an 8- or 16-bit PNG into an RGB (or GRAY) raster in [0,1].
pub fn load_png(path: &Path) -> Result<Raster> {
    let img = image::open(path).map_err(|e| Error::Data(format!("png read failed: {e}")))?;
    match img {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            let data = g.into_raw().iter().map(|&v| v as f32 / 255.0).collect();
            Raster::new(h as usize, w as usize, 1, ColorSpace::Gray, data)
        }
        image::DynamicImage::ImageLuma16(g) => {
            let (w, h) = g.dimensions();
            let data = g.into_raw().iter().map(|&v| v as f32 / 65535.0).collect();
            Raster::new(h as usize, w as usize, 1, ColorSpace::Gray, data)
        }
        image::DynamicImage::ImageRgb16(g) => {
            let (w, h) = g.dimensions();
            let data = g.into_raw().iter().map(|&v| v as f32 / 65535.0).collect();
            Raster::new(h as usize, w as usize, 3, ColorSpace::Rgb, data)
        }
        other => {
            let rgb = other.into_rgb8();
            let (w, h) = rgb.dimensions();
            let data = rgb.into_raw().iter().map(|&v| v as f32 / 255.0).collect();
            Raster::new(h as usize, w as usize, 3, ColorSpace::Rgb, data)
        }
    }
}
