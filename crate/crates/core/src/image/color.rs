//! Colour-space conversions and gray-world white balance.
//!
//! YUV is BT.601 full range: Y in [0,1], U,V in [-0.5,0.5], chosen over the
//! studio-range variant so the round trip is a plain matrix pair. HSV is the
//! standard hexcone model and exists for the ablation harness.

use super::{ColorSpace, Raster};
use crate::error::{Error, Result};

pub const YUV_FROM_RGB: [[f32; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [-0.168_735_9, -0.331_264_1, 0.5],
    [0.5, -0.418_687_6, -0.081_312_4],
];

pub const RGB_FROM_YUV: [[f32; 3]; 3] = [
    [1.0, 0.0, 1.402],
    [1.0, -0.344_136_3, -0.714_136_3],
    [1.0, 1.772, 0.0],
];

/// Same matrices in f64 for the tensor-graph colour ops.
pub const YUV_FROM_RGB_F64: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [-0.168_735_9, -0.331_264_1, 0.5],
    [0.5, -0.418_687_6, -0.081_312_4],
];

pub const RGB_FROM_YUV_F64: [[f64; 3]; 3] = [
    [1.0, 0.0, 1.402],
    [1.0, -0.344_136_3, -0.714_136_3],
    [1.0, 1.772, 0.0],
];

pub fn rgb_to_yuv(r: &Raster) -> Result<Raster> {
    if r.colorspace() != ColorSpace::Rgb {
        return Err(Error::Validation("rgb_to_yuv expects an RGB raster".into()));
    }
    let data = r
        .data()
        .chunks_exact(3)
        .flat_map(|px| {
            YUV_FROM_RGB.iter().enumerate().map(move |(i, row)| {
                let v = row[0] * px[0] + row[1] * px[1] + row[2] * px[2];
                if i == 0 {
                    v.clamp(0.0, 1.0)
                } else {
                    v.clamp(-0.5, 0.5)
                }
            })
        })
        .collect();
    Raster::new(r.height(), r.width(), 3, ColorSpace::Yuv, data)
}

pub fn yuv_to_rgb(r: &Raster) -> Result<Raster> {
    if r.colorspace() != ColorSpace::Yuv {
        return Err(Error::Validation("yuv_to_rgb expects a YUV raster".into()));
    }
    let data = r
        .data()
        .chunks_exact(3)
        .flat_map(|px| {
            RGB_FROM_YUV
                .iter()
                .map(move |row| (row[0] * px[0] + row[1] * px[1] + row[2] * px[2]).clamp(0.0, 1.0))
        })
        .collect();
    Raster::new(r.height(), r.width(), 3, ColorSpace::Rgb, data)
}

/// Hexcone RGB -> HSV with H normalised to [0,1).
pub fn rgb_to_hsv(r: &Raster) -> Result<Raster> {
    if r.colorspace() != ColorSpace::Rgb {
        return Err(Error::Validation("rgb_to_hsv expects an RGB raster".into()));
    }
    let data = r
        .data()
        .chunks_exact(3)
        .flat_map(|px| {
            let (h, s, v) = hexcone_hsv(px[0], px[1], px[2]);
            [h, s, v]
        })
        .collect();
    Raster::new(r.height(), r.width(), 3, ColorSpace::Hsv, data)
}

pub fn hsv_to_rgb(r: &Raster) -> Result<Raster> {
    if r.colorspace() != ColorSpace::Hsv {
        return Err(Error::Validation("hsv_to_rgb expects an HSV raster".into()));
    }
    let data = r
        .data()
        .chunks_exact(3)
        .flat_map(|px| {
            let (r, g, b) = hexcone_rgb(px[0], px[1], px[2]);
            [r.clamp(0.0, 1.0), g.clamp(0.0, 1.0), b.clamp(0.0, 1.0)]
        })
        .collect();
    Raster::new(r.height(), r.width(), 3, ColorSpace::Rgb, data)
}

pub(crate) fn hexcone_hsv(r: f32, g: f32, b: f32) -> (f32, f32, f32) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    } / 6.0;
    (h, s, v)
}

pub(crate) fn hexcone_rgb(h: f32, s: f32, v: f32) -> (f32, f32, f32) {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let c = v * s;
    let x = c * (1.0 - ((h6 % 2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h6 as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    (r + m, g + m, b + m)
}

/// Gray-world white balance: scale each channel so its mean matches the
/// global mean luminance (mean over all channels), clamped back to [0,1].
pub fn gray_world_white_balance(r: &Raster) -> Result<Raster> {
    if r.colorspace() != ColorSpace::Rgb {
        return Err(Error::Validation("white balance expects an RGB raster".into()));
    }
    let n = (r.height() * r.width()) as f64;
    let mut sums = [0.0f64; 3];
    for px in r.data().chunks_exact(3) {
        for c in 0..3 {
            sums[c] += px[c] as f64;
        }
    }
    let means = [sums[0] / n, sums[1] / n, sums[2] / n];
    let global = (means[0] + means[1] + means[2]) / 3.0;
    for (c, &m) in means.iter().enumerate() {
        if m <= f64::EPSILON {
            return Err(Error::Validation(format!(
                "channel {c} has zero mean; white balance is degenerate"
            )));
        }
    }
    let gains = [
        (global / means[0]) as f32,
        (global / means[1]) as f32,
        (global / means[2]) as f32,
    ];
    let data = r
        .data()
        .chunks_exact(3)
        .flat_map(|px| [0, 1, 2].map(|c| (px[c] * gains[c]).clamp(0.0, 1.0)))
        .collect();
    Raster::new(r.height(), r.width(), 3, ColorSpace::Rgb, data)
}
