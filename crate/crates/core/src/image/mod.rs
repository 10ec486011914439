//! Raster container and the pixel-level operations shared by the simulator,
//! the networks and the metrics.

mod bayer;
mod color;
pub mod io;
mod resize;

pub use bayer::{demosaic, mosaic};
pub use color::{
    gray_world_white_balance, hsv_to_rgb, rgb_to_hsv, rgb_to_yuv, yuv_to_rgb, RGB_FROM_YUV,
    RGB_FROM_YUV_F64, YUV_FROM_RGB, YUV_FROM_RGB_F64,
};
pub use resize::{resize_double, resize_half};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorSpace {
    Rgb,
    Yuv,
    Gray,
    Hsv,
}

/// H x W x C image, channel-interleaved row-major f32.
///
/// RGB/GRAY/HSV values live in [0,1]; YUV has Y in [0,1] and U,V in
/// [-0.5,0.5]. Constructors enforce the declared range.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    height: usize,
    width: usize,
    channels: usize,
    colorspace: ColorSpace,
    data: Vec<f32>,
}

impl Raster {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        colorspace: ColorSpace,
        data: Vec<f32>,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Validation(format!(
                "raster must have 1 or 3 channels, got {channels}"
            )));
        }
        if matches!(colorspace, ColorSpace::Gray) && channels != 1 {
            return Err(Error::Validation("gray raster must be single channel".into()));
        }
        if matches!(colorspace, ColorSpace::Rgb | ColorSpace::Yuv | ColorSpace::Hsv) && channels != 3
        {
            return Err(Error::Validation(format!(
                "{colorspace:?} raster must have 3 channels"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::Validation(format!(
                "raster data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        let r = Self {
            height,
            width,
            channels,
            colorspace,
            data,
        };
        r.check_range()?;
        Ok(r)
    }

    pub fn zeros(height: usize, width: usize, channels: usize, colorspace: ColorSpace) -> Self {
        Self::new(
            height,
            width,
            channels,
            colorspace,
            vec![0.0; height * width * channels],
        )
        .expect("zero raster is always valid")
    }

    fn check_range(&self) -> Result<()> {
        for (i, &v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite raster value {v} at flat index {i}"
                )));
            }
            let c = i % self.channels;
            let (lo, hi) = self.channel_range(c);
            if v < lo - RANGE_EPS || v > hi + RANGE_EPS {
                return Err(Error::Validation(format!(
                    "value {v} at flat index {i} outside declared range [{lo},{hi}]"
                )));
            }
        }
        Ok(())
    }

    fn channel_range(&self, c: usize) -> (f32, f32) {
        match self.colorspace {
            ColorSpace::Yuv if c > 0 => (-0.5, 0.5),
            _ => (0.0, 1.0),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// Extract one channel as a GRAY raster.
    pub fn channel(&self, c: usize) -> Result<Raster> {
        if c >= self.channels {
            return Err(Error::Validation(format!(
                "channel {c} out of range for {} channels",
                self.channels
            )));
        }
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px[c].clamp(0.0, 1.0))
            .collect();
        Raster::new(self.height, self.width, 1, ColorSpace::Gray, data)
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.channels == other.channels
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }
}

// Conversions accumulate rounding on the order of f32 epsilon; construction
// tolerates that much overshoot and callers see clean clamped data.
const RANGE_EPS: f32 = 1e-5;
