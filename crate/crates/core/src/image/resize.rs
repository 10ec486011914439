//! 2x down/up resampling: box average down, nearest neighbour up.

use super::Raster;
use crate::error::{Error, Result};

/// Downscale by 2 with a 2x2 box average.
pub fn resize_half(r: &Raster) -> Result<Raster> {
    if r.height() % 2 != 0 || r.width() % 2 != 0 {
        return Err(Error::Validation(format!(
            "resize_half requires even dimensions, got {}x{}",
            r.height(),
            r.width()
        )));
    }
    let (h, w, c) = (r.height() / 2, r.width() / 2, r.channels());
    let mut out = vec![0.0f32; h * w * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let s = r.get(2 * y, 2 * x, ch)
                    + r.get(2 * y, 2 * x + 1, ch)
                    + r.get(2 * y + 1, 2 * x, ch)
                    + r.get(2 * y + 1, 2 * x + 1, ch);
                out[(y * w + x) * c + ch] = s / 4.0;
            }
        }
    }
    Raster::new(h, w, c, r.colorspace(), out)
}

/// Upscale by 2 with nearest-neighbour replication.
pub fn resize_double(r: &Raster) -> Result<Raster> {
    let (h, w, c) = (r.height() * 2, r.width() * 2, r.channels());
    let mut out = vec![0.0f32; h * w * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                out[(y * w + x) * c + ch] = r.get(y / 2, x / 2, ch);
            }
        }
    }
    Raster::new(h, w, c, r.colorspace(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ColorSpace;
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_round_trips_exactly() {
        let x = Raster::new(4, 4, 1, ColorSpace::Gray, vec![0.42; 16]).unwrap();
        let back = resize_double(&resize_half(&x).unwrap()).unwrap();
        assert_eq!(back.data(), x.data());
    }

    #[test]
    fn box_mean_of_2x2_block() {
        let x = Raster::new(2, 2, 1, ColorSpace::Gray, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let h = resize_half(&x).unwrap();
        assert_eq!(h.data(), &[0.5]);
    }

    #[test]
    fn odd_dims_rejected() {
        let x = Raster::new(3, 2, 1, ColorSpace::Gray, vec![0.0; 6]).unwrap();
        assert!(resize_half(&x).is_err());
    }

    #[test]
    fn ramp_matches_brute_force_box_average() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let data: Vec<f32> = (0..8 * 6 * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let x = Raster::new(8, 6, 3, ColorSpace::Rgb, data).unwrap();
        let h = resize_half(&x).unwrap();
        for y in 0..4 {
            for xx in 0..3 {
                for c in 0..3 {
                    let mut s = 0.0;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            s += x.get(2 * y + dy, 2 * xx + dx, c);
                        }
                    }
                    assert!((h.get(y, xx, c) - s / 4.0).abs() < 1e-6);
                }
            }
        }
    }
}
