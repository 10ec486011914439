//! Spectral curves on the fixed sensor wavelength grid.
//!
//! Everything radiometric in this crate (illuminants, filter transmittances,
//! photoelectric sensitivities, per-pixel reflectances) is a sampled function
//! of wavelength on one shared grid: 300-950 nm inclusive in 10 nm steps,
//! 66 bins. Integrals are Riemann sums `sum(v_k) * STEP_NM`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_MIN_NM: f64 = 300.0;
pub const GRID_MAX_NM: f64 = 950.0;
pub const GRID_STEP_NM: f64 = 10.0;
pub const GRID_BINS: usize = 66;

/// Wavelength of bin `i` in nanometres.
pub fn bin_wavelength(i: usize) -> f64 {
    GRID_MIN_NM + GRID_STEP_NM * i as f64
}

/// What a curve represents; transmittances are additionally bounded by 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveRole {
    Transmittance,
    Sensitivity,
    Irradiance,
}

/// Optical band selected by the filter wheel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// No filter: unit transmittance everywhere.
    Full,
    /// Shortpass cutting at 700 nm.
    VisPass,
    /// Longpass opening at 850 nm.
    NirPass,
    /// The 700-850 nm interval passed by neither filter.
    Deviation,
}

/// A non-negative sampled spectrum on the shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    role: CurveRole,
    values: Vec<f64>,
}

impl SpectralCurve {
    pub fn new(role: CurveRole, values: Vec<f64>) -> Result<Self> {
        if values.len() != GRID_BINS {
            return Err(Error::Config(format!(
                "spectral curve has {} bins, grid requires {}",
                values.len(),
                GRID_BINS
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Validation(format!(
                    "curve value {v} at bin {i} ({} nm) must be finite and >= 0",
                    bin_wavelength(i)
                )));
            }
            if role == CurveRole::Transmittance && v > 1.0 {
                return Err(Error::Validation(format!(
                    "transmittance {v} at {} nm exceeds 1",
                    bin_wavelength(i)
                )));
            }
        }
        Ok(Self { role, values })
    }

    pub fn role(&self) -> CurveRole {
        self.role
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, bin: usize) -> f64 {
        self.values[bin]
    }

    /// Constant spectrum.
    pub fn flat(role: CurveRole, level: f64) -> Result<Self> {
        Self::new(role, vec![level; GRID_BINS])
    }

    /// Constant on `[lo_nm, hi_nm)`, zero elsewhere.
    pub fn flat_band(role: CurveRole, level: f64, lo_nm: f64, hi_nm: f64) -> Result<Self> {
        let values = (0..GRID_BINS)
            .map(|i| {
                let w = bin_wavelength(i);
                if w >= lo_nm && w < hi_nm {
                    level
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(role, values)
    }

    /// Gaussian line normalised to unit peak, integrated analytically over
    /// each 10 nm bin so narrow lines (the 15 nm FWHM NIR LED) are not
    /// undersampled by point sampling.
    pub fn gaussian(role: CurveRole, center_nm: f64, fwhm_nm: f64) -> Result<Self> {
        if fwhm_nm <= 0.0 {
            return Err(Error::Config(format!("gaussian fwhm {fwhm_nm} must be > 0")));
        }
        let sigma = fwhm_nm / (8.0 * std::f64::consts::LN_2).sqrt();
        let mut values: Vec<f64> = (0..GRID_BINS)
            .map(|i| {
                let w = bin_wavelength(i);
                let a = (w - GRID_STEP_NM / 2.0 - center_nm) / (sigma * std::f64::consts::SQRT_2);
                let b = (w + GRID_STEP_NM / 2.0 - center_nm) / (sigma * std::f64::consts::SQRT_2);
                // bin mean of the unit-peak gaussian
                sigma * (std::f64::consts::PI / 2.0).sqrt() * (erf(b) - erf(a)) / GRID_STEP_NM
            })
            .collect();
        let peak = values.iter().cloned().fold(0.0f64, f64::max);
        if peak > 0.0 {
            for v in &mut values {
                *v /= peak;
            }
        }
        Self::new(role, values)
    }

    /// Ideal shortpass filter: unit below the cut, zero at and above it.
    /// A nonzero `slope_nm` turns the step into a linear ramp of that width
    /// centred on the cut wavelength.
    pub fn shortpass(cut_nm: f64, slope_nm: f64) -> Result<Self> {
        let values = (0..GRID_BINS)
            .map(|i| ramp_down(bin_wavelength(i), cut_nm, slope_nm))
            .collect();
        Self::new(CurveRole::Transmittance, values)
    }

    /// Ideal longpass filter: zero below the open wavelength, unit at and
    /// above it.
    pub fn longpass(open_nm: f64, slope_nm: f64) -> Result<Self> {
        let values = (0..GRID_BINS)
            .map(|i| 1.0 - ramp_down(bin_wavelength(i), open_nm, slope_nm))
            .collect();
        Self::new(CurveRole::Transmittance, values)
    }

    /// Transmittance of the selected band with ideal (zero-slope) edges at
    /// 700 and 850 nm. The four bands partition the grid: for every bin,
    /// full = vis_pass + deviation + nir_pass.
    pub fn band_filter(band: Band) -> Self {
        let values = (0..GRID_BINS)
            .map(|i| {
                let w = bin_wavelength(i);
                let sel = match band {
                    Band::Full => true,
                    Band::VisPass => w < VIS_CUT_NM,
                    Band::NirPass => w >= NIR_OPEN_NM,
                    Band::Deviation => (VIS_CUT_NM..NIR_OPEN_NM).contains(&w),
                };
                if sel {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            role: CurveRole::Transmittance,
            values,
        }
    }

    /// Riemann integral of the curve, `sum(v) * STEP`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * GRID_STEP_NM
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.role, self.values.iter().map(|v| v * factor).collect())
    }
}

/// Shortpass cut of the VIS filter (nm).
pub const VIS_CUT_NM: f64 = 700.0;
/// Longpass opening of the NIR filter (nm).
pub const NIR_OPEN_NM: f64 = 850.0;

fn ramp_down(w: f64, cut: f64, slope: f64) -> f64 {
    if slope <= 0.0 {
        return if w < cut { 1.0 } else { 0.0 };
    }
    let t = (w - (cut - slope / 2.0)) / slope;
    (1.0 - t).clamp(0.0, 1.0)
}

/// Synthetic per-channel photoelectric sensitivities: B/G/R gaussians peaked
/// at 460/540/600 nm plus one NIR lobe over 700-950 nm shared by all three
/// channels (the CFA dyes are transparent there).
pub fn synthetic_sensitivities() -> [SpectralCurve; 3] {
    let nir_lobe: Vec<f64> = (0..GRID_BINS)
        .map(|i| {
            let w = bin_wavelength(i);
            if w < VIS_CUT_NM {
                0.0
            } else {
                0.35 * gauss(w, 850.0, 60.0)
            }
        })
        .collect();
    let make = |peak_nm: f64| {
        let values: Vec<f64> = (0..GRID_BINS)
            .map(|i| {
                let w = bin_wavelength(i);
                let vis = if w < VIS_CUT_NM {
                    gauss(w, peak_nm, 40.0)
                } else {
                    0.0
                };
                vis + nir_lobe[i]
            })
            .collect();
        SpectralCurve::new(CurveRole::Sensitivity, values).expect("synthetic curve is valid")
    };
    [make(600.0), make(540.0), make(460.0)]
}

fn gauss(w: f64, mu: f64, sigma: f64) -> f64 {
    let z = (w - mu) / sigma;
    (-0.5 * z * z).exp()
}

/// Abramowitz & Stegun 7.1.26 rational approximation, |err| < 1.5e-7.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let y = 1.0
        - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
            + 0.254829592)
            * t
            * (-x * x).exp();
    sign * y
}
