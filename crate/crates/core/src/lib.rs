//! A computational-imaging toolkit around a hot-mirror-free silicon sensor.
//!
//! The crate simulates the full capture chain of a camera whose sensor sees
//! both visible and near-infrared light, synthesizes aligned MIX/VIS/NIR
//! image triples with exact ground truth, and trains a four-subnet
//! separation-and-restoration pipeline that turns the mixed raw signal back
//! into a clean colour image at any time of day.

pub mod autodiff;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod nets;
pub mod image;
pub mod sensor;
pub mod spectral;
pub mod train;

pub use error::{Error, Result};
