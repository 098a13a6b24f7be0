//! Satellite pass geometry and free-space optical link budget.
//!
//! The orbit is an idealized circular orbit over a spherical Earth; a pass is
//! parameterized by its culmination elevation. The link budget multiplies a
//! far-field diffraction cone capture, a static pointing factor, an airmass
//! scaled atmospheric loss and the receiver's efficiencies.

mod budget;
mod geometry;

pub use budget::{channel_transmittance, link_factors, LinkBudget, LinkFactors};
pub use geometry::{generate_pass, visible_duration, PassGeometry, PassSample, SatelliteOrbit};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for all geometry.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("invalid station {id}: {reason}")]
    InvalidStation { id: String, reason: String },
    #[error("invalid orbit: {0}")]
    InvalidOrbit(String),
    #[error("invalid pass request: {0}")]
    InvalidPass(String),
    #[error("invalid link budget: {0}")]
    InvalidBudget(String),
    #[error("slant range must be positive, got {0} m")]
    NonPositiveRange(f64),
    #[error("elevation must be positive, got {0} deg")]
    NonPositiveElevation(f64),
}

/// An optical ground station receiving the downlink.
///
/// Aperture, efficiencies and dark counts are calibration defaults, not
/// measured values for any real station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStation {
    pub id: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    #[serde(default = "defaults::aperture")]
    pub receiver_aperture_m: f64,
    #[serde(default = "defaults::detector_efficiency")]
    pub detector_efficiency: f64,
    /// Counts per second, per detector.
    #[serde(default = "defaults::dark_count_rate")]
    pub dark_count_rate: f64,
    #[serde(default = "defaults::optical_efficiency")]
    pub optical_efficiency: f64,
}

pub(crate) mod defaults {
    pub fn aperture() -> f64 {
        1.0
    }
    pub fn detector_efficiency() -> f64 {
        0.5
    }
    pub fn dark_count_rate() -> f64 {
        25.0
    }
    pub fn optical_efficiency() -> f64 {
        0.5
    }
}

impl GroundStation {
    /// A station with default receiver parameters at the given site.
    pub fn new(id: impl Into<String>, latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Self {
        Self {
            id: id.into(),
            latitude_deg,
            longitude_deg,
            altitude_m,
            receiver_aperture_m: defaults::aperture(),
            detector_efficiency: defaults::detector_efficiency(),
            dark_count_rate: defaults::dark_count_rate(),
            optical_efficiency: defaults::optical_efficiency(),
        }
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |reason: &str| LinkError::InvalidStation {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(bad("latitude outside [-90, 90]"));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(bad("longitude outside [-180, 180]"));
        }
        for (name, v) in [
            ("detector_efficiency", self.detector_efficiency),
            ("optical_efficiency", self.optical_efficiency),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(bad(&format!("{name} must be in (0, 1]")));
            }
        }
        if !(self.receiver_aperture_m > 0.0) {
            return Err(bad("receiver aperture must be positive"));
        }
        if !(self.dark_count_rate >= 0.0) {
            return Err(bad("dark count rate must be non-negative"));
        }
        Ok(())
    }
}

/// Converts a linear transmittance to loss in dB (positive for loss).
pub fn to_db_loss(t: f64) -> f64 {
    -10.0 * t.log10()
}
