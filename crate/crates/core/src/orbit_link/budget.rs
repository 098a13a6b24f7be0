use super::{to_db_loss, GroundStation, LinkError};
use serde::{Deserialize, Serialize};

/// Airmass is clamped below this elevation.
const MIN_AIRMASS_ELEVATION_DEG: f64 = 5.0;

/// Downlink budget parameters.
///
/// `fixed_system_loss_db` is a calibration knob: the default places the total
/// channel efficiency at a 1000 km culmination where a 100 MHz decoy source
/// yields roughly 3 kb/s of sifted key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    /// Far-field half-angle divergence, radians.
    pub divergence_half_angle: f64,
    /// RMS pointing jitter, radians.
    pub pointing_jitter: f64,
    pub atmospheric_loss_zenith_db: f64,
    pub fixed_system_loss_db: f64,
    /// Background counts per second per detector.
    pub background_click_rate: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            divergence_half_angle: 10e-6,
            pointing_jitter: 1e-6,
            atmospheric_loss_zenith_db: 0.5,
            fixed_system_loss_db: 5.24,
            background_click_rate: 75.0,
        }
    }
}

impl LinkBudget {
    /// A budget with every loss term switched off.
    pub fn lossless(divergence_half_angle: f64) -> Self {
        Self {
            divergence_half_angle,
            pointing_jitter: 0.0,
            atmospheric_loss_zenith_db: 0.0,
            fixed_system_loss_db: 0.0,
            background_click_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.divergence_half_angle > 0.0) {
            return Err(LinkError::InvalidBudget("divergence must be positive".into()));
        }
        for (name, v) in [
            ("pointing_jitter", self.pointing_jitter),
            ("atmospheric_loss_zenith_db", self.atmospheric_loss_zenith_db),
            ("fixed_system_loss_db", self.fixed_system_loss_db),
            ("background_click_rate", self.background_click_rate),
        ] {
            if !(v >= 0.0) {
                return Err(LinkError::InvalidBudget(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Per-factor linear transmittances of the link; their product is the total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFactors {
    pub geometric: f64,
    pub pointing: f64,
    pub atmospheric: f64,
    pub optical: f64,
    pub detector: f64,
    pub fixed: f64,
}

impl LinkFactors {
    pub fn total(&self) -> f64 {
        self.geometric * self.pointing * self.atmospheric * self.optical * self.detector * self.fixed
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.geometric,
            self.pointing,
            self.atmospheric,
            self.optical,
            self.detector,
            self.fixed,
        ]
    }

    pub fn total_db(&self) -> f64 {
        self.as_array().iter().map(|&f| to_db_loss(f)).sum()
    }
}

pub fn link_factors(
    range_m: f64,
    elevation_deg: f64,
    budget: &LinkBudget,
    station: &GroundStation,
) -> Result<LinkFactors, LinkError> {
    if !(range_m > 0.0) {
        return Err(LinkError::NonPositiveRange(range_m));
    }
    if !(elevation_deg > 0.0) {
        return Err(LinkError::NonPositiveElevation(elevation_deg));
    }
    budget.validate()?;

    let spot_diameter = 2.0 * budget.divergence_half_angle * range_m;
    let geometric = (station.receiver_aperture_m / spot_diameter).powi(2).min(1.0);
    let ratio = budget.pointing_jitter / budget.divergence_half_angle;
    let pointing = (-2.0 * ratio * ratio).exp();
    let airmass = 1.0 / elevation_deg.max(MIN_AIRMASS_ELEVATION_DEG).to_radians().sin();
    let atmospheric = 10f64.powf(-budget.atmospheric_loss_zenith_db * airmass / 10.0);
    let fixed = 10f64.powf(-budget.fixed_system_loss_db / 10.0);

    Ok(LinkFactors {
        geometric,
        pointing,
        atmospheric,
        optical: station.optical_efficiency,
        detector: station.detector_efficiency,
        fixed,
    })
}

/// Total channel transmittance for one geometry sample, in (0, 1].
pub fn channel_transmittance(
    range_m: f64,
    elevation_deg: f64,
    budget: &LinkBudget,
    station: &GroundStation,
) -> Result<f64, LinkError> {
    Ok(link_factors(range_m, elevation_deg, budget, station)?.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit_link::SatelliteOrbit;
    use proptest::prelude::*;

    fn ideal_station() -> GroundStation {
        let mut s = GroundStation::new("ideal", 0.0, 0.0, 0.0);
        s.detector_efficiency = 1.0;
        s.optical_efficiency = 1.0;
        s
    }

    #[test]
    fn lossless_limit_is_unity() {
        let t = channel_transmittance(1e-3, 90.0, &LinkBudget::lossless(10e-6), &ideal_station()).unwrap();
        assert_eq!(t, 1.0);
    }

    /// Numerical overlap of a uniform disk beam with a centred circular
    /// aperture, by midpoint quadrature over the aperture.
    fn overlap_integral(beam_radius: f64, aperture_radius: f64, n: usize) -> f64 {
        let h = 2.0 * aperture_radius / n as f64;
        let intensity = 1.0 / (std::f64::consts::PI * beam_radius * beam_radius);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = -aperture_radius + (i as f64 + 0.5) * h;
                let y = -aperture_radius + (j as f64 + 0.5) * h;
                let r2 = x * x + y * y;
                if r2 <= aperture_radius * aperture_radius && r2 <= beam_radius * beam_radius {
                    acc += intensity * h * h;
                }
            }
        }
        acc
    }

    #[test]
    fn geometric_capture_at_1000_km() {
        let f = link_factors(1.0e6, 90.0, &LinkBudget::lossless(10e-6), &ideal_station()).unwrap();
        assert!((f.geometric - 2.5e-3).abs() < 1e-12);
        assert!((to_db_loss(f.geometric) - 26.0206).abs() < 1e-3);
        let numeric = overlap_integral(10.0, 0.5, 800);
        assert!((numeric - f.geometric).abs() / f.geometric < 1e-2, "{numeric}");
    }

    #[test]
    fn doubling_range_adds_six_db() {
        let b = LinkBudget::lossless(10e-6);
        let s = ideal_station();
        let a = link_factors(8e5, 40.0, &b, &s).unwrap().geometric;
        let c = link_factors(1.6e6, 40.0, &b, &s).unwrap().geometric;
        assert!((to_db_loss(c) - to_db_loss(a) - 6.0206).abs() < 0.01);
    }

    #[test]
    fn calibrated_default_gives_three_kbps_rate_balance() {
        // Rate-balance oracle: sifted ≈ f_rep · Σ p_c µ_c η · ½ with the
        // default signal/decoy/vacuum mix 0.5/0.25/0.25 at µ = 0.8/0.1/0.
        let orbit = SatelliteOrbit::default();
        let el = orbit.elevation_for_range(1.0e6).unwrap();
        let s = GroundStation::new("x", 40.0, 117.0, 890.0);
        let eta = channel_transmittance(1.0e6, el, &LinkBudget::default(), &s).unwrap();
        let sifted = 1e8 * (0.5 * 0.8 + 0.25 * 0.1) * eta * 0.5;
        assert!((to_db_loss(eta) - 38.5).abs() < 0.05, "{}", to_db_loss(eta));
        assert!((sifted - 3000.0).abs() < 30.0, "{sifted}");
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        let b = LinkBudget::default();
        let s = ideal_station();
        assert!(channel_transmittance(0.0, 30.0, &b, &s).is_err());
        assert!(channel_transmittance(1e6, 0.0, &b, &s).is_err());
    }

    proptest! {
        #[test]
        fn factors_are_db_additive_and_bounded(range in 1e3f64..3e6, el in 0.5f64..90.0) {
            let f = link_factors(range, el, &LinkBudget::default(), &GroundStation::new("s", 0.0, 0.0, 0.0)).unwrap();
            let t = f.total();
            prop_assert!(t > 0.0 && t <= 1.0);
            prop_assert!((f.total_db() - to_db_loss(t)).abs() < 1e-9);
        }

        #[test]
        fn monotone_in_range_and_elevation(r1 in 1e3f64..3e6, r2 in 1e3f64..3e6, e1 in 0.5f64..90.0, e2 in 0.5f64..90.0) {
            let b = LinkBudget::default();
            let s = GroundStation::new("s", 0.0, 0.0, 0.0);
            let (rlo, rhi) = (r1.min(r2), r1.max(r2));
            prop_assert!(channel_transmittance(rhi, e1, &b, &s).unwrap() <= channel_transmittance(rlo, e1, &b, &s).unwrap());
            let (elo, ehi) = (e1.min(e2), e1.max(e2));
            prop_assert!(channel_transmittance(r1, elo, &b, &s).unwrap() <= channel_transmittance(r1, ehi, &b, &s).unwrap());
        }
    }
}
