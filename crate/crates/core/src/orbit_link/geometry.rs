use super::{GroundStation, LinkError, EARTH_RADIUS_M};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

/// Circular orbit parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteOrbit {
    pub altitude_m: f64,
    pub period_s: f64,
    /// Speed along the orbit, m/s.
    pub ground_speed_mps: f64,
}

impl Default for SatelliteOrbit {
    fn default() -> Self {
        Self {
            altitude_m: 500_000.0,
            period_s: 94.0 * 60.0,
            ground_speed_mps: 7_600.0,
        }
    }
}

impl SatelliteOrbit {
    pub fn new(altitude_m: f64, period_s: f64, ground_speed_mps: f64) -> Result<Self, LinkError> {
        let orbit = Self {
            altitude_m,
            period_s,
            ground_speed_mps,
        };
        orbit.validate()?;
        Ok(orbit)
    }

    /// Checks positivity and that the stated speed matches the circular
    /// orbital speed `2π(R+h)/T` within 5%.
    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.altitude_m > 0.0) {
            return Err(LinkError::InvalidOrbit("altitude must be positive".into()));
        }
        if !(self.period_s > 0.0) {
            return Err(LinkError::InvalidOrbit("period must be positive".into()));
        }
        let implied = self.orbital_speed();
        let rel = (self.ground_speed_mps - implied).abs() / implied;
        if !(rel <= 0.05) {
            return Err(LinkError::InvalidOrbit(format!(
                "speed {:.0} m/s inconsistent with altitude/period ({implied:.0} m/s)",
                self.ground_speed_mps
            )));
        }
        Ok(())
    }

    pub fn orbit_radius(&self) -> f64 {
        EARTH_RADIUS_M + self.altitude_m
    }

    pub fn orbital_speed(&self) -> f64 {
        2.0 * PI * self.orbit_radius() / self.period_s
    }

    pub fn angular_rate(&self) -> f64 {
        2.0 * PI / self.period_s
    }

    /// Earth central angle between station and sub-satellite point at which
    /// the satellite is seen at `elevation_deg`.
    pub fn central_angle_at_elevation(&self, elevation_deg: f64) -> f64 {
        let el = elevation_deg.to_radians();
        FRAC_PI_2 - el - (EARTH_RADIUS_M * el.cos() / self.orbit_radius()).asin()
    }

    /// Slant range and elevation (deg) for a central angle.
    pub fn look_angles(&self, central_angle: f64) -> (f64, f64) {
        let (r, rs) = (EARTH_RADIUS_M, self.orbit_radius());
        let c = central_angle.cos();
        let range = (r * r + rs * rs - 2.0 * r * rs * c).max(0.0).sqrt();
        let sin_el = ((rs * c - r) / range).clamp(-1.0, 1.0);
        (range, sin_el.asin().to_degrees())
    }

    /// Elevation (deg) at which the slant range equals `range_m`.
    pub fn elevation_for_range(&self, range_m: f64) -> Option<f64> {
        let (r, rs) = (EARTH_RADIUS_M, self.orbit_radius());
        let s = (rs * rs - r * r - range_m * range_m) / (2.0 * r * range_m);
        (-1.0..=1.0).contains(&s).then(|| s.asin().to_degrees())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassSample {
    pub t_s: f64,
    pub range_m: f64,
    pub elevation_deg: f64,
}

/// Time-sampled look angles for one pass over one station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassGeometry {
    pub station_id: String,
    pub samples: Vec<PassSample>,
    pub min_elevation_mask_deg: f64,
    /// Spacing between samples; each sample stands for one slice of this length.
    pub sample_interval_s: f64,
}

impl PassGeometry {
    /// Wraps caller-provided samples, checking ordering and the mask.
    pub fn new(
        station_id: impl Into<String>,
        samples: Vec<PassSample>,
        min_elevation_mask_deg: f64,
        sample_interval_s: f64,
    ) -> Result<Self, LinkError> {
        if !(sample_interval_s > 0.0) {
            return Err(LinkError::InvalidPass("sample interval must be positive".into()));
        }
        if samples.windows(2).any(|w| w[1].t_s <= w[0].t_s) {
            return Err(LinkError::InvalidPass("sample times must strictly increase".into()));
        }
        if let Some(s) = samples.iter().find(|s| s.elevation_deg < min_elevation_mask_deg) {
            return Err(LinkError::InvalidPass(format!(
                "sample at t={} below mask ({} < {})",
                s.t_s, s.elevation_deg, min_elevation_mask_deg
            )));
        }
        Ok(Self {
            station_id: station_id.into(),
            samples,
            min_elevation_mask_deg,
            sample_interval_s,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time covered by the slices, `samples × interval`.
    pub fn covered_duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_interval_s
    }

    pub fn culmination(&self) -> Option<&PassSample> {
        self.samples
            .iter()
            .max_by(|a, b| a.elevation_deg.total_cmp(&b.elevation_deg))
    }

    /// Keeps only the `n` samples centred on culmination.
    pub fn around_culmination(&self, n: usize) -> PassGeometry {
        let Some(peak) = self
            .samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.elevation_deg.total_cmp(&b.1.elevation_deg))
            .map(|(i, _)| i)
        else {
            return self.clone();
        };
        let start = peak.saturating_sub(n / 2).min(self.samples.len().saturating_sub(n));
        let end = (start + n).min(self.samples.len());
        PassGeometry {
            samples: self.samples[start..end].to_vec(),
            ..self.clone()
        }
    }

    /// CSV with header `t_s,range_m,elevation_deg`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,range_m,elevation_deg\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{:.3},{:.6}", s.t_s, s.range_m, s.elevation_deg);
        }
        out
    }
}

/// Samples an idealized pass whose culmination elevation is `max_elevation_deg`.
///
/// The satellite moves along a great circle at constant angular rate; the
/// station sits at a fixed cross-track central angle chosen so the closest
/// approach happens at the requested elevation. Samples are taken every
/// `sample_interval_s` symmetrically about culmination and kept while the
/// elevation is at or above `mask_deg`. Times start at zero on the first
/// retained sample.
pub fn generate_pass(
    orbit: &SatelliteOrbit,
    station: &GroundStation,
    max_elevation_deg: f64,
    sample_interval_s: f64,
    mask_deg: f64,
) -> Result<PassGeometry, LinkError> {
    orbit.validate()?;
    if !(mask_deg > 0.0) {
        return Err(LinkError::InvalidPass(format!("mask must be positive, got {mask_deg}")));
    }
    if !(max_elevation_deg <= 90.0) {
        return Err(LinkError::InvalidPass(format!(
            "max elevation {max_elevation_deg} exceeds 90 deg"
        )));
    }
    if max_elevation_deg < mask_deg {
        return Err(LinkError::InvalidPass(format!(
            "max elevation {max_elevation_deg} below mask {mask_deg}"
        )));
    }
    if !(sample_interval_s > 0.0) {
        return Err(LinkError::InvalidPass("sample interval must be positive".into()));
    }

    let cross_track = orbit.central_angle_at_elevation(max_elevation_deg).max(0.0);
    let mask_angle = orbit.central_angle_at_elevation(mask_deg);
    // cos(psi) = cos(cross) * cos(along) on the sphere.
    let along_max = (mask_angle.cos() / cross_track.cos()).clamp(-1.0, 1.0).acos();
    let tau_max = along_max / orbit.angular_rate();
    let half = (tau_max / sample_interval_s + 1e-9).floor() as i64;

    let mut samples = Vec::with_capacity(2 * half as usize + 1);
    for k in -half..=half {
        let tau = k as f64 * sample_interval_s;
        let along = orbit.angular_rate() * tau;
        let psi = (cross_track.cos() * along.cos()).clamp(-1.0, 1.0).acos();
        let (range_m, elevation_deg) = orbit.look_angles(psi);
        if elevation_deg + 1e-9 < mask_deg {
            continue;
        }
        samples.push(PassSample {
            t_s: 0.0,
            range_m,
            elevation_deg: elevation_deg.max(mask_deg),
        });
    }
    for (i, s) in samples.iter_mut().enumerate() {
        s.t_s = i as f64 * sample_interval_s;
    }
    PassGeometry::new(station.id.clone(), samples, mask_deg, sample_interval_s)
}

/// Visible duration of a pass above `mask_deg`, in seconds.
pub fn visible_duration(orbit: &SatelliteOrbit, max_elevation_deg: f64, mask_deg: f64) -> f64 {
    let cross_track = orbit.central_angle_at_elevation(max_elevation_deg).max(0.0);
    let mask_angle = orbit.central_angle_at_elevation(mask_deg);
    let along_max = (mask_angle.cos() / cross_track.cos()).clamp(-1.0, 1.0).acos();
    2.0 * along_max / orbit.angular_rate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn station() -> GroundStation {
        GroundStation::new("xinglong", 40.396, 117.577, 890.0)
    }

    /// Independent oracle: explicit 3-D station and satellite position vectors.
    fn vector_look(orbit: &SatelliteOrbit, along: f64, cross: f64) -> (f64, f64) {
        let st = [EARTH_RADIUS_M, 0.0, 0.0];
        let rs = orbit.orbit_radius();
        let sat = [
            rs * cross.cos() * along.cos(),
            rs * cross.cos() * along.sin(),
            rs * cross.sin(),
        ];
        let d = [sat[0] - st[0], sat[1] - st[1], sat[2] - st[2]];
        let range = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let el = (d[0] / range).asin().to_degrees();
        (range, el)
    }

    #[test]
    fn zenith_culmination_is_orbit_altitude() {
        let orbit = SatelliteOrbit::default();
        let g = generate_pass(&orbit, &station(), 90.0, 1.0, 20.0).unwrap();
        let c = g.culmination().unwrap();
        assert!((c.range_m - 500_000.0).abs() < 1e-3);
        assert!((c.elevation_deg - 90.0).abs() < 1e-6);
    }

    #[test]
    fn six_hundred_km_culmination_is_about_55_deg() {
        let orbit = SatelliteOrbit::default();
        let el = orbit.elevation_for_range(600_000.0).unwrap();
        // 54.979 deg from the law of cosines; cross-check with the vector oracle.
        assert!((el - 54.979_345).abs() < 1e-4, "{el}");
        let cross = orbit.central_angle_at_elevation(el);
        let (range, el_v) = vector_look(&orbit, 0.0, cross);
        assert!((range - 600_000.0).abs() < 1e-3);
        assert!((el_v - el).abs() < 1e-9);
    }

    #[test]
    fn mask_for_three_hundred_second_zenith_pass() {
        // Frozen by sweeping the mask against the vector oracle with a root finder.
        let mask = 19.481_495_388_855;
        let orbit = SatelliteOrbit::default();
        let d = visible_duration(&orbit, 90.0, mask);
        assert!((d - 300.0).abs() < 1e-6, "{d}");
        let g = generate_pass(&orbit, &station(), 90.0, 1.0, mask).unwrap();
        let span = g.samples.last().unwrap().t_s - g.samples[0].t_s;
        assert!((span - 300.0).abs() <= 1.0, "{span}");
    }

    #[test]
    fn samples_match_vector_oracle_and_are_symmetric() {
        let orbit = SatelliteOrbit::default();
        let g = generate_pass(&orbit, &station(), 47.0, 2.0, 10.0).unwrap();
        let n = g.samples.len();
        assert_eq!(n % 2, 1);
        let mid = n / 2;
        let cross = orbit.central_angle_at_elevation(47.0);
        for (i, s) in g.samples.iter().enumerate() {
            let tau = (i as f64 - mid as f64) * 2.0;
            let (r, el) = vector_look(&orbit, orbit.angular_rate() * tau, cross);
            assert!((s.range_m - r).abs() < 1e-3);
            assert!((s.elevation_deg - el).abs() < 1e-6);
            let mirror = &g.samples[n - 1 - i];
            assert!((s.range_m - mirror.range_m).abs() < 1e-3);
            assert!(s.range_m >= orbit.altitude_m);
            assert!(s.elevation_deg >= 10.0);
        }
        let c = g.culmination().unwrap();
        assert!(g.samples.iter().all(|s| s.range_m >= c.range_m));
    }

    #[test]
    fn rejects_bad_requests() {
        let orbit = SatelliteOrbit::default();
        assert!(generate_pass(&orbit, &station(), 10.0, 1.0, 20.0).is_err());
        assert!(generate_pass(&orbit, &station(), 50.0, 0.0, 20.0).is_err());
        assert!(generate_pass(&orbit, &station(), 50.0, 1.0, 0.0).is_err());
        assert!(SatelliteOrbit::new(500e3, 94.0 * 60.0, 7_100.0).is_err());
        assert!(SatelliteOrbit::new(500e3, 94.0 * 60.0, 7_600.0).is_ok());
    }

    #[test]
    fn csv_export_has_header() {
        let orbit = SatelliteOrbit::default();
        let g = generate_pass(&orbit, &station(), 60.0, 10.0, 30.0).unwrap();
        let csv = g.to_csv();
        assert!(csv.starts_with("t_s,range_m,elevation_deg\n"));
        assert_eq!(csv.lines().count(), g.samples.len() + 1);
    }
}
