use super::{Basis, ClickSet, DetectionRecord, Polarization, PulseRecord, QuantumError};
use crate::orbit_link::{GroundStation, LinkBudget};
use rand::Rng;

/// Per-slot behaviour of the four-detector polarization receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverModel {
    /// Probability that a single detector fires without a photon in one gate.
    pub dark_click_prob: f64,
    /// Probability that a photon measured in its preparation basis lands on
    /// the wrong detector.
    pub polarization_error: f64,
}

impl ReceiverModel {
    pub fn new(dark_click_prob: f64, polarization_error: f64) -> Result<Self, QuantumError> {
        if !(0.0..=1.0).contains(&dark_click_prob) {
            return Err(QuantumError::InvalidReceiver(format!(
                "dark click probability {dark_click_prob} outside [0, 1]"
            )));
        }
        if !(0.0..=0.5).contains(&polarization_error) {
            return Err(QuantumError::InvalidReceiver(format!(
                "polarization error {polarization_error} outside [0, 0.5]"
            )));
        }
        Ok(Self {
            dark_click_prob,
            polarization_error,
        })
    }

    /// `p_dc = (dark_count_rate + background_click_rate) · gate_window`.
    pub fn from_station(
        station: &GroundStation,
        budget: &LinkBudget,
        gate_window_s: f64,
        polarization_error: f64,
    ) -> Result<Self, QuantumError> {
        if !(gate_window_s >= 0.0) {
            return Err(QuantumError::InvalidReceiver("gate window must be >= 0".into()));
        }
        let p = (station.dark_count_rate + budget.background_click_rate) * gate_window_s;
        Self::new(p, polarization_error)
    }

    pub fn ideal() -> Self {
        Self {
            dark_click_prob: 0.0,
            polarization_error: 0.0,
        }
    }
}

/// Simulates one pulse through the channel and receiver.
///
/// Each photon survives independently with probability `transmittance`.
/// Survivors in the preparation basis hit the correct detector with
/// probability `1 − e_pol`; in the conjugate basis they split 50/50. Both
/// detectors of the measured arm may also fire from dark/background counts.
pub fn detect<R: Rng + ?Sized>(
    pulse: &PulseRecord,
    transmittance: f64,
    receiver: &ReceiverModel,
    rng: &mut R,
) -> DetectionRecord {
    debug_assert!((0.0..=1.0).contains(&transmittance));
    let eta = transmittance.clamp(0.0, 1.0);
    let basis = if rng.random::<bool>() {
        Basis::Diagonal
    } else {
        Basis::Rectilinear
    };
    let matched = basis == pulse.polarization.basis();
    let mut arrivals = [0u32; 2];
    for _ in 0..pulse.photon_number {
        if rng.random::<f64>() >= eta {
            continue;
        }
        let bit = if matched {
            let flip = rng.random::<f64>() < receiver.polarization_error;
            pulse.polarization.bit() ^ flip
        } else {
            rng.random::<bool>()
        };
        arrivals[bit as usize] += 1;
    }
    let mut clicks = ClickSet::EMPTY;
    for bit in [false, true] {
        let dark = rng.random::<f64>() < receiver.dark_click_prob;
        if arrivals[bit as usize] > 0 || dark {
            clicks.insert(Polarization::from_basis_bit(basis, bit));
        }
    }
    DetectionRecord::new(pulse.index, clicks, basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_layer::{PulseClassKind, Resolved};
    use crate::rng::{substream, Purpose};

    fn pulse(pol: Polarization, n: u32) -> PulseRecord {
        PulseRecord {
            index: 0,
            class: PulseClassKind::Signal,
            polarization: pol,
            photon_number: n,
        }
    }

    #[test]
    fn dead_channel_never_clicks() {
        let mut rng = substream(1, Purpose::Synthetic, 0);
        for _ in 0..1000 {
            let d = detect(&pulse(Polarization::V, 3), 0.0, &ReceiverModel::ideal(), &mut rng);
            assert!(d.clicks.is_empty());
            assert_eq!(d.resolved, Resolved::None);
        }
    }

    #[test]
    fn ideal_matching_basis_recovers_bit() {
        let mut rng = substream(2, Purpose::Synthetic, 0);
        let mut matched = 0;
        for i in 0..4000 {
            let pol = Polarization::ALL[i % 4];
            let d = detect(&pulse(pol, 1), 1.0, &ReceiverModel::ideal(), &mut rng);
            if d.measured_basis == pol.basis() {
                matched += 1;
                assert_eq!(d.resolved, Resolved::Bit(pol.bit()));
            }
        }
        assert!(matched > 1800 && matched < 2200);
    }

    /// Brute-force enumeration over photon survival patterns: the probability
    /// that the arm registers at least one photon click is 1 − (1−η)^n.
    #[test]
    fn click_probability_matches_enumeration() {
        for n in 0..=4u32 {
            for eta in [0.1f64, 0.5, 1.0] {
                let mut p_any = 0.0;
                for mask in 0..(1u32 << n) {
                    let k = mask.count_ones();
                    let p = eta.powi(k as i32) * (1.0 - eta).powi((n - k) as i32);
                    if k > 0 {
                        p_any += p;
                    }
                }
                let closed = 1.0 - (1.0 - eta).powi(n as i32);
                assert!((p_any - closed).abs() < 1e-12);

                let trials = 40_000;
                let mut rng = substream(n as u64, Purpose::Synthetic, (eta * 10.0) as u64);
                let hits = (0..trials)
                    .filter(|_| !detect(&pulse(Polarization::H, n), eta, &ReceiverModel::ideal(), &mut rng).clicks.is_empty())
                    .count();
                let freq = hits as f64 / trials as f64;
                let sigma = (closed * (1.0 - closed) / trials as f64).sqrt().max(1e-9);
                assert!((freq - closed).abs() <= 4.0 * sigma + 1e-12, "n={n} eta={eta} {freq} vs {closed}");
            }
        }
    }

    #[test]
    fn receiver_parameters_are_validated() {
        assert!(ReceiverModel::new(-0.1, 0.0).is_err());
        assert!(ReceiverModel::new(0.0, 0.6).is_err());
        let s = GroundStation::new("s", 0.0, 0.0, 0.0);
        let m = ReceiverModel::from_station(&s, &LinkBudget::default(), 1e-9, 0.01).unwrap();
        assert!((m.dark_click_prob - 1e-7).abs() < 1e-15);
    }
}
