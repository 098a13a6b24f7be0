use super::receiver::detect;
use super::source::poisson;
use super::{
    Basis, ClickSet, DetectionRecord, Polarization, PulseClassKind, PulseRecord, QuantumError, ReceiverModel,
    Resolved, SourceConfig,
};
use crate::orbit_link::{channel_transmittance, GroundStation, LinkBudget, PassGeometry};
use crate::par::{map_indexed, Parallelism};
use crate::rng::{substream, Purpose, SimRng};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    /// Multinomial outcome counts per slice; only clicked pulses are logged.
    #[default]
    Aggregated,
    /// Every pulse is simulated and logged.
    PerPulse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassConfig {
    pub station: GroundStation,
    pub budget: LinkBudget,
    pub source: SourceConfig,
    pub receiver: ReceiverModel,
    pub mode: SimMode,
    pub parallelism: Parallelism,
}

/// Per-slice counters, exported as CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceTally {
    pub slice: usize,
    pub t_s: f64,
    pub transmittance: f64,
    pub pulses: u64,
    pub sent: [u64; 3],
    pub clicked: [u64; 3],
    pub double_clicks: u64,
}

/// Aligned sender and receiver logs for one pass.
///
/// In aggregated mode both logs hold only slots with at least one click;
/// `sent_per_class` still counts every emitted pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct PassLog {
    pub station_id: String,
    pub sender: Vec<PulseRecord>,
    pub receiver: Vec<DetectionRecord>,
    pub sent_per_class: [u64; 3],
    pub total_pulses: u64,
    pub slices: Vec<SliceTally>,
    pub mode: SimMode,
}

struct SliceOut {
    sender: Vec<PulseRecord>,
    receiver: Vec<DetectionRecord>,
    tally: SliceTally,
}

/// Simulates the quantum exchange over a whole pass.
///
/// Slice `k` draws from its own substream of `seed`, so the result does not
/// depend on whether slices are evaluated in parallel.
pub fn run_pass(geom: &PassGeometry, cfg: &PassConfig, seed: u64) -> Result<PassLog, QuantumError> {
    if geom.is_empty() {
        return Err(QuantumError::EmptyGeometry);
    }
    cfg.source.validate()?;
    cfg.station.validate()?;
    let pulses_per_slice = (cfg.source.pulse_rate_hz * geom.sample_interval_s).round() as u64;
    let transmittances = geom
        .samples
        .iter()
        .map(|s| channel_transmittance(s.range_m, s.elevation_deg, &cfg.budget, &cfg.station))
        .collect::<Result<Vec<_>, _>>()?;

    let slices = map_indexed(geom.samples.len(), cfg.parallelism, |k| {
        let mut rng = substream(seed, Purpose::Slice, k as u64);
        let first = k as u64 * pulses_per_slice;
        let eta = transmittances[k];
        let mut out = match cfg.mode {
            SimMode::Aggregated => aggregated_slice(pulses_per_slice, first, eta, &cfg.source, &cfg.receiver, &mut rng),
            SimMode::PerPulse => per_pulse_slice(pulses_per_slice, first, eta, &cfg.source, &cfg.receiver, &mut rng),
        };
        out.tally.slice = k;
        out.tally.t_s = geom.samples[k].t_s;
        out
    });

    let total_events: usize = slices.iter().map(|s| s.sender.len()).sum();
    let mut log = PassLog {
        station_id: geom.station_id.clone(),
        sender: Vec::with_capacity(total_events),
        receiver: Vec::with_capacity(total_events),
        sent_per_class: [0; 3],
        total_pulses: 0,
        slices: Vec::with_capacity(slices.len()),
        mode: cfg.mode,
    };
    for s in slices {
        for c in 0..3 {
            log.sent_per_class[c] += s.tally.sent[c];
        }
        log.total_pulses += s.tally.pulses;
        log.sender.extend(s.sender);
        log.receiver.extend(s.receiver);
        log.slices.push(s.tally);
    }
    Ok(log)
}

fn empty_tally(pulses: u64, eta: f64) -> SliceTally {
    SliceTally {
        slice: 0,
        t_s: 0.0,
        transmittance: eta,
        pulses,
        sent: [0; 3],
        clicked: [0; 3],
        double_clicks: 0,
    }
}

fn per_pulse_slice(
    n: u64,
    first: u64,
    eta: f64,
    source: &SourceConfig,
    rx: &ReceiverModel,
    rng: &mut SimRng,
) -> SliceOut {
    let means = [source.mean(PulseClassKind::Signal), source.mean(PulseClassKind::Decoy), 0.0];
    let mut tally = empty_tally(n, eta);
    let mut sender = Vec::with_capacity(n as usize);
    let mut receiver = Vec::with_capacity(n as usize);
    for k in 0..n {
        let class = source.sample_kind(rng);
        let polarization = Polarization::ALL[rng.random_range(0..4)];
        let pulse = PulseRecord {
            index: first + k,
            class,
            polarization,
            photon_number: poisson(means[class.index()], rng),
        };
        let det = detect(&pulse, eta, rx, rng);
        tally.sent[class.index()] += 1;
        if !det.clicks.is_empty() {
            tally.clicked[class.index()] += 1;
        }
        if det.resolved == Resolved::Ambiguous {
            tally.double_clicks += 1;
        }
        sender.push(pulse);
        receiver.push(det);
    }
    SliceOut { sender, receiver, tally }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// `1 − e^{−x}` without cancellation.
fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Photons that reached one detector, conditioned on whether it fired.
fn conditional_arrivals<R: Rng + ?Sized>(fired: bool, lambda: f64, p_dark: f64, rng: &mut R) -> u32 {
    if !fired || lambda <= 0.0 {
        return 0;
    }
    let p_photon = one_minus_exp_neg(lambda);
    let p_fire = 1.0 - (-lambda).exp() * (1.0 - p_dark);
    if rng.random::<f64>() >= p_photon / p_fire {
        return 0;
    }
    // Zero-truncated Poisson by inversion.
    let u: f64 = rng.random::<f64>() * p_photon;
    let mut k = 1u32;
    let mut term = (-lambda).exp() * lambda;
    let mut acc = term;
    while acc < u && k < 1000 {
        k += 1;
        term *= lambda / k as f64;
        acc += term;
    }
    k
}

#[derive(Clone, Copy)]
struct Outcome {
    class: PulseClassKind,
    matched: bool,
    fire_a: bool,
    fire_b: bool,
}

/// Exact-in-distribution slice simulation from outcome counts.
///
/// Per pulse the outcome is (class, basis match, which of the two arm
/// detectors fire). For a matched basis detector A is the correct one; for a
/// mismatched basis A and B are the bit-0 and bit-1 detectors. Photon arrivals
/// at A and B are independent Poisson variables by thinning, so each detector
/// fires independently with probability `1 − e^{−λ}(1 − p_dc)`.
fn aggregated_slice(
    n: u64,
    first: u64,
    eta: f64,
    source: &SourceConfig,
    rx: &ReceiverModel,
    rng: &mut SimRng,
) -> SliceOut {
    let probs = source.probabilities();
    let means = [source.mean(PulseClassKind::Signal), source.mean(PulseClassKind::Decoy), 0.0];
    let p_dc = rx.dark_click_prob;
    let e = rx.polarization_error;
    let mut tally = empty_tally(n, eta);

    let mut remaining_n = n;
    let mut remaining_p = 1.0;
    let mut outcomes: Vec<Outcome> = Vec::new();
    let mut lambdas = [[(0.0, 0.0); 2]; 3];
    for kind in PulseClassKind::ALL {
        let c = kind.index();
        let count = if c == 2 || remaining_p <= probs[c] {
            remaining_n
        } else {
            binomial(remaining_n, probs[c] / remaining_p, rng)
        };
        remaining_n -= count;
        remaining_p -= probs[c];
        tally.sent[c] = count;

        let m = means[c] * eta;
        let n_match = binomial(count, 0.5, rng);
        for (matched, group) in [(true, n_match), (false, count - n_match)] {
            let (la, lb) = if matched { (m * (1.0 - e), m * e) } else { (m / 2.0, m / 2.0) };
            lambdas[c][matched as usize] = (la, lb);
            let fa = 1.0 - (-la).exp() * (1.0 - p_dc);
            let fb = 1.0 - (-lb).exp() * (1.0 - p_dc);
            let cats = [(true, false, fa * (1.0 - fb)), (false, true, (1.0 - fa) * fb), (true, true, fa * fb)];
            let mut left = group;
            let mut mass = 1.0;
            for (fire_a, fire_b, p) in cats {
                let k = if mass <= 0.0 { 0 } else { binomial(left, (p / mass).min(1.0), rng) };
                left -= k;
                mass -= p;
                tally.clicked[c] += k;
                if fire_a && fire_b {
                    tally.double_clicks += k;
                }
                outcomes.extend(std::iter::repeat_n(
                    Outcome {
                        class: kind,
                        matched,
                        fire_a,
                        fire_b,
                    },
                    k as usize,
                ));
            }
        }
    }

    let mut slots = index::sample(rng, n as usize, outcomes.len()).into_vec();
    slots.sort_unstable();
    outcomes.shuffle(rng);

    let mut sender = Vec::with_capacity(outcomes.len());
    let mut receiver = Vec::with_capacity(outcomes.len());
    for (slot, o) in slots.into_iter().zip(outcomes) {
        let c = o.class.index();
        let polarization = Polarization::ALL[rng.random_range(0..4)];
        let basis = if o.matched { polarization.basis() } else { polarization.basis().other() };
        let (det_a, det_b) = if o.matched {
            (
                Polarization::from_basis_bit(basis, polarization.bit()),
                Polarization::from_basis_bit(basis, !polarization.bit()),
            )
        } else {
            (Polarization::from_basis_bit(basis, false), Polarization::from_basis_bit(basis, true))
        };
        let mut clicks = ClickSet::EMPTY;
        if o.fire_a {
            clicks.insert(det_a);
        }
        if o.fire_b {
            clicks.insert(det_b);
        }
        let (la, lb) = lambdas[c][o.matched as usize];
        let photons = conditional_arrivals(o.fire_a, la, p_dc, rng)
            + conditional_arrivals(o.fire_b, lb, p_dc, rng)
            + poisson(means[c] * (1.0 - eta), rng);
        let index = first + slot as u64;
        sender.push(PulseRecord {
            index,
            class: o.class,
            polarization,
            photon_number: photons,
        });
        receiver.push(DetectionRecord::new(index, clicks, basis));
    }
    SliceOut { sender, receiver, tally }
}

impl PassLog {
    /// Number of slots with a resolved, basis-matched single click per class.
    pub fn sifted_counts(&self) -> [u64; 3] {
        let mut out = [0; 3];
        for (s, r) in self.sender.iter().zip(&self.receiver) {
            if matches!(r.resolved, Resolved::Bit(_)) && r.measured_basis == s.polarization.basis() {
                out[s.class.index()] += 1;
            }
        }
        out
    }

    pub fn measured_basis_counts(&self) -> [u64; 2] {
        let mut out = [0; 2];
        for r in &self.receiver {
            out[(r.measured_basis == Basis::Diagonal) as usize] += 1;
        }
        out
    }
}
