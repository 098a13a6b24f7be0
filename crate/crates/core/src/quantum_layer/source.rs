use super::{Polarization, PulseRecord, QuantumError};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseClassKind {
    Signal,
    Decoy,
    Vacuum,
}

impl PulseClassKind {
    pub const ALL: [PulseClassKind; 3] = [PulseClassKind::Signal, PulseClassKind::Decoy, PulseClassKind::Vacuum];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseClass {
    pub kind: PulseClassKind,
    pub mean_photon_number: f64,
    pub emission_probability: f64,
}

/// The transmitter: intensity classes and repetition rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default = "default_rate")]
    pub pulse_rate_hz: f64,
    pub classes: Vec<PulseClass>,
}

fn default_rate() -> f64 {
    100e6
}

impl Default for SourceConfig {
    /// µ = 0.8 / 0.1 / 0 emitted with probability 0.5 / 0.25 / 0.25 at 100 MHz.
    fn default() -> Self {
        Self {
            pulse_rate_hz: default_rate(),
            classes: vec![
                PulseClass {
                    kind: PulseClassKind::Signal,
                    mean_photon_number: 0.8,
                    emission_probability: 0.5,
                },
                PulseClass {
                    kind: PulseClassKind::Decoy,
                    mean_photon_number: 0.1,
                    emission_probability: 0.25,
                },
                PulseClass {
                    kind: PulseClassKind::Vacuum,
                    mean_photon_number: 0.0,
                    emission_probability: 0.25,
                },
            ],
        }
    }
}

impl SourceConfig {
    pub fn single_class(kind: PulseClassKind, mean_photon_number: f64) -> Self {
        Self {
            pulse_rate_hz: default_rate(),
            classes: vec![PulseClass {
                kind,
                mean_photon_number,
                emission_probability: 1.0,
            }],
        }
    }

    pub fn class(&self, kind: PulseClassKind) -> Option<&PulseClass> {
        self.classes.iter().find(|c| c.kind == kind)
    }

    pub fn mean(&self, kind: PulseClassKind) -> f64 {
        self.class(kind).map_or(0.0, |c| c.mean_photon_number)
    }

    /// Per-kind emission probabilities in `Signal, Decoy, Vacuum` order.
    pub fn probabilities(&self) -> [f64; 3] {
        let mut p = [0.0; 3];
        for c in &self.classes {
            p[c.kind.index()] += c.emission_probability;
        }
        p
    }

    /// Checks the probability vector and per-class sanity.
    pub fn validate(&self) -> Result<(), QuantumError> {
        if self.classes.is_empty() {
            return Err(QuantumError::InvalidSource("no pulse classes".into()));
        }
        if !(self.pulse_rate_hz > 0.0) {
            return Err(QuantumError::InvalidSource("pulse rate must be positive".into()));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].iter().any(|o| o.kind == c.kind) {
                return Err(QuantumError::InvalidSource(format!("duplicate class {:?}", c.kind)));
            }
            if !(0.0..=1.0).contains(&c.emission_probability) {
                return Err(QuantumError::InvalidSource(format!(
                    "{:?} emission probability {} outside [0, 1]",
                    c.kind, c.emission_probability
                )));
            }
            if !(c.mean_photon_number >= 0.0 && c.mean_photon_number.is_finite()) {
                return Err(QuantumError::InvalidSource(format!("{:?} mean photon number must be >= 0", c.kind)));
            }
            if c.kind == PulseClassKind::Vacuum && c.mean_photon_number != 0.0 {
                return Err(QuantumError::InvalidSource("vacuum class must have zero mean".into()));
            }
        }
        let total: f64 = self.classes.iter().map(|c| c.emission_probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(QuantumError::InvalidSource(format!(
                "emission probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Additional decoy-analysis requirement: signal mean > decoy mean > 0.
    pub fn validate_decoy(&self) -> Result<(), QuantumError> {
        self.validate()?;
        let (mu, nu) = (self.mean(PulseClassKind::Signal), self.mean(PulseClassKind::Decoy));
        if self.class(PulseClassKind::Signal).is_none() || self.class(PulseClassKind::Decoy).is_none() {
            return Err(QuantumError::InvalidSource("decoy analysis needs signal and decoy classes".into()));
        }
        if !(mu > nu && nu > 0.0) {
            return Err(QuantumError::InvalidSource(format!(
                "need signal mean > decoy mean > 0, got {mu} and {nu}"
            )));
        }
        Ok(())
    }

    pub(crate) fn sample_kind<R: Rng + ?Sized>(&self, rng: &mut R) -> PulseClassKind {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for c in &self.classes {
            acc += c.emission_probability;
            if u < acc {
                return c.kind;
            }
        }
        self.classes.last().map(|c| c.kind).unwrap_or(PulseClassKind::Vacuum)
    }
}

pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u32).unwrap_or(0)
}

/// Draws `n` pulses: class by emission probability, uniform polarization,
/// Poisson photon number. Indices run from `first_index`.
pub fn prepare_pulses<R: Rng + ?Sized>(
    n: usize,
    first_index: u64,
    source: &SourceConfig,
    rng: &mut R,
) -> Result<Vec<PulseRecord>, QuantumError> {
    if n == 0 {
        return Err(QuantumError::InvalidSource("pulse count must be at least 1".into()));
    }
    source.validate()?;
    let means = [
        source.mean(PulseClassKind::Signal),
        source.mean(PulseClassKind::Decoy),
        0.0,
    ];
    Ok((0..n as u64)
        .map(|k| {
            let class = source.sample_kind(rng);
            let polarization = Polarization::ALL[rng.random_range(0..4)];
            PulseRecord {
                index: first_index + k,
                class,
                polarization,
                photon_number: poisson(means[class.index()], rng),
            }
        })
        .collect())
}
