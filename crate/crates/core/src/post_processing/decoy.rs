use super::{ClassTally, PostError};
use crate::quantum_layer::PulseClassKind;
use serde::{Deserialize, Serialize};

/// Observed gains and error rates for the vacuum+weak decoy analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyInputs {
    pub mu: f64,
    pub nu: f64,
    pub q_mu: f64,
    pub q_nu: f64,
    pub q_0: f64,
    pub e_mu: f64,
    pub e_nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyEstimate {
    pub q_mu: f64,
    pub q_nu: f64,
    pub q_0: f64,
    pub e_mu: f64,
    pub e_nu: f64,
    pub y1_lower: f64,
    pub e1_upper: f64,
    pub q1_lower: f64,
    /// False when a bound intermediate went negative and was clamped.
    pub secure: bool,
}

/// Vacuum+weak decoy bounds:
///
/// ```text
/// Y1 ≥ µ/(µν − ν²) · (Qν e^ν − Qµ e^µ ν²/µ² − (µ² − ν²)/µ² · Y0)
/// e1 ≤ (Eν Qν e^ν − Y0/2) / (Y1 ν)
/// Q1 ≥ Y1 µ e^−µ
/// ```
/// with `Y0 = Q0`.
pub fn decoy_bounds_from_gains(inp: &DecoyInputs) -> Result<DecoyEstimate, PostError> {
    let DecoyInputs {
        mu,
        nu,
        q_mu,
        q_nu,
        q_0,
        e_mu,
        e_nu,
    } = *inp;
    if !(mu > nu && nu > 0.0) {
        return Err(PostError::DecoyInput(format!("need mu > nu > 0, got mu={mu} nu={nu}")));
    }
    for (name, v) in [("q_mu", q_mu), ("q_nu", q_nu), ("q_0", q_0), ("e_mu", e_mu), ("e_nu", e_nu)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(PostError::DecoyInput(format!("{name}={v} outside [0, 1]")));
        }
    }
    let y0 = q_0;
    let mut secure = true;
    let mut y1 = mu / (mu * nu - nu * nu)
        * (q_nu * nu.exp() - q_mu * mu.exp() * nu * nu / (mu * mu) - (mu * mu - nu * nu) / (mu * mu) * y0);
    let mut e1 = 0.5;
    if y1 <= 0.0 {
        y1 = 0.0;
        secure = false;
    } else {
        y1 = y1.min(1.0);
        let num = e_nu * q_nu * nu.exp() - 0.5 * y0;
        if num < 0.0 {
            e1 = 0.0;
            secure = false;
        } else {
            e1 = (num / (y1 * nu)).min(0.5);
        }
    }
    Ok(DecoyEstimate {
        q_mu,
        q_nu,
        q_0,
        e_mu,
        e_nu,
        y1_lower: y1,
        e1_upper: e1,
        q1_lower: y1 * mu * (-mu).exp(),
        secure,
    })
}

/// Bounds from sifting/sampling tallies. Gains count every clicked slot;
/// a class with no sampled bits is assigned the worst-case error rate 1/2.
pub fn decoy_bounds(tallies: &[ClassTally; 3], mu: f64, nu: f64) -> Result<DecoyEstimate, PostError> {
    let s = &tallies[PulseClassKind::Signal.index()];
    let d = &tallies[PulseClassKind::Decoy.index()];
    let v = &tallies[PulseClassKind::Vacuum.index()];
    if s.sent == 0 || d.sent == 0 || s.detected == 0 || d.detected == 0 {
        return Err(PostError::DecoyInput("signal and decoy tallies must be nonzero".into()));
    }
    decoy_bounds_from_gains(&DecoyInputs {
        mu,
        nu,
        q_mu: s.gain(),
        q_nu: d.gain(),
        q_0: v.gain(),
        e_mu: s.error_rate().unwrap_or(0.5),
        e_nu: d.error_rate().unwrap_or(0.5),
    })
}
