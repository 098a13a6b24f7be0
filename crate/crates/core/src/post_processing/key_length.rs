use super::DecoyEstimate;

pub const BB84_QBER_THRESHOLD: f64 = 0.11;

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// `ℓ = max(0, ⌊n · (Q1/Qµ) · (1 − H2(e1)) − leak − n · margin⌋)`.
///
/// `leak` is every bit disclosed about the `n` remaining key bits.
/// Returns 0 for insecure decoy estimates and at or above the 11% threshold.
pub fn final_key_length(n: u64, qber: f64, decoy: &DecoyEstimate, leak: u64, margin: f64) -> u64 {
    if !decoy.secure || qber >= BB84_QBER_THRESHOLD || decoy.q_mu <= 0.0 || n == 0 {
        return 0;
    }
    let ratio = (decoy.q1_lower / decoy.q_mu).min(1.0);
    let e1 = decoy.e1_upper.clamp(0.0, 0.5);
    let raw = n as f64 * ratio * (1.0 - binary_entropy(e1)) - leak as f64 - n as f64 * margin;
    if raw <= 0.0 {
        0
    } else {
        (raw.floor() as u64).min(n - 1)
    }
}
