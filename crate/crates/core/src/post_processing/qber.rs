use super::{PostError, SiftedKey};
use crate::bits::BitString;
use rand::seq::index;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct QberEstimate {
    pub qber: f64,
    pub sample_size: usize,
    pub errors: usize,
    /// Positions in the input sifted key that were disclosed, ascending.
    pub disclosed_positions: Vec<usize>,
}

/// Discloses a uniform random subset of `round(fraction · n)` positions
/// (at least one), measures the mismatch rate there and removes them from
/// the key. Per-class sample tallies are recorded in the returned key.
pub fn estimate_qber<R: Rng + ?Sized>(
    sifted: &SiftedKey,
    sample_fraction: f64,
    rng: &mut R,
) -> Result<(QberEstimate, SiftedKey), PostError> {
    if !(sample_fraction > 0.0 && sample_fraction < 1.0) {
        return Err(PostError::InvalidFraction(sample_fraction));
    }
    let n = sifted.len();
    let sample = ((sample_fraction * n as f64).round() as usize).max(1);
    if sample > n {
        return Err(PostError::SampleTooLarge { sample, key: n });
    }
    let mut positions = index::sample(rng, n, sample).into_vec();
    positions.sort_unstable();

    let mut tallies = sifted.class_tallies;
    let mut disclosed = vec![false; n];
    let mut errors = 0;
    for &p in &positions {
        disclosed[p] = true;
        let t = &mut tallies[sifted.classes[p].index()];
        t.sampled += 1;
        if sifted.bits_alice.get(p) != sifted.bits_bob.get(p) {
            t.errors_sampled += 1;
            errors += 1;
        }
    }

    let keep = n - sample;
    let mut bits_alice = BitString::with_capacity(keep);
    let mut bits_bob = BitString::with_capacity(keep);
    let mut classes = Vec::with_capacity(keep);
    for i in (0..n).filter(|&i| !disclosed[i]) {
        bits_alice.push(sifted.bits_alice.get(i));
        bits_bob.push(sifted.bits_bob.get(i));
        classes.push(sifted.classes[i]);
    }
    let remaining = SiftedKey {
        pass_id: sifted.pass_id.clone(),
        bits_alice,
        bits_bob,
        classes,
        class_tallies: tallies,
    };
    let est = QberEstimate {
        qber: errors as f64 / sample as f64,
        sample_size: sample,
        errors,
        disclosed_positions: positions,
    };
    Ok((est, remaining))
}
