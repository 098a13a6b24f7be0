use super::PostError;
use crate::bits::BitString;
use crate::quantum_layer::{DetectionRecord, PulseClassKind, PulseRecord, Resolved};
use serde::{Deserialize, Serialize};

/// Counters per intensity class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassTally {
    pub sent: u64,
    /// Slots with any click, any basis.
    pub detected: u64,
    /// Basis-matched single clicks.
    pub detected_sifted: u64,
    /// Bits disclosed for error estimation.
    pub sampled: u64,
    pub errors_sampled: u64,
}

impl ClassTally {
    pub fn gain(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.detected as f64 / self.sent as f64
        }
    }

    /// Sampled error rate, or `None` when nothing of this class was sampled.
    pub fn error_rate(&self) -> Option<f64> {
        (self.sampled > 0).then(|| self.errors_sampled as f64 / self.sampled as f64)
    }
}

/// Basis-matched raw key on both sides, with the class of every bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SiftedKey {
    pub pass_id: String,
    pub bits_alice: BitString,
    pub bits_bob: BitString,
    pub classes: Vec<PulseClassKind>,
    /// Indexed by [`PulseClassKind::index`].
    pub class_tallies: [ClassTally; 3],
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bits_alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits_alice.is_empty()
    }

    pub fn tally(&self, kind: PulseClassKind) -> &ClassTally {
        &self.class_tallies[kind.index()]
    }

    pub fn mismatches(&self) -> usize {
        self.bits_alice.hamming(&self.bits_bob)
    }
}

/// Keeps basis-matched single clicks; double clicks are dropped and vacuum
/// slots are tallied but never enter the key.
///
/// `sent_per_class` supplies emission counts, which sparse logs do not carry.
pub fn sift(
    pass_id: &str,
    sender: &[PulseRecord],
    receiver: &[DetectionRecord],
    sent_per_class: [u64; 3],
) -> Result<SiftedKey, PostError> {
    if sender.len() != receiver.len() {
        return Err(PostError::Misaligned(format!(
            "{} sender records vs {} receiver records",
            sender.len(),
            receiver.len()
        )));
    }
    let mut tallies = [ClassTally::default(); 3];
    for (c, t) in tallies.iter_mut().enumerate() {
        t.sent = sent_per_class[c];
    }
    let mut bits_alice = BitString::with_capacity(sender.len() / 2);
    let mut bits_bob = BitString::with_capacity(sender.len() / 2);
    let mut classes = Vec::with_capacity(sender.len() / 2);
    for (s, r) in sender.iter().zip(receiver) {
        if s.index != r.index {
            return Err(PostError::Misaligned(format!("index {} paired with {}", s.index, r.index)));
        }
        let tally = &mut tallies[s.class.index()];
        if !r.clicks.is_empty() {
            tally.detected += 1;
        }
        let Resolved::Bit(bob_bit) = r.resolved else {
            continue;
        };
        if r.measured_basis != s.polarization.basis() {
            continue;
        }
        tally.detected_sifted += 1;
        if s.class == PulseClassKind::Vacuum {
            continue;
        }
        bits_alice.push(s.polarization.bit());
        bits_bob.push(bob_bit);
        classes.push(s.class);
    }
    Ok(SiftedKey {
        pass_id: pass_id.to_string(),
        bits_alice,
        bits_bob,
        classes,
        class_tallies: tallies,
    })
}
