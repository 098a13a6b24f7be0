//! Cascade error reconciliation.
//!
//! Round `r` shuffles the key with a public permutation (identity in round
//! 0), cuts it into blocks of `k1 · 2^r` bits and compares block parities.
//! Every odd block is bisected to one error, which is flipped; the flip
//! toggles one block in every earlier round, and any of those that turn odd
//! are bisected in turn until all known parities agree.

use super::verify::{poly_hash, VERIFY_HASH_BITS};
use super::PostError;
use crate::bits::BitString;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeParams {
    pub rounds: usize,
    /// Top-level block size is `⌈top_block_factor / qber⌉`.
    pub top_block_factor: f64,
}

impl Default for CascadeParams {
    fn default() -> Self {
        Self {
            rounds: 4,
            top_block_factor: 0.73,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconciled {
    pub corrected: BitString,
    /// Parity bits disclosed by Alice, top-level and bisection.
    pub leak_ec: u64,
    /// Of `leak_ec`, the top-level block parities.
    pub top_level_parities: u64,
    pub corrections: usize,
    /// Bits of the verification hash sent after Cascade.
    pub verify_bits: u64,
}

struct Round {
    block: usize,
    /// Original index of each permuted position.
    perm: Vec<u32>,
    /// Permuted position of each original index.
    inv: Vec<u32>,
    alice: BitString,
    bob: BitString,
    alice_par: Vec<bool>,
    bob_par: Vec<bool>,
}

impl Round {
    fn block_range(&self, b: usize) -> (usize, usize) {
        let lo = b * self.block;
        (lo, (lo + self.block).min(self.alice.len()))
    }
}

struct State {
    rounds: Vec<Round>,
    leak: u64,
    corrections: usize,
}

impl State {
    /// Bisects an odd block of round `r` and flips the located error.
    fn fix(&mut self, r: usize, b: usize, pending: &mut BTreeSet<(usize, usize)>) {
        let round = &self.rounds[r];
        let (mut lo, mut hi) = round.block_range(b);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            self.leak += 1;
            if round.alice.parity_range(lo, mid) != round.bob.parity_range(lo, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let j = round.perm[lo] as usize;
        self.corrections += 1;
        for (rr, round) in self.rounds.iter_mut().enumerate() {
            let pos = round.inv[j] as usize;
            round.bob.flip(pos);
            let blk = pos / round.block;
            round.bob_par[blk] = !round.bob_par[blk];
            if rr != r && round.alice_par[blk] != round.bob_par[blk] {
                pending.insert((rr, blk));
            }
        }
    }

    fn drain(&mut self, pending: &mut BTreeSet<(usize, usize)>) {
        while let Some((r, b)) = pending.pop_first() {
            if self.rounds[r].alice_par[b] != self.rounds[r].bob_par[b] {
                self.fix(r, b, pending);
            }
        }
    }
}

fn block_parities(bits: &BitString, block: usize) -> Vec<bool> {
    (0..bits.len())
        .step_by(block)
        .map(|lo| bits.parity_range(lo, (lo + block).min(bits.len())))
        .collect()
}

fn permute(bits: &BitString, perm: &[u32]) -> BitString {
    perm.iter().map(|&i| bits.get(i as usize)).collect()
}

/// Runs Cascade and then compares a 64-bit polynomial hash of both keys.
///
/// `rng` is the public randomness shared by both parties: round permutations
/// and the hash evaluation point.
pub fn reconcile<R: Rng + ?Sized>(
    alice: &BitString,
    bob: &BitString,
    qber_estimate: f64,
    params: &CascadeParams,
    rng: &mut R,
) -> Result<Reconciled, PostError> {
    if alice.len() != bob.len() {
        return Err(PostError::LengthMismatch(alice.len(), bob.len()));
    }
    if !(qber_estimate > 0.0 && qber_estimate <= 0.11) {
        return Err(PostError::InvalidQber(qber_estimate));
    }
    let n = alice.len();
    let mut state = State {
        rounds: Vec::with_capacity(params.rounds),
        leak: 0,
        corrections: 0,
    };
    let mut top_level = 0u64;
    if n > 0 {
        let k1 = ((params.top_block_factor / qber_estimate).ceil() as usize).max(1);
        let identity: Vec<u32> = (0..n as u32).collect();
        let mut pending = BTreeSet::new();
        for r in 0..params.rounds {
            let block = k1.saturating_mul(1 << r.min(40)).min(n);
            let (perm, a, b) = if r == 0 {
                (identity.clone(), alice.clone(), bob.clone())
            } else {
                let mut perm = identity.clone();
                perm.shuffle(rng);
                // Bob's permuted copy is built from his current, partly corrected string.
                let a = permute(alice, &perm);
                let b = permute(&state.rounds[0].bob, &perm);
                (perm, a, b)
            };
            let mut inv = vec![0u32; n];
            for (p, &i) in perm.iter().enumerate() {
                inv[i as usize] = p as u32;
            }
            let alice_par = block_parities(&a, block);
            let bob_par = block_parities(&b, block);
            top_level += alice_par.len() as u64;
            state.leak += alice_par.len() as u64;
            let blocks = alice_par.len();
            state.rounds.push(Round {
                block,
                perm,
                inv,
                alice: a,
                bob: b,
                alice_par,
                bob_par,
            });
            for blk in 0..blocks {
                let round = &state.rounds[r];
                if round.alice_par[blk] != round.bob_par[blk] {
                    state.fix(r, blk, &mut pending);
                    state.drain(&mut pending);
                }
            }
        }
    }
    // round 0 is unpermuted, so its Bob copy is the corrected key
    let corrected = state.rounds.first().map_or_else(|| bob.clone(), |r| r.bob.clone());
    let point: u64 = rng.random();
    if poly_hash(alice, point) != poly_hash(&corrected, point) {
        return Err(PostError::ReconciliationFailed);
    }
    Ok(Reconciled {
        corrected,
        leak_ec: state.leak,
        top_level_parities: top_level,
        corrections: state.corrections,
        verify_bits: VERIFY_HASH_BITS,
    })
}
