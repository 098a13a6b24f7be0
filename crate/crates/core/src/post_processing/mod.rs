//! Classical post-processing from aligned pulse logs to identical secret keys.
//!
//! Stages: sifting, QBER sampling, Cascade reconciliation with a GF(2^64)
//! polynomial verification hash, vacuum+weak decoy bounds, the asymptotic
//! key-length formula and Toeplitz privacy amplification.

mod cascade;
mod decoy;
pub mod gf2;
mod key_length;
mod pipeline;
mod qber;
mod sift;
mod toeplitz;
mod verify;

pub use cascade::{reconcile, CascadeParams, Reconciled};
pub use decoy::{decoy_bounds, decoy_bounds_from_gains, DecoyEstimate, DecoyInputs};
pub use key_length::{binary_entropy, final_key_length, BB84_QBER_THRESHOLD};
pub use pipeline::{process_pass, ClassicalTraffic, FinalKeyResult, PassOutcome, PassReportRow, PostParams, PASS_CSV_HEADER};
pub use qber::{estimate_qber, QberEstimate};
pub use sift::{sift, ClassTally, SiftedKey};
pub use toeplitz::{privacy_amplify, toeplitz_seed_len};
pub use verify::{poly_hash, VERIFY_HASH_BITS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PostError {
    #[error("sender and receiver logs are misaligned: {0}")]
    Misaligned(String),
    #[error("sample fraction {0} must lie in (0, 1)")]
    InvalidFraction(f64),
    #[error("sample of {sample} bits exceeds key of {key} bits")]
    SampleTooLarge { sample: usize, key: usize },
    #[error("qber estimate {0} outside (0, 0.11]")]
    InvalidQber(f64),
    #[error("bit strings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("reconciliation failed: verification hash mismatch")]
    ReconciliationFailed,
    #[error("decoy analysis input invalid: {0}")]
    DecoyInput(String),
    #[error("output length {out} must be below input length {input}")]
    OutputTooLong { out: usize, input: usize },
    #[error("toeplitz seed has {got} bits, expected {expected}")]
    SeedLength { got: usize, expected: usize },
}
