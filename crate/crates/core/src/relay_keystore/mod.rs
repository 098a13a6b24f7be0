//! Key pools per node pair and trusted-relay XOR key establishment.
//!
//! Every node keeps its own view of each pool it shares with a peer, so a
//! pair `(a, b)` has two views holding identical bits with independent
//! consumption offsets. Offsets only move forward; a read below the offset
//! is refused and fully consumed blocks are erased.

mod format;
mod pool;
mod store;

pub use format::{decode_key_block, encode_key_block, KEY_BLOCK_MAGIC, KEY_BLOCK_VERSION};
pub use pool::{ConsumeEvent, KeyBlock, KeyPool};
pub use store::{pool_label, xor_decode, AuditRecord, Decoder, E2eKey, KeyStore, RelayMessage, AUDIT_CSV_HEADER};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KeyError {
    #[error("key block is empty")]
    EmptyKey,
    #[error("duplicate block id {0}")]
    DuplicateBlock(String),
    #[error("checksum mismatch in block {0}")]
    ChecksumMismatch(String),
    #[error("no pool held by {holder} for peer {peer}")]
    UnknownPool { holder: String, peer: String },
    #[error("insufficient key in pool {pool}: need {needed} bits, have {available}")]
    InsufficientKey { pool: String, needed: u64, available: u64 },
    #[error("refused reuse in pool {pool}: offset {offset} is below consumed offset {consumed}")]
    RefusedReuse { pool: String, offset: u64, consumed: u64 },
    #[error("invalid route: {0}")]
    InvalidRoute(String),
    #[error("malformed key block file: {0}")]
    Format(String),
}
