use super::AppError;
use crate::relay_keystore::{KeyError, KeyPool};
use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes128;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub trait SymmetricCipher {
    fn name(&self) -> &'static str;
    fn encrypt_block(&self, key: &[u8; 16], block: &mut [u8; 16]);
}

/// FIPS-197 AES-128.
#[derive(Debug, Clone, Copy, Default)]
pub struct Aes128Cipher;

impl SymmetricCipher for Aes128Cipher {
    fn name(&self) -> &'static str {
        "aes-128"
    }

    fn encrypt_block(&self, key: &[u8; 16], block: &mut [u8; 16]) {
        let cipher = Aes128::new(key.into());
        cipher.encrypt_block(block.into());
    }
}

/// Leaves data untouched; keeps key accounting testable without a cipher.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullCipher;

impl SymmetricCipher for NullCipher {
    fn name(&self) -> &'static str {
        "null"
    }

    fn encrypt_block(&self, _key: &[u8; 16], _block: &mut [u8; 16]) {}
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AesSession {
    pub session_id: String,
    pub refresh_period_s: f64,
    pub key_bits_per_refresh: u64,
    pub duration_s: f64,
    /// Simulated traffic volume; never touches the key budget.
    pub payload_bytes: u64,
}

impl AesSession {
    pub fn new(session_id: &str, duration_s: f64, payload_bytes: u64) -> Self {
        Self {
            session_id: session_id.to_string(),
            refresh_period_s: 1.0,
            key_bits_per_refresh: 128,
            duration_s,
            payload_bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub cipher: String,
    pub ticks_planned: u64,
    pub refreshes: u64,
    pub bits_consumed: u64,
    /// Session-relative time of the first refresh that found the pool short.
    pub shortfall_at: Option<f64>,
    pub payload_bytes: u64,
    /// Digest over one keystream block per refresh, for reproducibility checks.
    pub keystream_digest: String,
}

impl SessionReport {
    pub fn bytes_consumed(&self) -> u64 {
        self.bits_consumed / 8
    }

    pub fn completed(&self) -> bool {
        self.shortfall_at.is_none()
    }
}

/// Refreshes at `t = 0, period, 2·period, …` while `t < duration`, with at
/// least the bootstrap refresh: `max(1, ⌈duration / period⌉)`.
pub fn session_ticks(duration_s: f64, period_s: f64) -> u64 {
    ((duration_s / period_s).ceil() as u64).max(1)
}

/// Draws one fresh key per refresh tick from `pool` and encrypts a
/// counter block under it. Stops at the first tick the pool cannot cover.
pub fn aes_session_run(
    session: &AesSession,
    pool: &mut KeyPool,
    cipher: &dyn SymmetricCipher,
    start_time: f64,
) -> Result<SessionReport, AppError> {
    if !(session.refresh_period_s > 0.0) || !(session.duration_s >= 0.0) {
        return Err(AppError::InvalidSession("period must be > 0 and duration >= 0".into()));
    }
    if session.key_bits_per_refresh != 128 {
        return Err(AppError::InvalidSession("AES-128 needs 128-bit keys".into()));
    }
    let ticks = session_ticks(session.duration_s, session.refresh_period_s);
    let mut report = SessionReport {
        session_id: session.session_id.clone(),
        cipher: cipher.name().to_string(),
        ticks_planned: ticks,
        refreshes: 0,
        bits_consumed: 0,
        shortfall_at: None,
        payload_bytes: session.payload_bytes,
        keystream_digest: String::new(),
    };
    let mut digest = Sha256::new();
    for k in 0..ticks {
        let t = k as f64 * session.refresh_period_s;
        let key_bits = match pool.consume(128, start_time + t, "aes") {
            Ok((_, bits)) => bits,
            Err(KeyError::InsufficientKey { .. }) => {
                report.shortfall_at = Some(t);
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let key: [u8; 16] = key_bits.to_bytes().try_into().expect("128 bits");
        let mut block = [0u8; 16];
        block[8..].copy_from_slice(&k.to_be_bytes());
        cipher.encrypt_block(&key, &mut block);
        digest.update(block);
        report.refreshes += 1;
        report.bits_consumed += 128;
    }
    report.keystream_digest = digest
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(report)
}
