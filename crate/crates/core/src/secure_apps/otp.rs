//! Envelope file, integers big-endian:
//!
//! ```text
//! "OTPX" | version u16 | len u16, node_a | len u16, node_b | offset u64 | bits u64
//!        | payload length u64 | ciphertext | SHA-256(ciphertext)
//! ```

use super::AppError;
use crate::relay_keystore::KeyPool;
use sha2::{Digest, Sha256};

pub const OTP_MAGIC: &[u8; 4] = b"OTPX";
pub const OTP_VERSION: u16 = 1;

/// Pool pair and key range used by an envelope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyRef {
    pub pair: (String, String),
    pub offset: u64,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtpEnvelope {
    pub ciphertext: Vec<u8>,
    pub key_ref: KeyRef,
    pub length: u64,
    pub checksum: [u8; 32],
}

impl OtpEnvelope {
    /// Recomputes the ciphertext digest. The digest is unkeyed, so anyone
    /// who alters the ciphertext can do this too.
    pub fn reseal(&mut self) {
        self.checksum = Sha256::digest(&self.ciphertext).into();
    }
}

fn xor_with_key(data: &[u8], key: &[u8]) -> Vec<u8> {
    data.iter().zip(key).map(|(d, k)| d ^ k).collect()
}

/// Consumes exactly `8 · |plaintext|` bits from the sender's view.
pub fn otp_encrypt(plaintext: &[u8], pool: &mut KeyPool, time: f64) -> Result<OtpEnvelope, AppError> {
    let bits = 8 * plaintext.len() as u64;
    let (offset, key) = pool.consume(bits, time, "otp")?;
    let ciphertext = xor_with_key(plaintext, &key.to_bytes());
    let mut env = OtpEnvelope {
        ciphertext,
        key_ref: KeyRef {
            pair: (pool.holder.clone(), pool.peer.clone()),
            offset,
            bits,
        },
        length: plaintext.len() as u64,
        checksum: [0; 32],
    };
    env.reseal();
    Ok(env)
}

/// Decrypts with the receiver's view of the same pair, consuming the same
/// range there. A range already consumed locally is refused.
pub fn otp_decrypt(env: &OtpEnvelope, pool: &mut KeyPool, time: f64) -> Result<Vec<u8>, AppError> {
    if <[u8; 32]>::from(Sha256::digest(&env.ciphertext)) != env.checksum {
        return Err(AppError::Checksum);
    }
    let (a, b) = &env.key_ref.pair;
    let matches = (a == &pool.holder && b == &pool.peer) || (a == &pool.peer && b == &pool.holder);
    if !matches || env.key_ref.bits != 8 * env.length || env.ciphertext.len() as u64 != env.length {
        return Err(AppError::KeyRefMismatch(format!("{a}/{b}")));
    }
    let key = pool.consume_at(env.key_ref.offset, env.key_ref.bits, time, "otp")?;
    Ok(xor_with_key(&env.ciphertext, &key.to_bytes()))
}

pub fn encode_envelope(env: &OtpEnvelope) -> Vec<u8> {
    let mut out = Vec::with_capacity(env.ciphertext.len() + 80);
    out.extend_from_slice(OTP_MAGIC);
    out.extend_from_slice(&OTP_VERSION.to_be_bytes());
    for s in [&env.key_ref.pair.0, &env.key_ref.pair.1] {
        out.extend_from_slice(&(s.len() as u16).to_be_bytes());
        out.extend_from_slice(s.as_bytes());
    }
    out.extend_from_slice(&env.key_ref.offset.to_be_bytes());
    out.extend_from_slice(&env.key_ref.bits.to_be_bytes());
    out.extend_from_slice(&env.length.to_be_bytes());
    out.extend_from_slice(&env.ciphertext);
    out.extend_from_slice(&env.checksum);
    out
}

pub fn decode_envelope(data: &[u8]) -> Result<OtpEnvelope, AppError> {
    let mut rest = data;
    let mut take = |n: usize| -> Result<&[u8], AppError> {
        if rest.len() < n {
            return Err(AppError::Format("truncated".into()));
        }
        let (h, t) = rest.split_at(n);
        rest = t;
        Ok(h)
    };
    if take(4)? != OTP_MAGIC {
        return Err(AppError::Format("bad magic".into()));
    }
    let version = u16::from_be_bytes(take(2)?.try_into().unwrap());
    if version != OTP_VERSION {
        return Err(AppError::Format(format!("unsupported version {version}")));
    }
    let mut string = || -> Result<String, AppError> {
        let n = u16::from_be_bytes(take(2)?.try_into().unwrap()) as usize;
        String::from_utf8(take(n)?.to_vec()).map_err(|e| AppError::Format(e.to_string()))
    };
    let a = string()?;
    let b = string()?;
    let mut u64_field = || -> Result<u64, AppError> { Ok(u64::from_be_bytes(take(8)?.try_into().unwrap())) };
    let offset = u64_field()?;
    let bits = u64_field()?;
    let length = u64_field()?;
    let n = usize::try_from(length).map_err(|_| AppError::Format("length overflow".into()))?;
    let ciphertext = take(n)?.to_vec();
    let checksum: [u8; 32] = take(32)?.try_into().unwrap();
    if !rest.is_empty() {
        return Err(AppError::Format("trailing bytes".into()));
    }
    let env = OtpEnvelope {
        ciphertext,
        key_ref: KeyRef {
            pair: (a, b),
            offset,
            bits,
        },
        length,
        checksum,
    };
    if <[u8; 32]>::from(Sha256::digest(&env.ciphertext)) != env.checksum {
        return Err(AppError::Checksum);
    }
    Ok(env)
}
