//! One-time-pad file transfer and a refreshed-key AES-128 session, both
//! drawing key from end-to-end pools.

mod otp;
mod session;

pub use otp::{decode_envelope, encode_envelope, otp_decrypt, otp_encrypt, KeyRef, OtpEnvelope, OTP_MAGIC, OTP_VERSION};
pub use session::{aes_session_run, session_ticks, Aes128Cipher, AesSession, NullCipher, SessionReport, SymmetricCipher};

use crate::relay_keystore::KeyError;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AppError {
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("ciphertext checksum mismatch")]
    Checksum,
    #[error("envelope key reference {0} does not match this pool")]
    KeyRefMismatch(String),
    #[error("malformed envelope: {0}")]
    Format(String),
    #[error("invalid session: {0}")]
    InvalidSession(String),
}
