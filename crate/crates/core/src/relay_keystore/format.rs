//! Key-block file, all integers big-endian:
//!
//! ```text
//! "QKDK" | version u16 | len u16, node_a utf8 | len u16, node_b utf8
//!        | bit length u64 | key bytes (MSB-first, zero-padded) | SHA-256(key bytes)
//! ```

use super::{KeyBlock, KeyError};
use crate::bits::BitString;

pub const KEY_BLOCK_MAGIC: &[u8; 4] = b"QKDK";
pub const KEY_BLOCK_VERSION: u16 = 1;

pub fn encode_key_block(block: &KeyBlock) -> Vec<u8> {
    let bytes = block.bits.to_bytes();
    let mut out = Vec::with_capacity(bytes.len() + 64);
    out.extend_from_slice(KEY_BLOCK_MAGIC);
    out.extend_from_slice(&KEY_BLOCK_VERSION.to_be_bytes());
    for s in [&block.pair.0, &block.pair.1] {
        out.extend_from_slice(&(s.len() as u16).to_be_bytes());
        out.extend_from_slice(s.as_bytes());
    }
    out.extend_from_slice(&(block.bits.len() as u64).to_be_bytes());
    out.extend_from_slice(&bytes);
    out.extend_from_slice(&block.checksum);
    out
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], KeyError> {
        if self.0.len() < n {
            return Err(KeyError::Format("truncated".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16, KeyError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, KeyError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, KeyError> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| KeyError::Format(e.to_string()))
    }
}

/// Parses and checksum-verifies a key-block file. The id and creation time
/// are not part of the file and are supplied by the caller.
pub fn decode_key_block(data: &[u8], block_id: &str, created: f64) -> Result<KeyBlock, KeyError> {
    let mut c = Cursor(data);
    if c.take(4)? != KEY_BLOCK_MAGIC {
        return Err(KeyError::Format("bad magic".into()));
    }
    let version = c.u16()?;
    if version != KEY_BLOCK_VERSION {
        return Err(KeyError::Format(format!("unsupported version {version}")));
    }
    let a = c.string()?;
    let b = c.string()?;
    let len = c.u64()?;
    let nbytes = usize::try_from(len.div_ceil(8)).map_err(|_| KeyError::Format("length overflow".into()))?;
    let bytes = c.take(nbytes)?;
    let checksum: [u8; 32] = c.take(32)?.try_into().unwrap();
    if !c.0.is_empty() {
        return Err(KeyError::Format("trailing bytes".into()));
    }
    let bits = BitString::from_bytes(bytes, len as usize).ok_or_else(|| KeyError::Format("bad payload".into()))?;
    if bits.to_bytes() != bytes {
        return Err(KeyError::Format("nonzero padding".into()));
    }
    let block = KeyBlock::new(block_id, (&a, &b), bits, created)?;
    if block.checksum != checksum {
        return Err(KeyError::ChecksumMismatch(block_id.to_string()));
    }
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use sha2::{Digest, Sha256};

    #[test]
    fn bit_exact_layout() {
        let bits = BitString::from_bools(&[true, false, true, true, false, false, false, false, true, true]);
        let block = KeyBlock::new("x", ("ab", "c"), bits, 0.0).unwrap();
        let enc = encode_key_block(&block);
        let mut expect = b"QKDK".to_vec();
        expect.extend_from_slice(&[0, 1, 0, 2, b'a', b'b', 0, 1, b'c']);
        expect.extend_from_slice(&10u64.to_be_bytes());
        expect.extend_from_slice(&[0b1011_0000, 0b1100_0000]);
        expect.extend_from_slice(&Sha256::digest([0b1011_0000u8, 0b1100_0000]));
        assert_eq!(enc, expect);
    }

    #[test]
    fn roundtrip_and_corruption() {
        let bits = BitString::random(10_001, &mut substream(1, Purpose::Synthetic, 0));
        let block = KeyBlock::new("k1", ("xinglong", "graz"), bits, 3.5).unwrap();
        let enc = encode_key_block(&block);
        let back = decode_key_block(&enc, "k1", 3.5).unwrap();
        assert_eq!(back, block);

        let mut bad = enc.clone();
        bad[30] ^= 1;
        assert!(matches!(decode_key_block(&bad, "k1", 0.0), Err(KeyError::ChecksumMismatch(_))));
        assert!(decode_key_block(&enc[..enc.len() - 1], "k1", 0.0).is_err());
        let mut magic = enc;
        magic[0] = b'X';
        assert!(matches!(decode_key_block(&magic, "k1", 0.0), Err(KeyError::Format(_))));
    }
}
