//! Packed bit strings.
//!
//! Bits are stored LSB-first inside `u64` words. Unused high bits of the last
//! word are always zero so that derived equality and hashing are exact. The
//! external byte encoding ([`BitString::to_bytes`]) is big-endian bit order:
//! bit 0 of the string is the most significant bit of byte 0, and the final
//! byte is zero-padded.

use rand::Rng;
use std::fmt;

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(words_for(bits)),
            len: 0,
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..words_for(len)).map(|_| rng.random()).collect();
        mask_tail(&mut words, len);
        Self { words, len }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.words[i >> 6] |= 1 << (i & 63);
            }
        }
        s
    }

    /// Builds a string from raw words; bits beyond `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(words_for(len), 0);
        mask_tail(&mut words, len);
        Self { words, len }
    }

    /// Decodes `len` bits from big-endian-bit-order bytes.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut s = Self::zeros(len);
        for i in 0..len {
            if (bytes[i >> 3] >> (7 - (i & 7))) & 1 == 1 {
                s.words[i >> 6] |= 1 << (i & 63);
            }
        }
        Some(s)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                out[i >> 3] |= 0x80 >> (i & 7);
            }
        }
        out
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i >> 6] ^= 1 << (i & 63);
    }

    pub fn push(&mut self, bit: bool) {
        if self.len & 63 == 0 {
            self.words.push(0);
        }
        if bit {
            self.words[self.len >> 6] |= 1 << (self.len & 63);
        }
        self.len += 1;
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming(&self, other: &BitString) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn xor_assign(&mut self, other: &BitString) {
        assert_eq!(self.len, other.len, "xor of unequal lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Parity of bits in `[start, end)`.
    pub fn parity_range(&self, start: usize, end: usize) -> bool {
        assert!(start <= end && end <= self.len);
        if start == end {
            return false;
        }
        let (sw, ew) = (start >> 6, (end - 1) >> 6);
        let lo_mask = !0u64 << (start & 63);
        let hi_mask = if end & 63 == 0 {
            !0u64
        } else {
            (1u64 << (end & 63)) - 1
        };
        if sw == ew {
            return (self.words[sw] & lo_mask & hi_mask).count_ones() & 1 == 1;
        }
        let mut acc = self.words[sw] & lo_mask;
        for w in &self.words[sw + 1..ew] {
            acc ^= w;
        }
        acc ^= self.words[ew] & hi_mask;
        acc.count_ones() & 1 == 1
    }

    /// Copies `len` bits starting at `start`.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        let mut out = Self::zeros(len);
        let shift = start & 63;
        let base = start >> 6;
        for (k, w) in out.words.iter_mut().enumerate() {
            let lo = self.words[base + k] >> shift;
            let hi = if shift != 0 {
                self.words
                    .get(base + k + 1)
                    .map_or(0, |&x| x << (64 - shift))
            } else {
                0
            };
            *w = lo | hi;
        }
        mask_tail(&mut out.words, len);
        out
    }

    pub fn append(&mut self, other: &BitString) {
        if self.len & 63 == 0 {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        for i in 0..other.len {
            self.push(other.get(i));
        }
    }

    /// Overwrites every bit with zero, keeping the length.
    pub fn zeroize(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

fn mask_tail(words: &mut [u64], len: usize) {
    if len & 63 != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << (len & 63)) - 1;
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOW: usize = 64;
        write!(f, "BitString({}; ", self.len)?;
        for i in 0..self.len.min(SHOW) {
            write!(f, "{}", self.get(i) as u8)?;
        }
        if self.len > SHOW {
            write!(f, "…")?;
        }
        write!(f, ")")
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut s = BitString::new();
        for b in iter {
            s.push(b);
        }
        s
    }
}
