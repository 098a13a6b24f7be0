use super::KeyError;
use crate::bits::BitString;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct KeyBlock {
    pub block_id: String,
    pub pair: (String, String),
    pub bits: BitString,
    /// Simulation time of creation, seconds.
    pub created: f64,
    pub checksum: [u8; 32],
    pub erased: bool,
}

impl KeyBlock {
    pub fn new(block_id: &str, pair: (&str, &str), bits: BitString, created: f64) -> Result<Self, KeyError> {
        if bits.is_empty() {
            return Err(KeyError::EmptyKey);
        }
        let checksum = Self::digest(&bits);
        Ok(Self {
            block_id: block_id.to_string(),
            pair: (pair.0.to_string(), pair.1.to_string()),
            bits,
            created,
            checksum,
            erased: false,
        })
    }

    pub fn digest(bits: &BitString) -> [u8; 32] {
        Sha256::digest(bits.to_bytes()).into()
    }

    pub fn verify(&self) -> Result<(), KeyError> {
        if self.erased || Self::digest(&self.bits) == self.checksum {
            Ok(())
        } else {
            Err(KeyError::ChecksumMismatch(self.block_id.clone()))
        }
    }

    pub fn len(&self) -> u64 {
        self.bits.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumeEvent {
    pub time: f64,
    pub offset: u64,
    pub bits: u64,
    pub purpose: String,
}

/// One node's view of the key shared with one peer.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyPool {
    pub holder: String,
    pub peer: String,
    blocks: Vec<KeyBlock>,
    /// Global bit offset at which each block starts.
    starts: Vec<u64>,
    total: u64,
    consumed_offset: u64,
    events: Vec<ConsumeEvent>,
}

impl KeyPool {
    pub fn new(holder: &str, peer: &str) -> Self {
        Self {
            holder: holder.to_string(),
            peer: peer.to_string(),
            blocks: Vec::new(),
            starts: Vec::new(),
            total: 0,
            consumed_offset: 0,
            events: Vec::new(),
        }
    }

    pub fn label(&self) -> String {
        super::pool_label(&self.holder, &self.peer)
    }

    pub fn total_deposited(&self) -> u64 {
        self.total
    }

    pub fn consumed_offset(&self) -> u64 {
        self.consumed_offset
    }

    pub fn available(&self) -> u64 {
        self.total - self.consumed_offset
    }

    pub fn blocks(&self) -> &[KeyBlock] {
        &self.blocks
    }

    pub fn block_starts(&self) -> &[u64] {
        &self.starts
    }

    pub fn events(&self) -> &[ConsumeEvent] {
        &self.events
    }

    pub fn deposit(&mut self, block: KeyBlock) -> Result<(), KeyError> {
        if block.is_empty() {
            return Err(KeyError::EmptyKey);
        }
        if self.blocks.iter().any(|b| b.block_id == block.block_id) {
            return Err(KeyError::DuplicateBlock(block.block_id));
        }
        block.verify()?;
        self.starts.push(self.total);
        self.total += block.len();
        self.blocks.push(block);
        Ok(())
    }

    /// Rebuilds a pool from stored parts, e.g. a run directory.
    pub fn restore(
        holder: &str,
        peer: &str,
        blocks: Vec<KeyBlock>,
        consumed_offset: u64,
        events: Vec<ConsumeEvent>,
    ) -> Result<Self, KeyError> {
        let mut pool = Self::new(holder, peer);
        for b in blocks {
            if b.erased {
                pool.starts.push(pool.total);
                pool.total += b.len();
                pool.blocks.push(b);
            } else {
                pool.deposit(b)?;
            }
        }
        if consumed_offset > pool.total {
            return Err(KeyError::Format(format!(
                "consumed offset {consumed_offset} beyond pool size {}",
                pool.total
            )));
        }
        pool.consumed_offset = consumed_offset;
        pool.events = events;
        Ok(pool)
    }

    /// Takes the next `n` bits.
    pub fn consume(&mut self, n: u64, time: f64, purpose: &str) -> Result<(u64, BitString), KeyError> {
        let offset = self.consumed_offset;
        self.consume_at(offset, n, time, purpose).map(|bits| (offset, bits))
    }

    /// Takes `n` bits starting at `offset`, which must not lie below the
    /// consumed offset. Any gap up to `offset` is discarded.
    pub fn consume_at(&mut self, offset: u64, n: u64, time: f64, purpose: &str) -> Result<BitString, KeyError> {
        if offset < self.consumed_offset {
            return Err(KeyError::RefusedReuse {
                pool: self.label(),
                offset,
                consumed: self.consumed_offset,
            });
        }
        let end = offset.checked_add(n).filter(|&e| e <= self.total).ok_or(KeyError::InsufficientKey {
            pool: self.label(),
            needed: n.saturating_add(offset - self.consumed_offset),
            available: self.available(),
        })?;
        if n == 0 {
            return Ok(BitString::new());
        }
        if offset > self.consumed_offset {
            self.events.push(ConsumeEvent {
                time,
                offset: self.consumed_offset,
                bits: offset - self.consumed_offset,
                purpose: "skip".into(),
            });
        }
        let bits = self.read(offset, n);
        self.consumed_offset = end;
        self.events.push(ConsumeEvent {
            time,
            offset,
            bits: n,
            purpose: purpose.to_string(),
        });
        self.erase_consumed();
        Ok(bits)
    }

    /// Discards key up to `offset` so this view lines up with its peer's.
    pub fn skip_to(&mut self, offset: u64, time: f64) -> Result<(), KeyError> {
        if offset <= self.consumed_offset {
            return Ok(());
        }
        if offset > self.total {
            return Err(KeyError::InsufficientKey {
                pool: self.label(),
                needed: offset - self.consumed_offset,
                available: self.available(),
            });
        }
        self.events.push(ConsumeEvent {
            time,
            offset: self.consumed_offset,
            bits: offset - self.consumed_offset,
            purpose: "skip".into(),
        });
        self.consumed_offset = offset;
        self.erase_consumed();
        Ok(())
    }

    fn read(&self, offset: u64, n: u64) -> BitString {
        let mut out = BitString::with_capacity(n as usize);
        let end = offset + n;
        let first = self.starts.partition_point(|&s| s <= offset) - 1;
        for (b, &start) in self.blocks[first..].iter().zip(&self.starts[first..]) {
            if start >= end {
                break;
            }
            let lo = offset.max(start) - start;
            let hi = end.min(start + b.len()) - start;
            out.append(&b.bits.slice(lo as usize, (hi - lo) as usize));
        }
        out
    }

    fn erase_consumed(&mut self) {
        for (b, &start) in self.blocks.iter_mut().zip(&self.starts) {
            if !b.erased && start + b.len() <= self.consumed_offset {
                b.bits.zeroize();
                b.erased = true;
            }
        }
    }

    /// Checks that recorded consumption ranges are disjoint and end at the
    /// consumed offset.
    pub fn audit(&self) -> Result<(), String> {
        let mut ranges: Vec<(u64, u64)> = self.events.iter().map(|e| (e.offset, e.offset + e.bits)).collect();
        ranges.sort_unstable();
        for w in ranges.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(format!("{}: ranges {:?} and {:?} overlap", self.label(), w[0], w[1]));
            }
        }
        let consumed: u64 = self.events.iter().map(|e| e.bits).sum();
        if consumed != self.consumed_offset {
            return Err(format!(
                "{}: events cover {consumed} bits but offset is {}",
                self.label(),
                self.consumed_offset
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use proptest::prelude::*;

    fn block(id: &str, n: usize, seed: u64) -> KeyBlock {
        let mut rng = substream(seed, Purpose::Synthetic, 0);
        KeyBlock::new(id, ("a", "b"), BitString::random(n, &mut rng), 0.0).unwrap()
    }

    #[test]
    fn deposits_accumulate() {
        let mut p = KeyPool::new("a", "b");
        p.deposit(block("g", 266_000, 1)).unwrap();
        assert_eq!(p.available(), 266_000);
        let mut x = KeyPool::new("a", "b");
        x.deposit(block("x1", 61_000, 2)).unwrap();
        x.deposit(block("x2", 141_000, 3)).unwrap();
        assert_eq!(x.available(), 202_000);
        assert!(matches!(x.deposit(block("x1", 10, 4)), Err(KeyError::DuplicateBlock(_))));
        assert!(matches!(KeyBlock::new("e", ("a", "b"), BitString::new(), 0.0), Err(KeyError::EmptyKey)));
    }

    #[test]
    fn consumption_is_sequential_and_disjoint() {
        let mut p = KeyPool::new("a", "b");
        let b1 = block("1", 100, 1);
        let b2 = block("2", 100, 2);
        let mut all = b1.bits.clone();
        all.append(&b2.bits);
        p.deposit(b1).unwrap();
        p.deposit(b2).unwrap();

        let (o0, e) = p.consume(0, 0.0, "t").unwrap();
        assert_eq!((o0, e.len(), p.consumed_offset()), (0, 0, 0));
        let (o1, k1) = p.consume(70, 1.0, "t").unwrap();
        let (o2, k2) = p.consume(60, 2.0, "t").unwrap();
        assert_eq!((o1, o2), (0, 70));
        assert_eq!(k1, all.slice(0, 70));
        assert_eq!(k2, all.slice(70, 60));
        assert!(p.blocks()[0].erased);
        assert!(!p.blocks()[1].erased);
        assert!(matches!(p.consume(71, 3.0, "t"), Err(KeyError::InsufficientKey { needed: 71, available: 70, .. })));
        assert!(matches!(p.consume_at(10, 5, 3.0, "t"), Err(KeyError::RefusedReuse { .. })));
        p.audit().unwrap();
    }

    #[test]
    fn hundred_kilobyte_pool_after_otp() {
        let mut p = KeyPool::new("a", "b");
        p.deposit(block("k", 800_000, 5)).unwrap();
        p.consume(80_000, 0.0, "otp").unwrap();
        assert_eq!(p.available(), 720_000);
    }

    #[test]
    fn tampered_block_is_rejected() {
        let mut b = block("t", 64, 6);
        b.bits.flip(3);
        assert!(matches!(KeyPool::new("a", "b").deposit(b), Err(KeyError::ChecksumMismatch(_))));
    }

    proptest! {
        /// Deposits minus consumption equals availability after any sequence
        /// of operations, and no two consumptions overlap.
        #[test]
        fn conservation(ops in prop::collection::vec((any::<bool>(), 1u64..500), 1..40)) {
            let mut p = KeyPool::new("a", "b");
            let mut deposited = 0;
            let mut consumed = 0;
            for (i, (is_deposit, n)) in ops.into_iter().enumerate() {
                if is_deposit {
                    p.deposit(block(&i.to_string(), n as usize, i as u64)).unwrap();
                    deposited += n;
                } else if p.consume(n, i as f64, "t").is_ok() {
                    consumed += n;
                }
                prop_assert_eq!(p.available(), deposited - consumed);
            }
            prop_assert!(p.audit().is_ok());
        }
    }
}
