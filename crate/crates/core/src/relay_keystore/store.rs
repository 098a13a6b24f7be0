use super::{KeyBlock, KeyError, KeyPool};
use crate::bits::BitString;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const AUDIT_CSV_HEADER: &str = "time,pool,offset,bits,purpose";

pub fn pool_label(holder: &str, peer: &str) -> String {
    format!("{holder}->{peer}")
}

/// XOR string published by a relay that holds keys with both neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayMessage {
    pub relay_node: String,
    pub endpoints: (String, String),
    pub xored_bits: BitString,
    /// `(pool label, offset)` of both consumed ranges.
    pub key_refs: [(String, u64); 2],
}

/// Which endpoint receives the relay strings and decodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    #[default]
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2eKey {
    pub key_a: BitString,
    pub key_b: BitString,
    pub messages: Vec<RelayMessage>,
    pub block: KeyBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub time: f64,
    pub pool: String,
    pub offset: u64,
    pub bits: u64,
    pub purpose: String,
}

/// Folds relay messages into the decoder's own key.
pub fn xor_decode(own: &BitString, messages: &[RelayMessage]) -> BitString {
    messages.iter().fold(own.clone(), |acc, m| acc.xor(&m.xored_bits))
}

/// All pool views of the network, keyed by `(holder, peer)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyStore {
    pools: BTreeMap<(String, String), KeyPool>,
    e2e_counter: u64,
}

impl KeyStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pools(&self) -> impl Iterator<Item = &KeyPool> {
        self.pools.values()
    }

    pub fn pool(&self, holder: &str, peer: &str) -> Option<&KeyPool> {
        self.pools.get(&(holder.to_string(), peer.to_string()))
    }

    pub fn insert_pool(&mut self, pool: KeyPool) {
        self.pools.insert((pool.holder.clone(), pool.peer.clone()), pool);
    }

    pub fn pool_mut(&mut self, holder: &str, peer: &str) -> Result<&mut KeyPool, KeyError> {
        self.pools
            .get_mut(&(holder.to_string(), peer.to_string()))
            .ok_or_else(|| KeyError::UnknownPool {
                holder: holder.to_string(),
                peer: peer.to_string(),
            })
    }

    pub fn available(&self, holder: &str, peer: &str) -> u64 {
        self.pool(holder, peer).map_or(0, KeyPool::available)
    }

    /// Deposits one key into both views of the pair.
    pub fn deposit_pair(
        &mut self,
        a: &str,
        b: &str,
        block_id: &str,
        bits: BitString,
        time: f64,
    ) -> Result<KeyBlock, KeyError> {
        let block = KeyBlock::new(block_id, (a, b), bits, time)?;
        for (h, p) in [(a, b), (b, a)] {
            if let Some(pool) = self.pool(h, p) {
                if pool.blocks().iter().any(|x| x.block_id == block_id) {
                    return Err(KeyError::DuplicateBlock(block_id.to_string()));
                }
            }
        }
        for (h, p) in [(a, b), (b, a)] {
            self.pools
                .entry((h.to_string(), p.to_string()))
                .or_insert_with(|| KeyPool::new(h, p))
                .deposit(block.clone())?;
        }
        Ok(block)
    }

    pub fn consume(
        &mut self,
        holder: &str,
        peer: &str,
        n: u64,
        time: f64,
        purpose: &str,
    ) -> Result<(u64, BitString), KeyError> {
        self.pool_mut(holder, peer)?.consume(n, time, purpose)
    }

    pub fn consume_at(
        &mut self,
        holder: &str,
        peer: &str,
        offset: u64,
        n: u64,
        time: f64,
        purpose: &str,
    ) -> Result<BitString, KeyError> {
        self.pool_mut(holder, peer)?.consume_at(offset, n, time, purpose)
    }

    /// First offset unused in both views of the pair.
    pub fn aligned_offset(&self, a: &str, b: &str) -> u64 {
        let ca = self.pool(a, b).map_or(0, KeyPool::consumed_offset);
        let cb = self.pool(b, a).map_or(0, KeyPool::consumed_offset);
        ca.max(cb)
    }

    /// Consumes `n` bits from the relay's pools with `a` and `b` and returns
    /// their XOR.
    pub fn relay_xor(&mut self, relay: &str, a: &str, b: &str, n: u64, time: f64) -> Result<RelayMessage, KeyError> {
        for peer in [a, b] {
            let avail = self.available(relay, peer);
            if avail < n {
                return Err(KeyError::InsufficientKey {
                    pool: pool_label(relay, peer),
                    needed: n,
                    available: avail,
                });
            }
        }
        let (oa, ka) = self.consume(relay, a, n, time, "relay")?;
        let (ob, kb) = self.consume(relay, b, n, time, "relay")?;
        Ok(RelayMessage {
            relay_node: relay.to_string(),
            endpoints: (a.to_string(), b.to_string()),
            xored_bits: ka.xor(&kb),
            key_refs: [(pool_label(relay, a), oa), (pool_label(relay, b), ob)],
        })
    }

    /// Hop-by-hop trusted-relay establishment of an `n`-bit key between the
    /// ends of `route`, deposited into the end-to-end pool.
    ///
    /// Relay `i` publishes `K(i−1,i) ⊕ K(i,i+1)`. With [`Decoder::A`] the
    /// shared key is the last hop's key, which `B` already holds and `A`
    /// recovers by folding all relay strings into its first-hop key.
    /// Availability on every hop is checked before anything is debited.
    pub fn establish_e2e(
        &mut self,
        route: &[&str],
        n: u64,
        time: f64,
        decoder: Decoder,
    ) -> Result<E2eKey, KeyError> {
        if route.len() < 2 {
            return Err(KeyError::InvalidRoute("route needs at least two nodes".into()));
        }
        if route.windows(2).any(|w| w[0] == w[1]) {
            return Err(KeyError::InvalidRoute("repeated adjacent node".into()));
        }
        if n == 0 {
            return Err(KeyError::EmptyKey);
        }
        let hops: Vec<(&str, &str)> = route.windows(2).map(|w| (w[0], w[1])).collect();
        // Both views of a hop start at the later of their two offsets.
        let mut starts = Vec::with_capacity(hops.len());
        for &(x, y) in &hops {
            let start = self.aligned_offset(x, y);
            for (h, p) in [(x, y), (y, x)] {
                let avail = self.pool(h, p).map_or(0, |pl| pl.total_deposited().saturating_sub(start));
                if avail < n {
                    return Err(KeyError::InsufficientKey {
                        pool: pool_label(h, p),
                        needed: n,
                        available: avail,
                    });
                }
            }
            starts.push(start);
        }
        let mut debit_order: Vec<usize> = (0..hops.len()).collect();
        debit_order.sort_by_key(|&i| {
            let (x, y) = hops[i];
            if x <= y { (x, y) } else { (y, x) }
        });
        let mut hop_keys = vec![BitString::new(); hops.len()];
        let mut hop_offsets = vec![0u64; hops.len()];
        for i in debit_order {
            let (x, y) = hops[i];
            let off = starts[i];
            let kx = self.consume_at(x, y, off, n, time, "e2e")?;
            let ky = self.consume_at(y, x, off, n, time, "e2e")?;
            debug_assert_eq!(kx, ky);
            hop_keys[i] = kx;
            hop_offsets[i] = off;
        }
        let messages: Vec<RelayMessage> = (1..route.len() - 1)
            .map(|i| RelayMessage {
                relay_node: route[i].to_string(),
                endpoints: (route[i - 1].to_string(), route[i + 1].to_string()),
                xored_bits: hop_keys[i - 1].xor(&hop_keys[i]),
                key_refs: [
                    (pool_label(route[i], route[i - 1]), hop_offsets[i - 1]),
                    (pool_label(route[i], route[i + 1]), hop_offsets[i]),
                ],
            })
            .collect();
        let last = hops.len() - 1;
        let (key_a, key_b) = match decoder {
            Decoder::A => (xor_decode(&hop_keys[0], &messages), hop_keys[last].clone()),
            Decoder::B => (hop_keys[0].clone(), xor_decode(&hop_keys[last], &messages)),
        };
        let a = route[0];
        let b = route[route.len() - 1];
        self.e2e_counter += 1;
        let id = format!("e2e-{a}-{b}-{}", self.e2e_counter);
        let block = self.deposit_pair(a, b, &id, key_a.clone(), time)?;
        Ok(E2eKey {
            key_a,
            key_b,
            messages,
            block,
        })
    }

    /// Every consumption event of every view, ordered by time then pool.
    pub fn audit_records(&self) -> Vec<AuditRecord> {
        let mut out: Vec<AuditRecord> = self
            .pools
            .values()
            .flat_map(|p| {
                let label = p.label();
                p.events().iter().map(move |e| AuditRecord {
                    time: e.time,
                    pool: label.clone(),
                    offset: e.offset,
                    bits: e.bits,
                    purpose: e.purpose.clone(),
                })
            })
            .collect();
        out.sort_by(|x, y| x.time.total_cmp(&y.time).then_with(|| x.pool.cmp(&y.pool)).then(x.offset.cmp(&y.offset)));
        out
    }

    pub fn audit_csv(&self) -> String {
        let mut s = format!("{AUDIT_CSV_HEADER}\n");
        for r in self.audit_records() {
            let _ = writeln!(s, "{:.3},{},{},{},{}", r.time, r.pool, r.offset, r.bits, r.purpose);
        }
        s
    }

    /// Global no-reuse audit: every view's consumed ranges are disjoint.
    pub fn audit(&self) -> Result<(), Vec<String>> {
        let faults: Vec<String> = self.pools.values().filter_map(|p| p.audit().err()).collect();
        if faults.is_empty() {
            Ok(())
        } else {
            Err(faults)
        }
    }

    pub fn e2e_counter(&self) -> u64 {
        self.e2e_counter
    }

    pub fn set_e2e_counter(&mut self, c: u64) {
        self.e2e_counter = c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use proptest::prelude::*;

    fn random(n: usize, seed: u64) -> BitString {
        BitString::random(n, &mut substream(seed, Purpose::Synthetic, 0))
    }

    fn chain(nodes: &[&str], n: usize) -> KeyStore {
        let mut s = KeyStore::new();
        for (i, w) in nodes.windows(2).enumerate() {
            s.deposit_pair(w[0], w[1], &format!("h{i}"), random(n, i as u64), 0.0).unwrap();
        }
        s
    }

    #[test]
    fn equal_keys_cancel() {
        let mut s = KeyStore::new();
        let k = random(256, 1);
        s.deposit_pair("m", "x", "mx", k.clone(), 0.0).unwrap();
        s.deposit_pair("m", "g", "mg", k, 0.0).unwrap();
        let msg = s.relay_xor("m", "x", "g", 256, 0.0).unwrap();
        assert_eq!(msg.xored_bits.count_ones(), 0);
    }

    #[test]
    fn recover_mg_from_one_kilobyte_keys() {
        let mut s = KeyStore::new();
        let mx = random(8192, 2);
        let mg = random(8192, 3);
        s.deposit_pair("micius", "xinglong", "mx", mx.clone(), 0.0).unwrap();
        s.deposit_pair("micius", "graz", "mg", mg.clone(), 0.0).unwrap();
        let msg = s.relay_xor("micius", "xinglong", "graz", 8192, 0.0).unwrap();
        assert_eq!(msg.xored_bits.xor(&mx), mg);
        assert!(matches!(s.relay_xor("micius", "xinglong", "graz", 1, 0.0), Err(KeyError::InsufficientKey { .. })));
    }

    #[test]
    fn exhaustive_four_bit_pairs() {
        for x in 0u64..16 {
            for g in 0u64..16 {
                let mx = BitString::from_words(vec![x], 4);
                let mg = BitString::from_words(vec![g], 4);
                let mut s = KeyStore::new();
                s.deposit_pair("m", "x", "mx", mx.clone(), 0.0).unwrap();
                s.deposit_pair("m", "g", "mg", mg.clone(), 0.0).unwrap();
                let msg = s.relay_xor("m", "x", "g", 4, 0.0).unwrap();
                assert_eq!(msg.xored_bits.xor(&mx), mg);
            }
        }
    }

    #[test]
    fn satellite_relay_hundred_kilobytes() {
        let mut s = chain(&["xinglong", "micius", "graz"], 1_000_000);
        let e = s.establish_e2e(&["xinglong", "micius", "graz"], 800_000, 10.0, Decoder::A).unwrap();
        assert_eq!(e.key_a, e.key_b);
        assert_eq!(e.key_a.len(), 800_000);
        assert_eq!(s.available("micius", "xinglong"), 200_000);
        assert_eq!(s.available("micius", "graz"), 200_000);
        assert_eq!(s.available("xinglong", "graz"), 800_000);
        assert_eq!(s.available("graz", "xinglong"), 800_000);
        s.audit().unwrap();
    }

    #[test]
    fn deficient_hop_debits_nothing() {
        let nodes = ["a", "r1", "r2", "b"];
        let mut s = chain(&nodes, 100);
        s.consume("r2", "b", 50, 0.0, "drain").unwrap();
        let before: Vec<u64> = s.pools().map(KeyPool::consumed_offset).collect();
        let err = s.establish_e2e(&nodes, 80, 1.0, Decoder::A).unwrap_err();
        assert_eq!(
            err,
            KeyError::InsufficientKey {
                pool: "r2->b".into(),
                needed: 80,
                available: 50
            }
        );
        let after: Vec<u64> = s.pools().map(KeyPool::consumed_offset).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn six_relay_chain_matches_fold_oracle() {
        let nodes = ["beijing", "r1", "r2", "r3", "r4", "r5", "r6", "xinglong"];
        let mut s = chain(&nodes, 128);
        let hop_keys: Vec<BitString> = (0..7).map(|i| random(128, i)).collect();
        let e = s.establish_e2e(&nodes, 128, 0.0, Decoder::A).unwrap();
        // oracle: A's first key XOR every relay's pair-XOR, computed directly
        let mut oracle = hop_keys[0].clone();
        for i in 1..7 {
            oracle = oracle.xor(&hop_keys[i - 1].xor(&hop_keys[i]));
        }
        assert_eq!(e.key_a, oracle);
        assert_eq!(e.key_b, hop_keys[6]);
        assert_eq!(e.key_a, e.key_b);
        assert_eq!(e.messages.len(), 6);
    }

    #[test]
    fn decoder_b_shares_first_hop_key() {
        let nodes = ["a", "m", "b"];
        let mut s = chain(&nodes, 64);
        let e = s.establish_e2e(&nodes, 64, 0.0, Decoder::B).unwrap();
        assert_eq!(e.key_a, random(64, 0));
        assert_eq!(e.key_a, e.key_b);
    }

    #[test]
    fn audit_csv_lists_both_views() {
        let mut s = chain(&["a", "m", "b"], 64);
        s.establish_e2e(&["a", "m", "b"], 32, 5.0, Decoder::A).unwrap();
        let csv = s.audit_csv();
        assert!(csv.starts_with(AUDIT_CSV_HEADER));
        assert_eq!(csv.lines().count(), 1 + 4);
    }

    proptest! {
        #[test]
        fn relay_correctness(len in 2usize..=8, n in 1u64..300, seed: u64, dec_b: bool) {
            let names: Vec<String> = (0..len).map(|i| format!("n{i}")).collect();
            let nodes: Vec<&str> = names.iter().map(String::as_str).collect();
            let mut s = KeyStore::new();
            for (i, w) in nodes.windows(2).enumerate() {
                s.deposit_pair(w[0], w[1], "k", random(n as usize + i, seed.wrapping_add(i as u64)), 0.0).unwrap();
            }
            let dec = if dec_b { Decoder::B } else { Decoder::A };
            let e = s.establish_e2e(&nodes, n, 0.0, dec).unwrap();
            prop_assert_eq!(&e.key_a, &e.key_b);
            prop_assert!(s.audit().is_ok());
        }
    }
}
