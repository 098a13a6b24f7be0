//! Run directory layout:
//!
//! ```text
//! passes.csv  pools.csv  apps.csv  audit.csv  events.log  state.json
//! keys/<block_id>.qkdk      one file per block not yet erased in some view
//! ```
//!
//! `state.json` holds pool metadata and offsets; key material lives only in
//! the key files. Every file is a pure function of the report.

use super::run::{AppRecord, PoolBalance, RunReport};
use crate::post_processing::PASS_CSV_HEADER;
use crate::relay_keystore::{decode_key_block, encode_key_block, ConsumeEvent, KeyBlock, KeyPool, KeyStore};
use crate::bits::BitString;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

pub const POOLS_CSV_HEADER: &str = "holder,peer,deposited,consumed,available";
pub const APPS_CSV_HEADER: &str = "index,app,endpoints,time,bits_requested,bits_consumed,status,detail";
pub const STATE_FILE: &str = "state.json";
pub const KEYS_DIR: &str = "keys";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMeta {
    pub block_id: String,
    pub pair: (String, String),
    pub bits: u64,
    pub created: f64,
    pub erased: bool,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolState {
    pub holder: String,
    pub peer: String,
    pub consumed_offset: u64,
    pub blocks: Vec<BlockMeta>,
    pub events: Vec<ConsumeEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub scenario: String,
    pub master_seed: u64,
    pub clock: f64,
    pub e2e_counter: u64,
    pub pools: Vec<PoolState>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn passes_csv(r: &RunReport) -> String {
    let mut s = format!("{PASS_CSV_HEADER}\n");
    for row in &r.passes {
        s.push_str(&row.to_csv_line());
        s.push('\n');
    }
    s
}

pub fn pools_csv(pools: &[PoolBalance]) -> String {
    let mut s = format!("{POOLS_CSV_HEADER}\n");
    for p in pools {
        let _ = writeln!(s, "{},{},{},{},{}", p.holder, p.peer, p.deposited, p.consumed, p.available);
    }
    s
}

pub fn apps_csv(apps: &[AppRecord]) -> String {
    let mut s = format!("{APPS_CSV_HEADER}\n");
    for a in apps {
        let status = serde_json::to_value(a.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{:.3},{},{},{},\"{}\"",
            a.index,
            a.app,
            a.endpoints,
            a.time,
            a.bits_requested,
            a.bits_consumed,
            status,
            a.detail.replace('"', "'")
        );
    }
    s
}

pub fn events_log(r: &RunReport) -> String {
    let mut s = String::new();
    for e in &r.events {
        let _ = writeln!(s, "{:>14.3} {:<7} {}", e.time, e.kind.to_string(), e.text);
    }
    s
}

pub fn run_state(r: &RunReport) -> RunState {
    state_of(&r.scenario, r.master_seed, r.clock, &r.store)
}

pub fn state_of(scenario: &str, master_seed: u64, clock: f64, store: &KeyStore) -> RunState {
    RunState {
        scenario: scenario.to_string(),
        master_seed,
        clock,
        e2e_counter: store.e2e_counter(),
        pools: store
            .pools()
            .map(|p| PoolState {
                holder: p.holder.clone(),
                peer: p.peer.clone(),
                consumed_offset: p.consumed_offset(),
                blocks: p
                    .blocks()
                    .iter()
                    .map(|b| BlockMeta {
                        block_id: b.block_id.clone(),
                        pair: b.pair.clone(),
                        bits: b.len(),
                        created: b.created,
                        erased: b.erased,
                        sha256: hex(&b.checksum),
                    })
                    .collect(),
                events: p.events().to_vec(),
            })
            .collect(),
    }
}

/// Key blocks still live in at least one view, by id.
fn live_blocks(store: &KeyStore) -> BTreeMap<String, &KeyBlock> {
    let mut out = BTreeMap::new();
    for p in store.pools() {
        for b in p.blocks().iter().filter(|b| !b.erased) {
            out.entry(b.block_id.clone()).or_insert(b);
        }
    }
    out
}

/// Rewrites the pool state and key files of a run directory.
pub fn write_store(dir: &Path, scenario: &str, master_seed: u64, clock: f64, store: &KeyStore) -> io::Result<()> {
    let keys = dir.join(KEYS_DIR);
    if keys.exists() {
        fs::remove_dir_all(&keys)?;
    }
    fs::create_dir_all(&keys)?;
    for (id, b) in live_blocks(store) {
        fs::write(keys.join(format!("{id}.qkdk")), encode_key_block(b))?;
    }
    let state = state_of(scenario, master_seed, clock, store);
    let json = serde_json::to_string_pretty(&state).map_err(io::Error::other)?;
    fs::write(dir.join(STATE_FILE), json + "\n")?;
    fs::write(dir.join("pools.csv"), pools_csv(&super::run::balances(store)))?;
    fs::write(dir.join("audit.csv"), store.audit_csv())
}

pub fn write_run_dir(r: &RunReport, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("passes.csv"), passes_csv(r))?;
    fs::write(dir.join("apps.csv"), apps_csv(&r.apps))?;
    fs::write(dir.join("events.log"), events_log(r))?;
    write_store(dir, &r.scenario, r.master_seed, r.clock, &r.store)
}

/// Rebuilds the key store of a run directory, verifying every key file.
pub fn load_store(dir: &Path) -> io::Result<(RunState, KeyStore)> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let text = fs::read_to_string(dir.join(STATE_FILE))?;
    let state: RunState = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let mut cache: BTreeMap<String, KeyBlock> = BTreeMap::new();
    let mut store = KeyStore::new();
    for ps in &state.pools {
        let mut blocks = Vec::with_capacity(ps.blocks.len());
        for m in &ps.blocks {
            if m.erased {
                blocks.push(KeyBlock {
                    block_id: m.block_id.clone(),
                    pair: m.pair.clone(),
                    bits: BitString::zeros(m.bits as usize),
                    created: m.created,
                    checksum: [0; 32],
                    erased: true,
                });
                continue;
            }
            if !cache.contains_key(&m.block_id) {
                let data = fs::read(dir.join(KEYS_DIR).join(format!("{}.qkdk", m.block_id)))?;
                let b = decode_key_block(&data, &m.block_id, m.created).map_err(|e| bad(e.to_string()))?;
                cache.insert(m.block_id.clone(), b);
            }
            let b = cache[&m.block_id].clone();
            if hex(&b.checksum) != m.sha256 || b.len() != m.bits {
                return Err(bad(format!("key file for {} does not match state", m.block_id)));
            }
            blocks.push(b);
        }
        let pool = KeyPool::restore(&ps.holder, &ps.peer, blocks, ps.consumed_offset, ps.events.clone())
            .map_err(|e| bad(e.to_string()))?;
        store.insert_pool(pool);
    }
    store.set_e2e_counter(state.e2e_counter);
    Ok((state, store))
}
