use super::channel::{classical_transfer_time, Direction};
use super::scenario::{parse_date, validate_scenario, Scenario, WorkItem};
use crate::bits::BitString;
use crate::orbit_link::generate_pass;
use crate::par::map_slice;
use crate::post_processing::{process_pass, PassOutcome, PassReportRow};
use crate::quantum_layer::{run_pass, PassConfig};
use crate::relay_keystore::{pool_label, Decoder, KeyError, KeyStore};
use crate::rng::{derive_seed, substream, Purpose};
use crate::secure_apps::{aes_session_run, otp_decrypt, otp_encrypt, Aes128Cipher, AesSession, AppError};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventKind {
    Pass,
    Post,
    Deposit,
    Abort,
    Warn,
    Fiber,
    E2e,
    Otp,
    Aes,
    Error,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::Pass => "PASS",
            EventKind::Post => "POST",
            EventKind::Deposit => "DEPOSIT",
            EventKind::Abort => "ABORT",
            EventKind::Warn => "WARN",
            EventKind::Fiber => "FIBER",
            EventKind::E2e => "E2E",
            EventKind::Otp => "OTP",
            EventKind::Aes => "AES",
            EventKind::Error => "ERROR",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolBalance {
    pub holder: String,
    pub peer: String,
    pub deposited: u64,
    pub consumed: u64,
    pub available: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppStatus {
    Ok,
    Insufficient,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppRecord {
    pub index: usize,
    pub app: String,
    pub endpoints: String,
    pub time: f64,
    pub bits_requested: u64,
    /// Pair-level key drawn: each hop's bits count once, not once per view.
    pub bits_consumed: u64,
    pub status: AppStatus,
    pub detail: String,
}

/// Per-pass extras that do not fit the pass CSV contract.
#[derive(Debug, Clone, PartialEq)]
pub struct PassSummary {
    pub label: String,
    pub date: String,
    pub start_s: f64,
    pub duration_s: f64,
    pub traffic_s: f64,
    pub traffic_bytes: u64,
    pub abort: Option<String>,
    pub keys_match: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub master_seed: u64,
    pub passes: Vec<PassReportRow>,
    pub pass_summaries: Vec<PassSummary>,
    pub pools: Vec<PoolBalance>,
    pub apps: Vec<AppRecord>,
    pub events: Vec<Event>,
    pub store: KeyStore,
    pub clock: f64,
}

impl RunReport {
    pub fn warnings(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Warn).count()
    }

    pub fn app(&self, index: usize) -> Option<&AppRecord> {
        self.apps.iter().find(|a| a.index == index)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("scenario has {} fault(s)", .0.len())]
    Invalid(Vec<String>),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

pub fn balances(store: &KeyStore) -> Vec<PoolBalance> {
    store
        .pools()
        .map(|p| PoolBalance {
            holder: p.holder.clone(),
            peer: p.peer.clone(),
            deposited: p.total_deposited(),
            consumed: p.consumed_offset(),
            available: p.available(),
        })
        .collect()
}

struct PassRun {
    outcome: Result<PassOutcome, String>,
    duration_s: f64,
}

enum Action {
    Log(EventKind, String),
    Deposit { label: String, station: String, bits: BitString },
}

struct Sim<'a> {
    s: &'a Scenario,
    store: KeyStore,
    events: Vec<Event>,
    clock: f64,
    fiber_blocks: u64,
}

impl Sim<'_> {
    fn log(&mut self, kind: EventKind, text: String) {
        debug_assert!(self.clock >= self.events.last().map_or(f64::MIN, |e| e.time));
        self.events.push(Event {
            time: self.clock,
            kind,
            text,
        });
    }

    fn advance(&mut self, t: f64) {
        assert!(t >= self.clock, "event clock moved backwards: {t} < {}", self.clock);
        self.clock = t;
    }

    /// Tops up every fiber hop on `route` to at least `bits`, advancing the
    /// clock by the generation time of the largest deficit.
    fn fill_fiber(&mut self, route: &[&str], bits: u64) -> Result<(), KeyError> {
        let Some(chain) = &self.s.relays else { return Ok(()) };
        let mut deficits = Vec::new();
        for w in route.windows(2) {
            let Some(i) = chain.nodes.iter().position(|n| n == w[0]) else { continue };
            let j = chain.nodes.iter().position(|n| n == w[1]);
            if j != Some(i + 1) && (i == 0 || j != Some(i - 1)) {
                continue;
            }
            let start = self.store.aligned_offset(w[0], w[1]);
            let have = [(w[0], w[1]), (w[1], w[0])]
                .iter()
                .map(|&(h, p)| self.store.pool(h, p).map_or(0, |pl| pl.total_deposited().saturating_sub(start)))
                .min()
                .unwrap_or(0);
            if have < bits {
                deficits.push((w[0].to_string(), w[1].to_string(), bits - have));
            }
        }
        if deficits.is_empty() {
            return Ok(());
        }
        let worst = deficits.iter().map(|d| d.2).max().unwrap_or(0);
        let t = self.clock + worst as f64 / chain.per_hop_rate_bps;
        self.advance(t);
        for (a, b, n) in deficits {
            let mut rng = substream(self.s.master_seed, Purpose::Relay, self.fiber_blocks);
            self.fiber_blocks += 1;
            let id = format!("fiber-{a}-{b}-{}", self.fiber_blocks);
            self.store.deposit_pair(&a, &b, &id, BitString::random(n as usize, &mut rng), t)?;
            self.log(EventKind::Fiber, format!("{id} deposited {n} bits"));
        }
        Ok(())
    }

    fn run_item(&mut self, index: usize, item: &WorkItem) -> AppRecord {
        let mut rec = AppRecord {
            index,
            app: String::new(),
            endpoints: String::new(),
            time: self.clock,
            bits_requested: 0,
            bits_consumed: 0,
            status: AppStatus::Ok,
            detail: String::new(),
        };
        let result: Result<(), AppError> = match item {
            WorkItem::Establish { route, bits } => {
                let route: Vec<&str> = route.iter().map(String::as_str).collect();
                rec.app = "establish".into();
                rec.endpoints = route.join(">");
                rec.bits_requested = *bits;
                self.fill_fiber(&route, *bits)
                    .and_then(|_| {
                        rec.time = self.clock;
                        self.store.establish_e2e(&route, *bits, self.clock, Decoder::A)
                    })
                    .map(|e| {
                        rec.bits_consumed = bits * (route.len() as u64 - 1);
                        rec.detail = format!("{} agree={}", e.block.block_id, e.key_a == e.key_b);
                        if e.key_a != e.key_b {
                            rec.status = AppStatus::Failed;
                        }
                        self.log(
                            EventKind::E2e,
                            format!("{} {} bits over {} hops", e.block.block_id, bits, route.len() - 1),
                        );
                    })
                    .map_err(AppError::from)
            }
            WorkItem::Otp { from, to, bytes } => {
                rec.app = "otp".into();
                rec.endpoints = format!("{from}>{to}");
                rec.bits_requested = 8 * bytes;
                let mut rng = substream(self.s.master_seed, Purpose::App, index as u64);
                let msg: Vec<u8> = (0..*bytes).map(|_| rng.random()).collect();
                let t = self.clock;
                self.otp(from, to, &msg, t).map(|(bits, ok)| {
                    rec.bits_consumed = bits;
                    rec.detail = format!("roundtrip={ok}");
                    if !ok {
                        rec.status = AppStatus::Failed;
                    }
                    self.log(EventKind::Otp, format!("{from}->{to} {bytes} bytes, {bits} key bits"));
                })
            }
            WorkItem::Aes {
                a,
                b,
                duration_s,
                period_s,
                payload_bytes,
            } => {
                rec.app = "aes".into();
                rec.endpoints = format!("{a}<>{b}");
                let mut session = AesSession::new(&format!("aes-{index}"), *duration_s, *payload_bytes);
                session.refresh_period_s = *period_s;
                rec.bits_requested = 128 * crate::secure_apps::session_ticks(*duration_s, *period_s);
                let t = self.clock;
                self.aes(a, b, &session, t).map(|(bits, detail, done)| {
                    rec.bits_consumed = bits;
                    rec.detail = detail;
                    if !done {
                        rec.status = AppStatus::Insufficient;
                    }
                    self.log(EventKind::Aes, format!("{a}<>{b} {} bytes of key", bits / 8));
                    self.advance(t + duration_s);
                })
            }
        };
        if let Err(e) = result {
            rec.status = match e {
                AppError::Key(KeyError::InsufficientKey { .. }) => AppStatus::Insufficient,
                _ => AppStatus::Failed,
            };
            rec.detail = e.to_string();
            self.log(EventKind::Error, format!("workload[{index}] {}: {e}", rec.app));
        }
        rec
    }

    fn otp(&mut self, from: &str, to: &str, msg: &[u8], t: f64) -> Result<(u64, bool), AppError> {
        let env = otp_encrypt(msg, self.store.pool_mut(from, to)?, t)?;
        let back = otp_decrypt(&env, self.store.pool_mut(to, from)?, t)?;
        Ok((env.key_ref.bits, back == msg))
    }

    /// Both endpoints draw the same refresh keys from their views.
    fn aes(&mut self, a: &str, b: &str, session: &AesSession, t: f64) -> Result<(u64, String, bool), AppError> {
        let offset = self.store.aligned_offset(a, b);
        let pa = self.store.pool_mut(a, b)?;
        pa.skip_to(offset, t)?;
        let ra = aes_session_run(session, pa, &Aes128Cipher, t)?;
        let pb = self.store.pool_mut(b, a)?;
        pb.skip_to(offset, t)?;
        let rb = aes_session_run(session, pb, &Aes128Cipher, t)?;
        let agree = ra.keystream_digest == rb.keystream_digest && ra.refreshes == rb.refreshes;
        let detail = match ra.shortfall_at {
            None => format!("refreshes={} agree={agree}", ra.refreshes),
            Some(at) => format!("refreshes={} shortfall_at={at} agree={agree}", ra.refreshes),
        };
        Ok((ra.bits_consumed, detail, ra.completed() && agree))
    }
}

/// Runs passes, post-processing, deposits and the workload on one logical
/// clock. Pass Monte Carlo and distillation fan out per the scenario's
/// parallelism; everything that touches the key store is sequential.
pub fn run_scenario(s: &Scenario) -> Result<RunReport, RunError> {
    let faults = validate_scenario(s);
    if !faults.is_empty() {
        return Err(RunError::Invalid(faults));
    }
    let pm = s.pass_model;
    let epoch = s.passes.iter().filter_map(|p| parse_date(&p.date)).min();
    let starts: Vec<f64> = s
        .passes
        .iter()
        .map(|p| {
            let d = parse_date(&p.date).expect("validated");
            let days = epoch.map_or(0, |e| (d - e).num_days());
            days as f64 * 86_400.0 + pm.start_of_night_s
        })
        .collect();

    let runs: Vec<PassRun> = map_slice(&s.passes, pm.parallelism, |p| {
        let station = s.station(&p.station).expect("validated");
        let geom = match generate_pass(&s.orbit, station, p.max_elevation_deg, pm.sample_interval_s, pm.min_elevation_mask_deg) {
            Ok(g) => g,
            Err(e) => {
                return PassRun {
                    outcome: Err(e.to_string()),
                    duration_s: 0.0,
                }
            }
        };
        let duration_s = geom.covered_duration();
        let cfg = PassConfig {
            station: station.clone(),
            budget: s.link,
            source: s.source.clone(),
            receiver: s.receiver_for(station).expect("validated"),
            mode: pm.mode,
            parallelism: pm.parallelism,
        };
        let seed = derive_seed(s.master_seed, Purpose::Pass, p.seed);
        let outcome = run_pass(&geom, &cfg, seed)
            .map(|log| process_pass(&p.label, &log, &s.source, &s.post, seed))
            .map_err(|e| e.to_string());
        PassRun { outcome, duration_s }
    });

    // Schedule: (time, pass index, step, action)
    let mut schedule: Vec<(f64, usize, u8, Action)> = Vec::new();
    let mut rows = Vec::with_capacity(runs.len());
    let mut summaries = Vec::with_capacity(runs.len());
    for (i, (p, run)) in s.passes.iter().zip(runs).enumerate() {
        let start = starts[i];
        let end = start + run.duration_s;
        schedule.push((
            start,
            i,
            0,
            Action::Log(
                EventKind::Pass,
                format!(
                    "{} {} {} max_el={:.1} visible={:.0}s",
                    p.label, p.date, p.station, p.max_elevation_deg, run.duration_s
                ),
            ),
        ));
        let mut summary = PassSummary {
            label: p.label.clone(),
            date: p.date.clone(),
            start_s: start,
            duration_s: run.duration_s,
            traffic_s: 0.0,
            traffic_bytes: 0,
            abort: None,
            keys_match: true,
        };
        let out = match run.outcome {
            Ok(o) => o,
            Err(e) => {
                schedule.push((end, i, 1, Action::Log(EventKind::Abort, format!("{} {e}", p.label))));
                summary.abort = Some(e);
                summaries.push(summary);
                continue;
            }
        };
        let up = out.traffic.uplink_bits.div_ceil(8);
        let down = out.traffic.downlink_bits.div_ceil(8);
        let traffic_s = classical_transfer_time(up, &s.rf, Direction::Uplink)
            + classical_transfer_time(down, &s.rf, Direction::Downlink);
        summary.traffic_s = traffic_s;
        summary.traffic_bytes = up + down;
        schedule.push((
            end,
            i,
            1,
            Action::Log(
                EventKind::Post,
                format!(
                    "{} sifted={} qber={:.4} up={}B down={}B rf={:.3}s",
                    p.label, out.row.n_sifted, out.row.qber, up, down, traffic_s
                ),
            ),
        ));
        if traffic_s > pm.contact_budget_s {
            schedule.push((
                end,
                i,
                2,
                Action::Log(
                    EventKind::Warn,
                    format!(
                        "{} classical traffic needs {traffic_s:.3}s, contact budget is {:.3}s",
                        p.label, pm.contact_budget_s
                    ),
                ),
            ));
        }
        let done = end + traffic_s;
        match (&out.result, &out.abort) {
            (Some(r), _) if r.final_length > 0 => schedule.push((
                done,
                i,
                3,
                Action::Deposit {
                    label: p.label.clone(),
                    station: p.station.clone(),
                    bits: r.key.clone(),
                },
            )),
            (_, abort) => {
                let why = abort.clone().unwrap_or_else(|| "no extractable key".into());
                summary.abort = Some(why.clone());
                schedule.push((done, i, 3, Action::Log(EventKind::Abort, format!("{} {why}", p.label))));
            }
        }
        rows.push(out.row);
        summaries.push(summary);
    }
    schedule.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut sim = Sim {
        s,
        store: KeyStore::new(),
        events: Vec::new(),
        clock: 0.0,
        fiber_blocks: 0,
    };
    for (t, _, _, action) in schedule {
        sim.advance(t);
        match action {
            Action::Log(kind, text) => sim.log(kind, text),
            Action::Deposit { label, station, bits } => {
                let n = bits.len();
                let id = format!("qkd-{label}");
                sim.store
                    .deposit_pair(&s.satellite, &station, &id, bits, t)
                    .map_err(|e| RunError::Runtime(e.to_string()))?;
                sim.log(EventKind::Deposit, format!("{id} {n} bits into {}", pool_label(&s.satellite, &station)));
            }
        }
    }

    let mut apps = Vec::with_capacity(s.workload.len());
    for (i, item) in s.workload.iter().enumerate() {
        let t = sim.clock + 1.0;
        sim.advance(t);
        apps.push(sim.run_item(i, item));
    }
    sim.store.audit().map_err(|f| RunError::Runtime(f.join("; ")))?;

    Ok(RunReport {
        scenario: s.name.clone(),
        master_seed: s.master_seed,
        passes: rows,
        pass_summaries: summaries,
        pools: balances(&sim.store),
        apps,
        events: sim.events,
        store: sim.store,
        clock: sim.clock,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::scenario::{FiberChain, PassSpec};
    use crate::netsim::{load_store, passes_csv, pools_csv, write_run_dir};
    use crate::orbit_link::GroundStation;
    use crate::par::Parallelism;

    /// A short, bright pass: 1 MHz source, no fixed loss.
    fn small() -> Scenario {
        let mut s = Scenario::from_toml(
            r#"
name = "small"
master_seed = 3
[source]
pulse_rate_hz = 1e6
classes = [
    { kind = "signal", mean_photon_number = 0.8, emission_probability = 0.5 },
    { kind = "decoy", mean_photon_number = 0.1, emission_probability = 0.25 },
    { kind = "vacuum", mean_photon_number = 0.0, emission_probability = 0.25 },
]
[link]
divergence_half_angle = 10e-6
pointing_jitter = 1e-6
atmospheric_loss_zenith_db = 0.5
fixed_system_loss_db = 0.0
background_click_rate = 75.0
[[stations]]
id = "xinglong"
latitude_deg = 40.4
longitude_deg = 117.6
altitude_m = 890.0
"#,
        )
        .unwrap();
        s.stations.push(GroundStation::new("graz", 47.07, 15.49, 490.0));
        for (i, st) in ["xinglong", "graz"].iter().enumerate() {
            s.passes.push(PassSpec {
                label: format!("{st}-1"),
                date: format!("2017-06-0{}", i + 1),
                station: st.to_string(),
                max_elevation_deg: 60.0,
                seed: i as u64 + 1,
            });
        }
        s
    }

    #[test]
    fn one_pass_empty_workload() {
        let mut s = small();
        s.passes.truncate(1);
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.passes.len(), 1);
        assert!(r.passes[0].final_bits > 0, "{:?}", r.passes[0]);
        let b = r.store.pool("micius", "xinglong").unwrap();
        assert_eq!(b.available(), r.passes[0].final_bits);
        assert!(r.pools.iter().all(|p| p.consumed == 0));
        assert!(r.apps.is_empty());
    }

    #[test]
    fn shortfall_is_recorded_and_the_run_continues() {
        let mut s = small();
        s.workload = vec![
            WorkItem::Establish {
                route: vec!["xinglong".into(), "micius".into(), "graz".into()],
                bits: 100_000_000,
            },
            WorkItem::Establish {
                route: vec!["xinglong".into(), "micius".into(), "graz".into()],
                bits: 1000,
            },
            WorkItem::Otp {
                from: "graz".into(),
                to: "xinglong".into(),
                bytes: 100,
            },
        ];
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.apps[0].status, AppStatus::Insufficient);
        assert_eq!(r.apps[0].bits_consumed, 0);
        assert_eq!(r.apps[1].status, AppStatus::Ok);
        assert_eq!(r.apps[2].status, AppStatus::Ok);
        assert_eq!(r.store.available("xinglong", "graz"), 200);
        assert!(r.events.iter().any(|e| e.kind == EventKind::Error));
    }

    #[test]
    fn balances_cross_foot_and_clock_is_monotone() {
        let mut s = small();
        s.relays = Some(FiberChain {
            nodes: vec!["beijing".into(), "r1".into(), "xinglong".into()],
            per_hop_rate_bps: 100.0,
        });
        s.workload = vec![
            WorkItem::Establish {
                route: vec!["xinglong".into(), "micius".into(), "graz".into()],
                bits: 2000,
            },
            WorkItem::Establish {
                route: vec!["beijing".into(), "r1".into(), "xinglong".into(), "graz".into()],
                bits: 1000,
            },
            WorkItem::Aes {
                a: "beijing".into(),
                b: "graz".into(),
                duration_s: 7.0,
                period_s: 1.0,
                payload_bytes: 1,
            },
        ];
        let r = run_scenario(&s).unwrap();
        assert!(r.apps.iter().all(|a| a.status == AppStatus::Ok), "{:?}", r.apps);
        for p in &r.pools {
            assert_eq!(p.deposited - p.consumed, p.available);
        }
        assert!(r.events.windows(2).all(|w| w[0].time <= w[1].time));
        // 1000 fiber bits at 100 b/s delay the relayed establishment by 10 s.
        assert!((r.apps[1].time - r.apps[0].time - 11.0).abs() < 1e-9, "{:?}", r.apps);
        assert_eq!(r.store.available("beijing", "graz"), 1000 - 7 * 128);
    }

    #[test]
    fn contact_budget_overflow_warns() {
        let mut s = small();
        s.passes.truncate(1);
        s.pass_model.contact_budget_s = 1e-3;
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.warnings(), 1);
        assert!(r.passes[0].final_bits > 0);
        let sum = &r.pass_summaries[0];
        let expect = sum.traffic_bytes as f64 * 8.0 / 4e6;
        assert!(sum.traffic_s >= expect, "transfer shorter than the downlink alone");
    }

    #[test]
    fn invalid_scenario_lists_faults() {
        let mut s = small();
        s.passes[0].station = "lhasa".into();
        s.rf.uplink_bps = -1.0;
        match run_scenario(&s) {
            Err(RunError::Invalid(f)) => assert_eq!(f.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reports_identical_across_parallelism() {
        let mut s = small();
        s.workload.push(WorkItem::Establish {
            route: vec!["xinglong".into(), "micius".into(), "graz".into()],
            bits: 500,
        });
        s.pass_model.parallelism = Parallelism::Sequential;
        let a = run_scenario(&s).unwrap();
        s.pass_model.parallelism = Parallelism::Rayon;
        let b = run_scenario(&s).unwrap();
        assert_eq!(passes_csv(&a), passes_csv(&b));
        assert_eq!(pools_csv(&a.pools), pools_csv(&b.pools));
        assert_eq!(a.store, b.store);
    }

    #[test]
    fn adding_a_pass_leaves_earlier_passes_alone() {
        let mut s = small();
        s.passes.truncate(1);
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&small()).unwrap();
        assert_eq!(a.passes[0], b.passes[0]);
    }

    #[test]
    fn run_dir_round_trips_the_store() {
        let mut s = small();
        s.workload.push(WorkItem::Establish {
            route: vec!["xinglong".into(), "micius".into(), "graz".into()],
            bits: 700,
        });
        s.workload.push(WorkItem::Otp {
            from: "xinglong".into(),
            to: "graz".into(),
            bytes: 10,
        });
        let r = run_scenario(&s).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_run_dir(&r, dir.path()).unwrap();
        let (state, store) = load_store(dir.path()).unwrap();
        assert_eq!(state.clock, r.clock);
        assert_eq!(store.e2e_counter(), 1);
        for p in r.store.pools() {
            let q = store.pool(&p.holder, &p.peer).unwrap();
            assert_eq!(q.consumed_offset(), p.consumed_offset());
            assert_eq!(q.events(), p.events());
            for (x, y) in p.blocks().iter().zip(q.blocks()) {
                assert_eq!((x.erased, x.len(), &x.block_id), (y.erased, y.len(), &y.block_id));
                if !x.erased {
                    assert_eq!(x.bits, y.bits);
                }
            }
        }
        let key = dir.path().join("keys").join("e2e-xinglong-graz-1.qkdk");
        let mut bytes = std::fs::read(&key).unwrap();
        bytes[40] ^= 1;
        std::fs::write(&key, bytes).unwrap();
        assert!(load_store(dir.path()).is_err());
    }
}
