use super::channel::ClassicalChannel;
use crate::orbit_link::{GroundStation, LinkBudget, SatelliteOrbit};
use crate::par::Parallelism;
use crate::post_processing::PostParams;
use crate::quantum_layer::{ReceiverModel, SimMode, SourceConfig};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub master_seed: u64,
    #[serde(default = "default_satellite")]
    pub satellite: String,
    #[serde(default)]
    pub orbit: SatelliteOrbit,
    #[serde(default)]
    pub link: LinkBudget,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub receiver: ReceiverSpec,
    #[serde(default)]
    pub pass_model: PassModel,
    #[serde(default)]
    pub post: PostParams,
    #[serde(default)]
    pub rf: ClassicalChannel,
    pub stations: Vec<GroundStation>,
    #[serde(default)]
    pub passes: Vec<PassSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relays: Option<FiberChain>,
    #[serde(default)]
    pub workload: Vec<WorkItem>,
}

fn default_satellite() -> String {
    "micius".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverSpec {
    pub polarization_error: f64,
    /// Detector gate, seconds; dark and background rates are integrated over it.
    pub gate_window_s: f64,
}

impl Default for ReceiverSpec {
    fn default() -> Self {
        Self {
            polarization_error: 0.01,
            gate_window_s: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassModel {
    pub sample_interval_s: f64,
    pub min_elevation_mask_deg: f64,
    pub mode: SimMode,
    pub parallelism: Parallelism,
    /// Seconds after midnight of the pass date at which the pass begins.
    pub start_of_night_s: f64,
    /// RF time available after a pass for its post-processing traffic.
    pub contact_budget_s: f64,
}

impl Default for PassModel {
    fn default() -> Self {
        Self {
            sample_interval_s: 1.0,
            min_elevation_mask_deg: 10.0,
            mode: SimMode::Aggregated,
            parallelism: Parallelism::Rayon,
            start_of_night_s: 3000.0,
            contact_budget_s: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassSpec {
    pub label: String,
    /// `YYYY-MM-DD`; only orders passes on the clock.
    pub date: String,
    pub station: String,
    pub max_elevation_deg: f64,
    pub seed: u64,
}

/// Terrestrial trusted-node chain; consecutive nodes share fiber QKD links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberChain {
    pub nodes: Vec<String>,
    /// Final key rate of every hop, bits per second.
    pub per_hop_rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WorkItem {
    Establish { route: Vec<String>, bits: u64 },
    Otp { from: String, to: String, bytes: u64 },
    Aes { a: String, b: String, duration_s: f64, period_s: f64, payload_bytes: u64 },
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario is always representable as TOML")
    }

    pub fn station(&self, id: &str) -> Option<&GroundStation> {
        self.stations.iter().find(|s| s.id == id)
    }

    pub fn receiver_for(&self, station: &GroundStation) -> Result<ReceiverModel, String> {
        ReceiverModel::from_station(station, &self.link, self.receiver.gate_window_s, self.receiver.polarization_error)
            .map_err(|e| e.to_string())
    }

    /// Every node a workload may name.
    pub fn nodes(&self) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self.stations.iter().map(|s| s.id.as_str()).collect();
        out.insert(&self.satellite);
        if let Some(r) = &self.relays {
            out.extend(r.nodes.iter().map(String::as_str));
        }
        out
    }
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, DATE_FORMAT).ok()
}

/// Structural and referential checks. An empty list means the scenario can run.
pub fn validate_scenario(s: &Scenario) -> Vec<String> {
    let mut faults = Vec::new();
    if s.stations.is_empty() {
        faults.push("no stations defined".to_string());
    }
    let mut ids = BTreeSet::new();
    for st in &s.stations {
        if !ids.insert(st.id.as_str()) {
            faults.push(format!("duplicate station id '{}'", st.id));
        }
        if let Err(e) = st.validate() {
            faults.push(e.to_string());
        }
        if let Err(e) = s.receiver_for(st) {
            faults.push(format!("station '{}': {e}", st.id));
        }
    }
    if ids.contains(s.satellite.as_str()) {
        faults.push(format!("satellite id '{}' collides with a station", s.satellite));
    }
    if let Err(e) = s.orbit.validate() {
        faults.push(e.to_string());
    }
    if let Err(e) = s.link.validate() {
        faults.push(e.to_string());
    }
    if let Err(e) = s.source.validate().and_then(|_| s.source.validate_decoy()) {
        faults.push(format!("source: {e}"));
    }
    faults.extend(s.rf.validate().err());

    let pm = &s.pass_model;
    if !(pm.sample_interval_s > 0.0) {
        faults.push("pass_model.sample_interval_s must be > 0".into());
    }
    if !(pm.min_elevation_mask_deg > 0.0 && pm.min_elevation_mask_deg < 90.0) {
        faults.push("pass_model.min_elevation_mask_deg must lie in (0, 90)".into());
    }
    if !(pm.start_of_night_s >= 0.0 && pm.start_of_night_s < 86_400.0) {
        faults.push("pass_model.start_of_night_s must lie in [0, 86400)".into());
    }
    if !(pm.contact_budget_s >= 0.0) {
        faults.push("pass_model.contact_budget_s must be >= 0".into());
    }

    let p = &s.post;
    if !(p.sample_fraction > 0.0 && p.sample_fraction < 1.0) {
        faults.push("post.sample_fraction must lie in (0, 1)".into());
    }
    if p.cascade_rounds == 0 || !(p.cascade_block_factor > 0.0) {
        faults.push("post: cascade needs at least one round and a positive block factor".into());
    }
    if !(p.margin >= 0.0) || !(p.qber_floor > 0.0 && p.qber_floor < 0.5) {
        faults.push("post: margin must be >= 0 and qber_floor in (0, 0.5)".into());
    }

    let mut labels = BTreeSet::new();
    for ps in &s.passes {
        if !labels.insert(ps.label.as_str()) {
            faults.push(format!("duplicate pass label '{}'", ps.label));
        }
        if !ids.contains(ps.station.as_str()) {
            faults.push(format!("pass '{}': unknown station '{}'", ps.label, ps.station));
        }
        if parse_date(&ps.date).is_none() {
            faults.push(format!("pass '{}': date '{}' is not YYYY-MM-DD", ps.label, ps.date));
        }
        if !(ps.max_elevation_deg >= pm.min_elevation_mask_deg && ps.max_elevation_deg <= 90.0) {
            faults.push(format!(
                "pass '{}': max elevation {} outside [{}, 90]",
                ps.label, ps.max_elevation_deg, pm.min_elevation_mask_deg
            ));
        }
    }

    if let Some(r) = &s.relays {
        if r.nodes.len() < 2 {
            faults.push("relays: chain needs at least two nodes".into());
        }
        let mut seen = BTreeSet::new();
        for n in &r.nodes {
            if !seen.insert(n.as_str()) {
                faults.push(format!("relays: node '{n}' appears twice"));
            }
            if n == &s.satellite {
                faults.push(format!("relays: node '{n}' is the satellite"));
            }
        }
        if !(r.per_hop_rate_bps > 0.0) {
            faults.push("relays.per_hop_rate_bps must be > 0".into());
        }
    }

    let nodes = s.nodes();
    let known = |n: &str, faults: &mut Vec<String>, i: usize| {
        if !nodes.contains(n) {
            faults.push(format!("workload[{i}]: unknown node '{n}'"));
        }
    };
    for (i, w) in s.workload.iter().enumerate() {
        match w {
            WorkItem::Establish { route, bits } => {
                if route.len() < 2 {
                    faults.push(format!("workload[{i}]: route needs at least two nodes"));
                }
                if route.windows(2).any(|w| w[0] == w[1]) {
                    faults.push(format!("workload[{i}]: route repeats a node on adjacent hops"));
                }
                for n in route {
                    known(n, &mut faults, i);
                }
                if *bits == 0 {
                    faults.push(format!("workload[{i}]: bits must be > 0"));
                }
            }
            WorkItem::Otp { from, to, .. } => {
                known(from, &mut faults, i);
                known(to, &mut faults, i);
                if from == to {
                    faults.push(format!("workload[{i}]: otp endpoints are equal"));
                }
            }
            WorkItem::Aes { a, b, duration_s, period_s, .. } => {
                known(a, &mut faults, i);
                known(b, &mut faults, i);
                if a == b {
                    faults.push(format!("workload[{i}]: aes endpoints are equal"));
                }
                if !(*period_s > 0.0) || !(*duration_s >= 0.0) {
                    faults.push(format!("workload[{i}]: aes needs period > 0 and duration >= 0"));
                }
            }
        }
    }
    faults
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
name = "mini"
master_seed = 1

[[stations]]
id = "xinglong"
latitude_deg = 40.396
longitude_deg = 117.577
altitude_m = 890.0

[[passes]]
label = "x1"
date = "2017-06-04"
station = "xinglong"
max_elevation_deg = 60.0
seed = 1
"#;

    #[test]
    fn minimal_parses_with_defaults() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.satellite, "micius");
        assert_eq!(s.source, SourceConfig::default());
        assert_eq!(s.rf.uplink_bps, 1e6);
        assert!(validate_scenario(&s).is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("seed = 1\n", "seed = 1\ncolour = \"red\"\n");
        assert!(Scenario::from_toml(&bad).is_err());
        let bad = format!("{MINIMAL}\n[[workload]]\nkind = \"otp\"\nfrom = \"a\"\nto = \"b\"\nbytes = 1\nextra = 2\n");
        assert!(Scenario::from_toml(&bad).is_err());
    }

    #[test]
    fn unknown_station_is_one_fault() {
        let s = Scenario::from_toml(&MINIMAL.replace("station = \"xinglong\"", "station = \"lhasa\"")).unwrap();
        let f = validate_scenario(&s);
        assert_eq!(f.len(), 1, "{f:?}");
        assert!(f[0].contains("lhasa"));
    }

    #[test]
    fn emission_probabilities_must_sum_to_one() {
        let mut s = Scenario::from_toml(MINIMAL).unwrap();
        s.source.classes[2].emission_probability = 0.15;
        let f = validate_scenario(&s);
        assert_eq!(f.len(), 1, "{f:?}");
        assert!(f[0].starts_with("source"));
    }

    #[test]
    fn every_fault_is_listed() {
        let mut s = Scenario::from_toml(MINIMAL).unwrap();
        s.passes[0].date = "June 4".into();
        s.passes[0].max_elevation_deg = 95.0;
        s.rf.downlink_bps = 0.0;
        s.workload.push(WorkItem::Otp {
            from: "xinglong".into(),
            to: "graz".into(),
            bytes: 1,
        });
        assert_eq!(validate_scenario(&s).len(), 4);
    }

    #[test]
    fn toml_round_trip() {
        let mut s = Scenario::from_toml(MINIMAL).unwrap();
        s.relays = Some(FiberChain {
            nodes: vec!["beijing".into(), "xinglong".into()],
            per_hop_rate_bps: 1000.0,
        });
        s.workload = vec![
            WorkItem::Establish {
                route: vec!["beijing".into(), "xinglong".into()],
                bits: 64,
            },
            WorkItem::Aes {
                a: "beijing".into(),
                b: "xinglong".into(),
                duration_s: 10.0,
                period_s: 1.0,
                payload_bytes: 5,
            },
        ];
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }
}
