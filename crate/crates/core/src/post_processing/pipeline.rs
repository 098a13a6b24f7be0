use super::{
    decoy_bounds, estimate_qber, final_key_length, poly_hash, privacy_amplify, reconcile, sift, toeplitz_seed_len,
    CascadeParams, DecoyEstimate, PostError, BB84_QBER_THRESHOLD,
};
use crate::bits::BitString;
use crate::quantum_layer::{PassLog, PulseClassKind, SourceConfig};
use crate::rng::{substream, Purpose};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const PASS_CSV_HEADER: &str = "pass_id,station,n_sent,n_sifted,qber,y1_lower,e1_upper,leak_ec,final_bits";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostParams {
    pub sample_fraction: f64,
    pub cascade_rounds: usize,
    pub cascade_block_factor: f64,
    /// Per-bit safety term subtracted from the key length.
    pub margin: f64,
    /// Lower clamp on the estimate handed to Cascade, so a zero-error
    /// sample still yields a finite block size.
    pub qber_floor: f64,
}

impl Default for PostParams {
    fn default() -> Self {
        Self {
            sample_fraction: 0.1,
            cascade_rounds: 4,
            cascade_block_factor: 0.73,
            margin: 0.0,
            qber_floor: 1e-3,
        }
    }
}

impl PostParams {
    pub fn cascade(&self) -> CascadeParams {
        CascadeParams {
            rounds: self.cascade_rounds,
            top_block_factor: self.cascade_block_factor,
        }
    }
}

/// One row of `passes.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassReportRow {
    pub pass_id: String,
    pub station: String,
    pub n_sent: u64,
    pub n_sifted: u64,
    pub qber: f64,
    pub y1_lower: f64,
    pub e1_upper: f64,
    pub leak_ec: u64,
    pub final_bits: u64,
}

impl PassReportRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6e},{:.6},{},{}",
            self.pass_id,
            self.station,
            self.n_sent,
            self.n_sifted,
            self.qber,
            self.y1_lower,
            self.e1_upper,
            self.leak_ec,
            self.final_bits
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalKeyResult {
    pub key: BitString,
    /// The receiver's copy, kept so callers can audit agreement.
    pub key_bob: BitString,
    pub leak_ec: u64,
    pub pa_seed: BitString,
    pub final_length: u64,
}

/// Bits exchanged over the classical channel while distilling one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassicalTraffic {
    /// Receiver to satellite: basis choice of every clicked slot.
    pub uplink_bits: u64,
    /// Satellite to receiver: sift flags, sample, parities, hash, seed.
    pub downlink_bits: u64,
}

impl ClassicalTraffic {
    pub fn total_bytes(&self) -> u64 {
        (self.uplink_bits + self.downlink_bits).div_ceil(8)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassOutcome {
    pub row: PassReportRow,
    pub decoy: Option<DecoyEstimate>,
    /// Present when the pass produced key; Alice's and Bob's copies were
    /// verified equal.
    pub result: Option<FinalKeyResult>,
    pub abort: Option<String>,
    pub traffic: ClassicalTraffic,
    pub n_disclosed: u64,
}

/// Runs the full distillation chain on one pass. All randomness comes from
/// substreams of `seed`. Any failure yields an outcome with `final_bits = 0`
/// and an abort reason, never diverging keys.
pub fn process_pass(
    pass_id: &str,
    log: &PassLog,
    source: &SourceConfig,
    params: &PostParams,
    seed: u64,
) -> PassOutcome {
    let mut row = PassReportRow {
        pass_id: pass_id.to_string(),
        station: log.station_id.clone(),
        n_sent: log.total_pulses,
        n_sifted: 0,
        qber: 0.0,
        y1_lower: 0.0,
        e1_upper: 0.5,
        leak_ec: 0,
        final_bits: 0,
    };
    let mut traffic = ClassicalTraffic {
        uplink_bits: log.receiver.len() as u64,
        downlink_bits: log.receiver.len() as u64,
    };
    let abort = |row: PassReportRow, traffic, decoy, n_disclosed, why: String| PassOutcome {
        row,
        decoy,
        result: None,
        abort: Some(why),
        traffic,
        n_disclosed,
    };

    let sifted = match sift(pass_id, &log.sender, &log.receiver, log.sent_per_class) {
        Ok(s) => s,
        Err(e) => return abort(row, traffic, None, 0, e.to_string()),
    };
    row.n_sifted = sifted.len() as u64;
    if sifted.len() < 2 {
        return abort(row, traffic, None, 0, "sifted key too short".into());
    }

    let mut rng = substream(seed, Purpose::QberSample, 0);
    let (est, remaining) = match estimate_qber(&sifted, params.sample_fraction, &mut rng) {
        Ok(v) => v,
        Err(e) => return abort(row, traffic, None, 0, e.to_string()),
    };
    row.qber = est.qber;
    let sample_bits = est.sample_size as u64;
    traffic.downlink_bits += 2 * sample_bits;

    let decoy = source
        .validate_decoy()
        .map_err(|e| PostError::DecoyInput(e.to_string()))
        .and_then(|_| {
            decoy_bounds(
                &remaining.class_tallies,
                source.mean(PulseClassKind::Signal),
                source.mean(PulseClassKind::Decoy),
            )
        });
    let decoy = match decoy {
        Ok(d) => d,
        Err(e) => return abort(row, traffic, None, sample_bits, e.to_string()),
    };
    row.y1_lower = decoy.y1_lower;
    row.e1_upper = decoy.e1_upper;

    if est.qber > BB84_QBER_THRESHOLD {
        return abort(row, traffic, Some(decoy), sample_bits, format!("qber {:.4} above threshold", est.qber));
    }

    let mut rng = substream(seed, Purpose::Reconcile, 0);
    let q = est.qber.max(params.qber_floor);
    let rec = match reconcile(&remaining.bits_alice, &remaining.bits_bob, q, &params.cascade(), &mut rng) {
        Ok(r) => r,
        Err(e) => return abort(row, traffic, Some(decoy), sample_bits, e.to_string()),
    };
    row.leak_ec = rec.leak_ec;
    traffic.downlink_bits += rec.leak_ec + rec.verify_bits;
    traffic.uplink_bits += rec.leak_ec;
    let n_disclosed = sample_bits + rec.leak_ec + rec.verify_bits;

    let n = remaining.len() as u64;
    let final_len = final_key_length(n, est.qber, &decoy, rec.leak_ec + rec.verify_bits, params.margin) as usize;
    row.final_bits = final_len as u64;

    let mut rng = substream(seed, Purpose::PrivacyAmp, 0);
    let pa_seed = if final_len > 0 {
        BitString::random(toeplitz_seed_len(n as usize, final_len), &mut rng)
    } else {
        BitString::new()
    };
    traffic.downlink_bits += pa_seed.len() as u64;

    let amplify = |bits: &BitString| privacy_amplify(bits, final_len, &pa_seed);
    let (key_a, key_b) = match (amplify(&remaining.bits_alice), amplify(&rec.corrected)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return abort(row, traffic, Some(decoy), n_disclosed, e.to_string()),
    };
    let point: u64 = rng.random();
    if poly_hash(&key_a, point) != poly_hash(&key_b, point) {
        row.final_bits = 0;
        return abort(row, traffic, Some(decoy), n_disclosed, "final keys differ".into());
    }

    PassOutcome {
        row,
        decoy: Some(decoy),
        result: Some(FinalKeyResult {
            key: key_a,
            key_bob: key_b,
            leak_ec: rec.leak_ec,
            pa_seed,
            final_length: final_len as u64,
        }),
        abort: None,
        traffic,
        n_disclosed,
    }
}
