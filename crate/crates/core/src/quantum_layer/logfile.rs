//! Debug exports of a pass.
//!
//! Binary per-pulse log: a flat sequence of 11-byte little-endian records
//!
//! | bytes | field                                                   |
//! |-------|---------------------------------------------------------|
//! | 0..8  | pulse index, u64                                        |
//! | 8     | class: 0 signal, 1 decoy, 2 vacuum                      |
//! | 9     | polarization: 0 H, 1 V, 2 D, 3 A                        |
//! | 10    | clicks: bits 0..3 = H, V, D, A; bit 4 = diagonal basis  |
//!
//! Photon numbers are not exported.

use super::{Basis, ClickSet, DetectionRecord, PassLog, Polarization, PulseClassKind, QuantumError, SliceTally};
use std::fmt::Write as _;
use std::io::{self, Read, Write};

pub const LOG_RECORD_BYTES: usize = 11;
const DIAGONAL_FLAG: u8 = 0x10;

pub fn write_pulse_log<W: Write>(log: &PassLog, mut out: W) -> io::Result<()> {
    for (s, r) in log.sender.iter().zip(&log.receiver) {
        let mut rec = [0u8; LOG_RECORD_BYTES];
        rec[..8].copy_from_slice(&s.index.to_le_bytes());
        rec[8] = s.class.index() as u8;
        rec[9] = s.polarization.index();
        rec[10] = r.clicks.bits() | if r.measured_basis == Basis::Diagonal { DIAGONAL_FLAG } else { 0 };
        out.write_all(&rec)?;
    }
    Ok(())
}

/// Parses a binary log into `(class, polarization, detection)` triples.
pub fn read_pulse_log<R: Read>(
    mut input: R,
) -> Result<Vec<(PulseClassKind, Polarization, DetectionRecord)>, QuantumError> {
    let mut buf = Vec::new();
    input
        .read_to_end(&mut buf)
        .map_err(|e| QuantumError::MalformedLog(e.to_string()))?;
    if buf.len() % LOG_RECORD_BYTES != 0 {
        return Err(QuantumError::MalformedLog(format!(
            "length {} is not a multiple of {LOG_RECORD_BYTES}",
            buf.len()
        )));
    }
    buf.chunks_exact(LOG_RECORD_BYTES)
        .map(|rec| {
            let index = u64::from_le_bytes(rec[..8].try_into().unwrap());
            let class = PulseClassKind::from_index(rec[8])
                .ok_or_else(|| QuantumError::MalformedLog(format!("bad class byte {}", rec[8])))?;
            let pol = Polarization::from_index(rec[9])
                .ok_or_else(|| QuantumError::MalformedLog(format!("bad polarization byte {}", rec[9])))?;
            if rec[10] & !(DIAGONAL_FLAG | 0x0F) != 0 {
                return Err(QuantumError::MalformedLog(format!("bad clicks byte {}", rec[10])));
            }
            let basis = if rec[10] & DIAGONAL_FLAG != 0 {
                Basis::Diagonal
            } else {
                Basis::Rectilinear
            };
            Ok((class, pol, DetectionRecord::new(index, ClickSet::from_bits(rec[10]), basis)))
        })
        .collect()
}

/// Per-slice tallies as CSV.
pub fn slice_tallies_csv(slices: &[SliceTally]) -> String {
    let mut out = String::from(
        "slice,t_s,transmittance,pulses,sent_signal,sent_decoy,sent_vacuum,clicked_signal,clicked_decoy,clicked_vacuum,double_clicks\n",
    );
    for s in slices {
        let _ = writeln!(
            out,
            "{},{},{:.6e},{},{},{},{},{},{},{},{}",
            s.slice,
            s.t_s,
            s.transmittance,
            s.pulses,
            s.sent[0],
            s.sent[1],
            s.sent[2],
            s.clicked[0],
            s.clicked[1],
            s.clicked[2],
            s.double_clicks
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit_link::{GroundStation, LinkBudget, PassGeometry, PassSample};
    use crate::quantum_layer::{run_pass, PassConfig, ReceiverModel, SimMode, SourceConfig};
    use crate::Parallelism;

    #[test]
    fn log_roundtrip_and_csv() {
        let mut source = SourceConfig::default();
        source.pulse_rate_hz = 1e4;
        let geom = PassGeometry::new(
            "s",
            vec![PassSample {
                t_s: 0.0,
                range_m: 1e3,
                elevation_deg: 80.0,
            }],
            10.0,
            1.0,
        )
        .unwrap();
        let cfg = PassConfig {
            station: GroundStation::new("s", 0.0, 0.0, 0.0),
            budget: LinkBudget::lossless(10e-6),
            source,
            receiver: ReceiverModel::new(0.01, 0.02).unwrap(),
            mode: SimMode::PerPulse,
            parallelism: Parallelism::Sequential,
        };
        let log = run_pass(&geom, &cfg, 4).unwrap();
        let mut bytes = Vec::new();
        write_pulse_log(&log, &mut bytes).unwrap();
        assert_eq!(bytes.len(), log.sender.len() * LOG_RECORD_BYTES);
        let back = read_pulse_log(&bytes[..]).unwrap();
        for ((class, pol, det), (s, r)) in back.iter().zip(log.sender.iter().zip(&log.receiver)) {
            assert_eq!((*class, *pol), (s.class, s.polarization));
            assert_eq!(det, r);
        }
        assert!(read_pulse_log(&bytes[..5]).is_err());
        let csv = slice_tallies_csv(&log.slices);
        assert_eq!(csv.lines().count(), 2);
    }
}
