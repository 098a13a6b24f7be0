use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    #[default]
    Rf,
    Fiber,
    Internet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Ground to satellite.
    Uplink,
    /// Satellite to ground.
    Downlink,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalChannel {
    pub kind: ChannelKind,
    pub uplink_bps: f64,
    pub downlink_bps: f64,
    pub latency_s: f64,
}

impl Default for ClassicalChannel {
    fn default() -> Self {
        Self {
            kind: ChannelKind::Rf,
            uplink_bps: 1e6,
            downlink_bps: 4e6,
            latency_s: 0.0,
        }
    }
}

impl ClassicalChannel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.uplink_bps > 0.0 && self.downlink_bps > 0.0) {
            return Err("channel rates must be > 0".into());
        }
        if !(self.latency_s >= 0.0) {
            return Err("channel latency must be >= 0".into());
        }
        Ok(())
    }

    pub fn rate(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Uplink => self.uplink_bps,
            Direction::Downlink => self.downlink_bps,
        }
    }
}

/// `bytes · 8 / rate + latency`.
pub fn classical_transfer_time(bytes: u64, channel: &ClassicalChannel, dir: Direction) -> f64 {
    bytes as f64 * 8.0 / channel.rate(dir) + channel.latency_s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let rf = ClassicalChannel {
            latency_s: 0.25,
            ..Default::default()
        };
        assert_eq!(classical_transfer_time(0, &rf, Direction::Downlink), 0.25);
        assert_eq!(classical_transfer_time(1_000_000, &rf, Direction::Downlink), 2.25);
        assert_eq!(classical_transfer_time(1_000_000, &rf, Direction::Uplink), 8.25);
    }

    #[test]
    fn rates_must_be_positive() {
        let mut c = ClassicalChannel::default();
        assert!(c.validate().is_ok());
        c.uplink_bps = 0.0;
        assert!(c.validate().is_err());
    }
}
