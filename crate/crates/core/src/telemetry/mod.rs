//! Wire link between a sole and the host: frame codec, device-side emitter
//! and host-side collector.

pub mod codec;
pub mod collector;
pub mod emitter;

use chrono::{DateTime, SecondsFormat, Utc};

use crate::acquisition::DividerConfig;

pub use codec::{crc16_ccitt_false, FrameDecoder, FrameError, TelemetryFrame, FRAME_LEN};
pub use collector::{CollectedSample, Collector, CollectorConfig, CollectorStats, Pipeline, Sink};
pub use emitter::{emit, Backoff, Connector, EmitError, EmitStats, EmitterConfig, Pacing, TcpConnector};

pub const DEFAULT_PORT: u16 = 7332;
/// Environment variable holding the collector endpoint.
pub const ADDR_ENV: &str = "SOLESENSE_ADDR";

/// Endpoint from `SOLESENSE_ADDR`, else localhost on the default port.
pub fn default_addr() -> String {
    std::env::var(ADDR_ENV).unwrap_or_else(|_| format!("127.0.0.1:{DEFAULT_PORT}"))
}

/// Session-wide facts that frames do not carry.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionHeader {
    pub device_id: u8,
    /// Wall-clock time of timestamp zero.
    pub epoch: DateTime<Utc>,
    pub divider: DividerConfig,
    pub profile: String,
    pub sample_rate_hz: f64,
}

impl SessionHeader {
    pub fn epoch_rfc3339(&self) -> String {
        self.epoch.to_rfc3339_opts(SecondsFormat::AutoSi, true)
    }
}

impl Default for SessionHeader {
    fn default() -> Self {
        SessionHeader {
            device_id: 0,
            epoch: DateTime::UNIX_EPOCH,
            divider: DividerConfig::default(),
            profile: "table44".to_string(),
            sample_rate_hz: 100.0,
        }
    }
}
