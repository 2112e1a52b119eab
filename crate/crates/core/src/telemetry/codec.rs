//! Fixed 26-byte telemetry frame and a resynchronizing stream decoder.
//!
//! Layout, little-endian:
//!
//! | bytes  | field                          |
//! |--------|--------------------------------|
//! | 0..2   | magic `"SL"`                   |
//! | 2      | version (1)                    |
//! | 3      | device id                      |
//! | 4..8   | sequence, u32                  |
//! | 8..14  | timestamp, ms, 48-bit unsigned |
//! | 14..24 | five u16 ADC counts            |
//! | 24..26 | CRC-16/CCITT-FALSE of 0..24    |

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: [u8; 2] = *b"SL";
pub const VERSION: u8 = 1;
pub const FRAME_LEN: usize = 26;
const CRC_OFFSET: usize = 24;
pub const MAX_TIMESTAMP_MS: u64 = (1 << 48) - 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("truncated frame: {available} of {FRAME_LEN} bytes")]
    Truncated { available: usize },
    #[error("bad magic {found:02x?} at offset {offset}")]
    BadMagic { offset: usize, found: [u8; 2] },
    #[error("unsupported version {found} at offset {offset}")]
    BadVersion { offset: usize, found: u8 },
    #[error("crc mismatch at offset {offset}: computed {computed:#06x}, received {received:#06x}")]
    BadCrc {
        offset: usize,
        computed: u16,
        received: u16,
    },
    #[error("timestamp {0} ms does not fit in 48 bits")]
    TimestampRange(u64),
}

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
pub fn crc16_ccitt_false(bytes: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &b in bytes {
        crc ^= (b as u16) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ 0x1021
            } else {
                crc << 1
            };
        }
    }
    crc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TelemetryFrame {
    device_id: u8,
    sequence: u32,
    timestamp_ms: u64,
    counts: [u16; 5],
}

impl TelemetryFrame {
    pub fn new(device_id: u8, sequence: u32, timestamp_ms: u64, counts: [u16; 5]) -> Result<Self, FrameError> {
        if timestamp_ms > MAX_TIMESTAMP_MS {
            return Err(FrameError::TimestampRange(timestamp_ms));
        }
        Ok(TelemetryFrame {
            device_id,
            sequence,
            timestamp_ms,
            counts,
        })
    }

    pub fn device_id(&self) -> u8 {
        self.device_id
    }

    pub fn sequence(&self) -> u32 {
        self.sequence
    }

    pub fn timestamp_ms(&self) -> u64 {
        self.timestamp_ms
    }

    pub fn counts(&self) -> [u16; 5] {
        self.counts
    }

    pub fn encode(&self) -> [u8; FRAME_LEN] {
        let mut out = [0u8; FRAME_LEN];
        out[0..2].copy_from_slice(&MAGIC);
        out[2] = VERSION;
        out[3] = self.device_id;
        out[4..8].copy_from_slice(&self.sequence.to_le_bytes());
        out[8..14].copy_from_slice(&self.timestamp_ms.to_le_bytes()[..6]);
        for (i, c) in self.counts.iter().enumerate() {
            out[14 + 2 * i..16 + 2 * i].copy_from_slice(&c.to_le_bytes());
        }
        let crc = crc16_ccitt_false(&out[..CRC_OFFSET]);
        out[CRC_OFFSET..].copy_from_slice(&crc.to_le_bytes());
        out
    }

    /// Decode the first [`FRAME_LEN`] bytes of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < FRAME_LEN {
            return Err(FrameError::Truncated { available: bytes.len() });
        }
        let b = &bytes[..FRAME_LEN];
        if b[0..2] != MAGIC {
            return Err(FrameError::BadMagic {
                offset: 0,
                found: [b[0], b[1]],
            });
        }
        if b[2] != VERSION {
            return Err(FrameError::BadVersion { offset: 2, found: b[2] });
        }
        let computed = crc16_ccitt_false(&b[..CRC_OFFSET]);
        let received = u16::from_le_bytes([b[24], b[25]]);
        if computed != received {
            return Err(FrameError::BadCrc {
                offset: CRC_OFFSET,
                computed,
                received,
            });
        }
        let mut ts = [0u8; 8];
        ts[..6].copy_from_slice(&b[8..14]);
        let counts = std::array::from_fn(|i| u16::from_le_bytes([b[14 + 2 * i], b[15 + 2 * i]]));
        Ok(TelemetryFrame {
            device_id: b[3],
            sequence: u32::from_le_bytes(b[4..8].try_into().expect("4 bytes")),
            timestamp_ms: u64::from_le_bytes(ts),
            counts,
        })
    }
}

/// Incremental decoder for a byte stream of frames with possible junk.
///
/// After a failed decode it drops one byte and retries, so every intact frame
/// following corruption is recovered. A run of consecutive failures counts as
/// one error.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: VecDeque<u8>,
    desynced: bool,
    errors: u64,
    skipped_bytes: u64,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend(bytes);
    }

    /// Desynchronization episodes seen so far.
    pub fn errors(&self) -> u64 {
        self.errors
    }

    pub fn skipped_bytes(&self) -> u64 {
        self.skipped_bytes
    }

    fn skip(&mut self, n: usize) {
        if n == 0 {
            return;
        }
        if !self.desynced {
            self.desynced = true;
            self.errors += 1;
        }
        self.skipped_bytes += n as u64;
        self.buf.drain(..n);
    }

    /// Next complete frame, or `None` when more bytes are needed.
    pub fn next_frame(&mut self) -> Option<TelemetryFrame> {
        loop {
            // drop everything before the next possible magic
            let start = (0..self.buf.len())
                .find(|&i| self.buf[i] == MAGIC[0] && self.buf.get(i + 1).is_none_or(|&b| b == MAGIC[1]))
                .unwrap_or(self.buf.len());
            self.skip(start);
            if self.buf.len() < FRAME_LEN {
                return None;
            }
            let candidate: [u8; FRAME_LEN] = std::array::from_fn(|i| self.buf[i]);
            match TelemetryFrame::decode(&candidate) {
                Ok(frame) => {
                    self.buf.drain(..FRAME_LEN);
                    self.desynced = false;
                    return Some(frame);
                }
                Err(_) => self.skip(1),
            }
        }
    }

    /// Signal end of stream: leftover bytes count as one more error.
    pub fn finish(&mut self) {
        let n = self.buf.len();
        if n > 0 {
            self.desynced = false;
            self.skip(n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(seq: u32) -> TelemetryFrame {
        TelemetryFrame::new(3, seq, 10 * seq as u64, [seq as u16, 1, 2, 3, 4095]).unwrap()
    }

    #[test]
    fn crc_check_value() {
        assert_eq!(crc16_ccitt_false(b"123456789"), 0x29B1);
        assert_eq!(crc16_ccitt_false(b""), 0xFFFF);
    }

    #[test]
    fn layout() {
        let bytes = frame(0x01020304).encode();
        assert_eq!(bytes.len(), 26);
        assert_eq!(&bytes[..4], &[0x53, 0x4C, 1, 3]);
        assert_eq!(&bytes[4..8], &[4, 3, 2, 1]);
        assert_eq!(TelemetryFrame::decode(&bytes).unwrap(), frame(0x01020304));
    }

    #[test]
    fn timestamp_width() {
        assert!(TelemetryFrame::new(0, 0, MAX_TIMESTAMP_MS, [0; 5]).is_ok());
        assert_eq!(
            TelemetryFrame::new(0, 0, MAX_TIMESTAMP_MS + 1, [0; 5]),
            Err(FrameError::TimestampRange(MAX_TIMESTAMP_MS + 1))
        );
        let f = TelemetryFrame::new(0, 0, MAX_TIMESTAMP_MS, [0; 5]).unwrap();
        assert_eq!(TelemetryFrame::decode(&f.encode()).unwrap(), f);
    }

    #[test]
    fn error_kinds() {
        let good = frame(1).encode();
        assert_eq!(
            TelemetryFrame::decode(&good[..25]),
            Err(FrameError::Truncated { available: 25 })
        );
        let mut b = good;
        b[0] = b'X';
        assert!(matches!(
            TelemetryFrame::decode(&b),
            Err(FrameError::BadMagic { offset: 0, .. })
        ));
        let mut b = good;
        b[2] = 2;
        assert_eq!(
            TelemetryFrame::decode(&b),
            Err(FrameError::BadVersion { offset: 2, found: 2 })
        );
        let mut b = good;
        b[20] ^= 0x10;
        assert!(matches!(
            TelemetryFrame::decode(&b),
            Err(FrameError::BadCrc { offset: 24, .. })
        ));
    }

    #[test]
    fn decoder_handles_split_and_junk() {
        let mut dec = FrameDecoder::new();
        let mut stream = Vec::new();
        stream.extend(frame(0).encode());
        stream.extend(b"S\x00junkSL");
        stream.extend(frame(1).encode());
        for chunk in stream.chunks(5) {
            dec.push(chunk);
        }
        assert_eq!(dec.next_frame(), Some(frame(0)));
        assert_eq!(dec.next_frame(), Some(frame(1)));
        assert_eq!(dec.next_frame(), None);
        assert_eq!(dec.errors(), 1);
        assert_eq!(dec.skipped_bytes(), 8);
        dec.finish();
        assert_eq!(dec.errors(), 1);
    }

    #[test]
    fn trailing_partial_is_an_error() {
        let mut dec = FrameDecoder::new();
        dec.push(&frame(0).encode()[..10]);
        assert_eq!(dec.next_frame(), None);
        dec.finish();
        assert_eq!(dec.errors(), 1);
    }
}
