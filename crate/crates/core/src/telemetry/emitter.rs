//! Device side of the link: frames samples and writes them to a transport,
//! reconnecting with exponential backoff.

use std::io::{self, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::codec::{FrameError, TelemetryFrame};

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("gave up after {attempts} connection attempts: {source}")]
    Exhausted { attempts: u32, source: io::Error },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("sample timestamps go backwards: {previous} ms then {next} ms")]
    Unordered { previous: u64, next: u64 },
}

/// Exponential reconnect delay: `base · 2^attempt`, capped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub base: Duration,
    pub cap: Duration,
    /// Consecutive failed attempts tolerated before giving up; `None` retries forever.
    pub max_attempts: Option<u32>,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff {
            base: Duration::from_millis(100),
            cap: Duration::from_secs(5),
            max_attempts: None,
        }
    }
}

impl Backoff {
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.min(31)).unwrap_or(u32::MAX);
        self.base.saturating_mul(factor).min(self.cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pacing {
    /// Hold each frame until its timestamp, measured from the first frame.
    Realtime,
    /// Send as fast as the transport accepts.
    #[default]
    Replay,
}

/// Opens transport connections.
pub trait Connector {
    type Conn: Write;
    fn connect(&mut self) -> io::Result<Self::Conn>;
}

pub struct TcpConnector {
    addrs: Vec<SocketAddr>,
}

impl TcpConnector {
    pub fn new(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let addrs: Vec<_> = addr.to_socket_addrs()?.collect();
        if addrs.is_empty() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "address resolves to nothing",
            ));
        }
        Ok(TcpConnector { addrs })
    }
}

impl Connector for TcpConnector {
    type Conn = TcpStream;

    fn connect(&mut self) -> io::Result<TcpStream> {
        let stream = TcpStream::connect(&self.addrs[..])?;
        stream.set_nodelay(true)?;
        Ok(stream)
    }
}

#[derive(Debug, Clone)]
pub struct EmitterConfig {
    pub device_id: u8,
    pub pacing: Pacing,
    pub backoff: Backoff,
    /// Checked between frames; set to stop early.
    pub stop: Arc<AtomicBool>,
}

impl Default for EmitterConfig {
    fn default() -> Self {
        EmitterConfig {
            device_id: 0,
            pacing: Pacing::Replay,
            backoff: Backoff::default(),
            stop: Arc::new(AtomicBool::new(false)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmitStats {
    pub frames: u64,
    pub reconnects: u32,
}

struct Link<C: Connector> {
    connector: C,
    conn: Option<C::Conn>,
    backoff: Backoff,
    reconnects: u32,
    connected_once: bool,
}

impl<C: Connector> Link<C> {
    fn send(&mut self, bytes: &[u8]) -> Result<(), EmitError> {
        let mut attempt = 0u32;
        loop {
            if self.conn.is_none() {
                match self.connector.connect() {
                    Ok(c) => {
                        if self.connected_once {
                            self.reconnects += 1;
                        }
                        self.connected_once = true;
                        self.conn = Some(c);
                    }
                    Err(e) => {
                        self.wait_or_give_up(&mut attempt, e)?;
                        continue;
                    }
                }
            }
            let conn = self.conn.as_mut().expect("connected above");
            match conn.write_all(bytes) {
                Ok(()) => return Ok(()),
                Err(e) => {
                    self.conn = None;
                    self.wait_or_give_up(&mut attempt, e)?;
                }
            }
        }
    }

    fn wait_or_give_up(&self, attempt: &mut u32, err: io::Error) -> Result<(), EmitError> {
        *attempt += 1;
        if self.backoff.max_attempts.is_some_and(|max| *attempt >= max) {
            return Err(EmitError::Exhausted {
                attempts: *attempt,
                source: err,
            });
        }
        std::thread::sleep(self.backoff.delay(*attempt - 1));
        Ok(())
    }

    fn flush(&mut self) -> Result<(), EmitError> {
        if let Some(conn) = self.conn.as_mut() {
            // a failed flush loses at most the buffered tail, which the
            // receiver sees as a sequence gap
            let _ = conn.flush();
        }
        Ok(())
    }
}

/// Send one frame per `(timestamp_ms, counts)` item, sequences from 0.
///
/// A failed write drops the connection, waits per the backoff policy,
/// reconnects and resends the same frame; numbering is never reset.
pub fn emit<C, I>(source: I, connector: C, config: &EmitterConfig) -> Result<EmitStats, EmitError>
where
    C: Connector,
    I: IntoIterator<Item = (u64, [u16; 5])>,
{
    let mut link = Link {
        connector,
        conn: None,
        backoff: config.backoff,
        reconnects: 0,
        connected_once: false,
    };
    let mut frames = 0u64;
    let mut origin: Option<(u64, Instant)> = None;
    let mut previous: Option<u64> = None;
    for (timestamp_ms, counts) in source {
        if config.stop.load(Ordering::Relaxed) {
            break;
        }
        if let Some(p) = previous {
            if timestamp_ms < p {
                return Err(EmitError::Unordered {
                    previous: p,
                    next: timestamp_ms,
                });
            }
        }
        previous = Some(timestamp_ms);
        if config.pacing == Pacing::Realtime {
            let (t0, start) = *origin.get_or_insert((timestamp_ms, Instant::now()));
            let due = start + Duration::from_millis(timestamp_ms - t0);
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        let frame = TelemetryFrame::new(config.device_id, frames as u32, timestamp_ms, counts)?;
        link.send(&frame.encode())?;
        frames += 1;
    }
    link.flush()?;
    Ok(EmitStats {
        frames,
        reconnects: link.reconnects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::codec::FrameDecoder;
    use std::cell::RefCell;
    use std::rc::Rc;

    #[test]
    fn backoff_doubles_to_cap() {
        let b = Backoff::default();
        let ms: Vec<u128> = (0..9).map(|i| b.delay(i).as_millis()).collect();
        assert_eq!(ms, [100, 200, 400, 800, 1600, 3200, 5000, 5000, 5000]);
        assert_eq!(b.delay(40), Duration::from_secs(5));
    }

    /// In-memory transport whose connections die after a byte budget.
    struct Flaky {
        wire: Rc<RefCell<Vec<u8>>>,
        budgets: Vec<usize>,
    }

    struct FlakyConn {
        wire: Rc<RefCell<Vec<u8>>>,
        left: usize,
    }

    impl Write for FlakyConn {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            if self.left < buf.len() {
                return Err(io::Error::new(io::ErrorKind::BrokenPipe, "dropped"));
            }
            self.left -= buf.len();
            self.wire.borrow_mut().extend_from_slice(buf);
            Ok(buf.len())
        }

        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    impl Connector for Flaky {
        type Conn = FlakyConn;

        fn connect(&mut self) -> io::Result<FlakyConn> {
            let left = if self.budgets.is_empty() {
                usize::MAX
            } else {
                self.budgets.remove(0)
            };
            Ok(FlakyConn {
                wire: self.wire.clone(),
                left,
            })
        }
    }

    fn decode_all(bytes: &[u8]) -> Vec<TelemetryFrame> {
        let mut dec = FrameDecoder::new();
        dec.push(bytes);
        std::iter::from_fn(|| dec.next_frame()).collect()
    }

    fn quick() -> EmitterConfig {
        EmitterConfig {
            backoff: Backoff {
                base: Duration::from_millis(1),
                cap: Duration::from_millis(2),
                max_attempts: Some(5),
            },
            ..EmitterConfig::default()
        }
    }

    #[test]
    fn sequences_from_zero() {
        let wire = Rc::new(RefCell::new(Vec::new()));
        let source = (0..100u64).map(|i| (i * 10, [i as u16; 5]));
        let stats = emit(
            source,
            Flaky {
                wire: wire.clone(),
                budgets: vec![],
            },
            &quick(),
        )
        .unwrap();
        assert_eq!(stats.frames, 100);
        let frames = decode_all(&wire.borrow());
        let seqs: Vec<u32> = frames.iter().map(|f| f.sequence()).collect();
        assert_eq!(seqs, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn reconnect_continues_numbering() {
        let wire = Rc::new(RefCell::new(Vec::new()));
        let source = (0..60u64).map(|i| (i, [0; 5]));
        let stats = emit(
            source,
            Flaky {
                wire: wire.clone(),
                budgets: vec![50 * 26],
            },
            &quick(),
        )
        .unwrap();
        assert_eq!(stats.reconnects, 1);
        let frames = decode_all(&wire.borrow());
        assert_eq!(frames.len(), 60);
        assert_eq!(frames[49].sequence(), 49);
        assert_eq!(frames[50].sequence(), 50);
    }

    #[test]
    fn gives_up_when_exhausted() {
        struct Refuse;
        impl Connector for Refuse {
            type Conn = Vec<u8>;
            fn connect(&mut self) -> io::Result<Vec<u8>> {
                Err(io::Error::new(io::ErrorKind::ConnectionRefused, "refused"))
            }
        }
        let err = emit([(0, [0; 5])], Refuse, &quick()).unwrap_err();
        assert!(matches!(err, EmitError::Exhausted { attempts: 5, .. }));
    }

    #[test]
    fn backwards_time_rejected() {
        let err = emit(
            [(5, [0; 5]), (4, [0; 5])],
            Flaky {
                wire: Default::default(),
                budgets: vec![],
            },
            &quick(),
        );
        assert!(matches!(err, Err(EmitError::Unordered { previous: 5, next: 4 })));
    }
}
