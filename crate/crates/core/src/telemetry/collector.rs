//! Receiving side of the link: a TCP server with one decode pipeline per
//! connection, forwarding pressure samples to a shared sink.

use std::collections::BTreeMap;
use std::io::{self, ErrorKind, Read};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{Sender, SyncSender};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::codec::{FrameDecoder, TelemetryFrame};
use crate::acquisition::{count_to_pressure, AdcCount, DividerConfig};
use crate::sensor::CalibrationProfile;
use crate::synth::PressureSample;
use crate::units::Channels;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectedSample {
    pub device_id: u8,
    pub sequence: u32,
    pub sample: PressureSample,
}

/// Destination for decoded samples, shared by all connections.
///
/// Calls for one device arrive in frame order. A slow sink blocks only the
/// connection that is calling it.
pub trait Sink: Send + Sync {
    fn accept(&self, sample: CollectedSample);
}

impl<F: Fn(CollectedSample) + Send + Sync> Sink for F {
    fn accept(&self, sample: CollectedSample) {
        self(sample)
    }
}

impl Sink for SyncSender<CollectedSample> {
    fn accept(&self, sample: CollectedSample) {
        // a hung-up receiver means nobody wants the data any more
        let _ = self.send(sample);
    }
}

impl Sink for Sender<CollectedSample> {
    fn accept(&self, sample: CollectedSample) {
        let _ = self.send(sample);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DeviceStats {
    pub frames: u64,
    /// Sequence jumps other than +1.
    pub gaps: u64,
    /// Frames skipped over by forward jumps.
    pub missing: u64,
    pub last_sequence: Option<u32>,
}

impl DeviceStats {
    fn record(&mut self, sequence: u32) {
        if let Some(last) = self.last_sequence {
            if sequence != last.wrapping_add(1) {
                self.gaps += 1;
                if sequence > last {
                    self.missing += (sequence - last - 1) as u64;
                }
            }
        }
        self.last_sequence = Some(sequence);
        self.frames += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CollectorStats {
    pub connections: u64,
    /// Desynchronization episodes, including trailing partial frames.
    pub decode_errors: u64,
    pub skipped_bytes: u64,
    /// Well-formed frames carrying a count beyond the ADC range.
    pub rejected_frames: u64,
    pub devices: BTreeMap<u8, DeviceStats>,
}

#[derive(Debug, Clone)]
pub struct CollectorConfig {
    pub profile: CalibrationProfile,
    pub divider: DividerConfig,
    /// Stop once this many connections have been served and closed.
    pub max_connections: Option<usize>,
}

/// Pressures for one frame, or `None` if a count is out of range.
pub fn frame_to_sample(
    frame: &TelemetryFrame,
    profile: &CalibrationProfile,
    divider: &DividerConfig,
) -> Option<PressureSample> {
    let counts = frame.counts();
    let mut readings = Vec::with_capacity(5);
    for c in counts {
        let count = AdcCount::new(c as u32, divider).ok()?;
        readings.push(count_to_pressure(count, profile, divider).pressure);
    }
    Some(PressureSample {
        timestamp: frame.timestamp_ms() as f64 / 1000.0,
        channels: Channels(readings.try_into().expect("five channels")),
    })
}

/// Decode pipeline for one byte stream.
pub struct Pipeline<'a> {
    config: &'a CollectorConfig,
    stats: &'a Mutex<CollectorStats>,
    decoder: FrameDecoder,
}

impl<'a> Pipeline<'a> {
    pub fn new(config: &'a CollectorConfig, stats: &'a Mutex<CollectorStats>) -> Self {
        stats.lock().expect("stats lock").connections += 1;
        Pipeline {
            config,
            stats,
            decoder: FrameDecoder::new(),
        }
    }

    pub fn feed(&mut self, bytes: &[u8], sink: &dyn Sink) {
        self.decoder.push(bytes);
        while let Some(frame) = self.decoder.next_frame() {
            let Some(sample) = frame_to_sample(&frame, &self.config.profile, &self.config.divider) else {
                self.stats.lock().expect("stats lock").rejected_frames += 1;
                continue;
            };
            self.stats
                .lock()
                .expect("stats lock")
                .devices
                .entry(frame.device_id())
                .or_default()
                .record(frame.sequence());
            sink.accept(CollectedSample {
                device_id: frame.device_id(),
                sequence: frame.sequence(),
                sample,
            });
        }
    }

    pub fn finish(mut self) {
        self.decoder.finish();
        let mut stats = self.stats.lock().expect("stats lock");
        stats.decode_errors += self.decoder.errors();
        stats.skipped_bytes += self.decoder.skipped_bytes();
    }

    /// Run the pipeline over a reader until end of stream.
    pub fn run<R: Read>(mut self, mut reader: R, sink: &dyn Sink) -> io::Result<()> {
        let mut buf = [0u8; 4096];
        loop {
            match reader.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => self.feed(&buf[..n], sink),
                Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                Err(e) => {
                    self.finish();
                    return Err(e);
                }
            }
        }
        self.finish();
        Ok(())
    }
}

const POLL: Duration = Duration::from_millis(20);

pub struct Collector {
    listener: TcpListener,
    config: CollectorConfig,
    shutdown: Arc<AtomicBool>,
}

impl Collector {
    pub fn bind(addr: impl ToSocketAddrs, config: CollectorConfig) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        Ok(Collector {
            listener,
            config,
            shutdown: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Flag that stops [`Collector::run`] when set.
    pub fn shutdown_handle(&self) -> Arc<AtomicBool> {
        self.shutdown.clone()
    }

    /// Accept and serve connections until shutdown or the connection limit.
    pub fn run(&self, sink: &dyn Sink) -> io::Result<CollectorStats> {
        let stats = Mutex::new(CollectorStats::default());
        let finished = AtomicUsize::new(0);
        let mut accepted = 0usize;
        std::thread::scope(|scope| -> io::Result<()> {
            loop {
                if self.shutdown.load(Ordering::Relaxed) {
                    break;
                }
                if let Some(max) = self.config.max_connections {
                    if accepted >= max {
                        if finished.load(Ordering::Acquire) >= accepted {
                            break;
                        }
                        std::thread::sleep(POLL);
                        continue;
                    }
                }
                match self.listener.accept() {
                    Ok((stream, _peer)) => {
                        accepted += 1;
                        let (stats, finished, config, shutdown) = (&stats, &finished, &self.config, &self.shutdown);
                        scope.spawn(move || {
                            // a broken connection only ends that connection
                            let _ = serve(stream, config, stats, sink, shutdown);
                            finished.fetch_add(1, Ordering::Release);
                        });
                    }
                    Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(POLL),
                    Err(e) if e.kind() == ErrorKind::Interrupted => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(())
        })?;
        Ok(stats.into_inner().expect("stats lock"))
    }
}

fn serve(
    stream: TcpStream,
    config: &CollectorConfig,
    stats: &Mutex<CollectorStats>,
    sink: &dyn Sink,
    shutdown: &AtomicBool,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(POLL))?;
    let reader = ShutdownReader { stream, shutdown };
    Pipeline::new(config, stats).run(reader, sink)
}

/// Blocking reader that reports end of stream once shutdown is requested.
struct ShutdownReader<'a> {
    stream: TcpStream,
    shutdown: &'a AtomicBool,
}

impl Read for ShutdownReader<'_> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        loop {
            if self.shutdown.load(Ordering::Relaxed) {
                return Ok(0);
            }
            match self.stream.read(buf) {
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => continue,
                other => return other,
            }
        }
    }
}
