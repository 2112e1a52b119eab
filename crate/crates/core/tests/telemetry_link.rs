use std::collections::BTreeMap;
use std::net::TcpStream;
use std::sync::{mpsc, Mutex};
use std::time::Duration;

use proptest::prelude::*;
use solesense::acquisition::{count_to_pressure, pressure_to_count, AdcCount, DividerConfig};
use solesense::sensor::table44_profile;
use solesense::synth::{synthesize, GaitParams};
use solesense::telemetry::codec::MAX_TIMESTAMP_MS;
use solesense::telemetry::{
    crc16_ccitt_false, emit, Backoff, CollectedSample, Collector, CollectorConfig, CollectorStats, EmitterConfig,
    FrameDecoder, FrameError, Pipeline, TcpConnector, TelemetryFrame, FRAME_LEN,
};
use solesense::SoleChannel;

fn arb_frame() -> impl Strategy<Value = TelemetryFrame> {
    (
        any::<u8>(),
        any::<u32>(),
        0..=MAX_TIMESTAMP_MS,
        prop::array::uniform5(0u16..=4095),
    )
        .prop_map(|(d, s, t, c)| TelemetryFrame::new(d, s, t, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn codec_roundtrip(f in arb_frame()) {
        let bytes = f.encode();
        prop_assert_eq!(bytes.len(), FRAME_LEN);
        prop_assert_eq!(&bytes[..2], b"SL");
        prop_assert_eq!(TelemetryFrame::decode(&bytes).unwrap(), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn resync_recovers_every_intact_frame(
        frames in prop::collection::vec(arb_frame(), 1..20),
        junk in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..=8), 20),
        chunk in 1usize..64,
    ) {
        let mut stream = Vec::new();
        for (f, j) in frames.iter().zip(&junk) {
            stream.extend_from_slice(j);
            stream.extend_from_slice(&f.encode());
        }
        let mut dec = FrameDecoder::new();
        let mut out = Vec::new();
        for piece in stream.chunks(chunk) {
            dec.push(piece);
            out.extend(std::iter::from_fn(|| dec.next_frame()));
        }
        prop_assert_eq!(out, frames);
    }
}

#[test]
fn crc_self_test() {
    assert_eq!(crc16_ccitt_false(b"123456789"), 0x29B1);
}

#[test]
fn every_single_bit_flip_is_detected() {
    let frame = TelemetryFrame::new(7, 123_456, 987_654_321, [1, 2, 3, 4, 4095]).unwrap();
    let good = frame.encode();
    let mut flips = 0;
    for byte in 0..24 {
        for bit in 0..8 {
            let mut b = good;
            b[byte] ^= 1 << bit;
            let err = TelemetryFrame::decode(&b).unwrap_err();
            match byte {
                0 | 1 => assert!(matches!(err, FrameError::BadMagic { offset: 0, .. })),
                2 => assert!(matches!(err, FrameError::BadVersion { offset: 2, .. })),
                _ => assert!(
                    matches!(err, FrameError::BadCrc { offset: 24, .. }),
                    "byte {byte} bit {bit}"
                ),
            }
            flips += 1;
        }
    }
    assert_eq!(flips, 192);
    for byte in 24..26 {
        for bit in 0..8 {
            let mut b = good;
            b[byte] ^= 1 << bit;
            assert!(matches!(TelemetryFrame::decode(&b), Err(FrameError::BadCrc { .. })));
        }
    }
}

fn collector_config() -> CollectorConfig {
    CollectorConfig {
        profile: table44_profile(),
        divider: DividerConfig::default(),
        max_connections: None,
    }
}

fn synthetic_counts(cycles: u32, seed: u64) -> Vec<(u64, [u16; 5])> {
    let profile = table44_profile();
    let cfg = DividerConfig::default();
    let params = GaitParams {
        cycles,
        noise_sigma: 30_000.0,
        seed,
        load_scale: 1.0,
        ..GaitParams::default()
    };
    synthesize(&params)
        .unwrap()
        .map(|s| {
            let ms = (s.timestamp * 1000.0).round() as u64;
            let counts = SoleChannel::ALL.map(|ch| pressure_to_count(s.channels[ch], &profile, &cfg).value() as u16);
            (ms, counts)
        })
        .collect()
}

#[test]
fn three_corrupted_frames_are_counted_and_skipped() {
    let source = synthetic_counts(1, 1);
    let frames: Vec<_> = source
        .iter()
        .enumerate()
        .map(|(i, &(t, c))| TelemetryFrame::new(2, i as u32, t, c).unwrap())
        .collect();
    let corrupt = [10usize, 40, 77];
    let mut bytes = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        let mut b = f.encode();
        if corrupt.contains(&i) {
            b[15] ^= 0x04;
        }
        bytes.extend_from_slice(&b);
    }
    let cfg = collector_config();
    let stats = Mutex::new(CollectorStats::default());
    let got = Mutex::new(Vec::new());
    let sink = |s: CollectedSample| got.lock().unwrap().push(s.sequence);
    Pipeline::new(&cfg, &stats).run(&bytes[..], &sink).unwrap();
    let stats = stats.into_inner().unwrap();
    assert_eq!(stats.decode_errors, 3);
    assert_eq!(stats.devices[&2].gaps, 3);
    assert_eq!(stats.devices[&2].missing, 3);
    let expected: Vec<u32> = (0..frames.len() as u32)
        .filter(|i| !corrupt.contains(&(*i as usize)))
        .collect();
    assert_eq!(*got.lock().unwrap(), expected);
}

#[test]
fn in_memory_conservation() {
    let source = synthetic_counts(3, 5);
    let wire = SharedBuf::default();
    let stats = emit(source.iter().copied(), wire.clone(), &EmitterConfig::default()).unwrap();
    let wire = wire.0.borrow().clone();
    assert_eq!(stats.frames as usize, source.len());

    let cfg = collector_config();
    let cstats = Mutex::new(CollectorStats::default());
    let got = Mutex::new(Vec::new());
    let sink = |s: CollectedSample| got.lock().unwrap().push(s);
    Pipeline::new(&cfg, &cstats).run(&wire[..], &sink).unwrap();
    let got = got.into_inner().unwrap();
    assert_eq!(got.len(), source.len());
    for (s, &(ms, counts)) in got.iter().zip(&source) {
        assert_eq!(s.sample.timestamp, ms as f64 / 1000.0);
        for ch in SoleChannel::ALL {
            let c = AdcCount::new(counts[ch.index()] as u32, &cfg.divider).unwrap();
            let want = count_to_pressure(c, &cfg.profile, &cfg.divider).pressure;
            assert_eq!(s.sample.channels[ch], want);
        }
    }
}

#[derive(Clone, Default)]
struct SharedBuf(std::rc::Rc<std::cell::RefCell<Vec<u8>>>);

impl std::io::Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.borrow_mut().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl solesense::telemetry::Connector for SharedBuf {
    type Conn = SharedBuf;
    fn connect(&mut self) -> std::io::Result<SharedBuf> {
        Ok(self.clone())
    }
}

#[test]
fn empty_tcp_connection() {
    let collector = Collector::bind(
        "127.0.0.1:0",
        CollectorConfig {
            max_connections: Some(1),
            ..collector_config()
        },
    )
    .unwrap();
    let addr = collector.local_addr().unwrap();
    let handle = std::thread::spawn(move || drop(TcpStream::connect(addr).unwrap()));
    let sink = |_: CollectedSample| panic!("no samples expected");
    let stats = collector.run(&sink).unwrap();
    handle.join().unwrap();
    assert_eq!(stats.connections, 1);
    assert_eq!(stats.decode_errors, 0);
    assert!(stats.devices.is_empty());
}

#[test]
fn two_devices_concurrently_over_tcp() {
    let collector = Collector::bind(
        "127.0.0.1:0",
        CollectorConfig {
            max_connections: Some(2),
            ..collector_config()
        },
    )
    .unwrap();
    let addr = collector.local_addr().unwrap();
    let sources = [synthetic_counts(4, 11), synthetic_counts(4, 12)];
    let (tx, rx) = mpsc::channel();
    let stats = std::thread::scope(|scope| {
        for (device, source) in sources.iter().enumerate() {
            scope.spawn(move || {
                let cfg = EmitterConfig {
                    device_id: device as u8 + 1,
                    backoff: Backoff {
                        base: Duration::from_millis(5),
                        cap: Duration::from_millis(50),
                        max_attempts: Some(20),
                    },
                    ..EmitterConfig::default()
                };
                emit(source.iter().copied(), TcpConnector::new(addr).unwrap(), &cfg).unwrap();
            });
        }
        collector.run(&tx).unwrap()
    });
    drop(tx);
    let mut per_device: BTreeMap<u8, Vec<CollectedSample>> = BTreeMap::new();
    for s in rx {
        per_device.entry(s.device_id).or_default().push(s);
    }
    assert_eq!(stats.connections, 2);
    assert_eq!(stats.decode_errors, 0);
    let cfg = collector_config();
    for (device, source) in sources.iter().enumerate() {
        let got = &per_device[&(device as u8 + 1)];
        assert_eq!(got.len(), source.len());
        assert_eq!(stats.devices[&(device as u8 + 1)].gaps, 0);
        for (i, (s, &(ms, counts))) in got.iter().zip(source).enumerate() {
            assert_eq!(s.sequence, i as u32);
            assert_eq!(s.sample.timestamp, ms as f64 / 1000.0);
            let c = AdcCount::new(counts[0] as u32, &cfg.divider).unwrap();
            assert_eq!(
                s.sample.channels[SoleChannel::Forefoot],
                count_to_pressure(c, &cfg.profile, &cfg.divider).pressure
            );
        }
    }
}

#[test]
fn shutdown_stops_an_idle_collector() {
    let collector = Collector::bind("127.0.0.1:0", collector_config()).unwrap();
    let stop = collector.shutdown_handle();
    std::thread::spawn(move || {
        std::thread::sleep(Duration::from_millis(100));
        stop.store(true, std::sync::atomic::Ordering::Relaxed);
    });
    let sink = |_: CollectedSample| {};
    let stats = collector.run(&sink).unwrap();
    assert_eq!(stats.connections, 0);
}
