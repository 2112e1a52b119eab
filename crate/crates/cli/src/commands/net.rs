use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use chrono::Utc;
use solesense::acquisition::{pressure_to_count, DividerConfig};
use solesense::analysis::Analyzer;
use solesense::synth::PressureSample;
use solesense::telemetry::{
    default_addr, emit, Backoff, CollectedSample, Collector, CollectorConfig, EmitError, EmitterConfig, Pacing,
    SessionHeader, TcpConnector,
};

use super::common::{
    analysis_config, device_path, load_session, output_format, parse_epoch, report_json, resolve_profile, write_text,
    SessionWriter,
};
use crate::args::{CollectArgs, Format, StreamArgs};
use crate::error::CliError;
use crate::live::LiveView;

/// Frame payload for one sample: whole-millisecond time and one ADC code per channel.
pub fn frame_source(
    samples: &[PressureSample],
    profile: &solesense::sensor::CalibrationProfile,
    divider: &DividerConfig,
) -> Result<Vec<(u64, [u16; 5])>, CliError> {
    if divider.max_count() > u16::MAX as u32 {
        return Err(CliError::Data(format!(
            "{}-bit ADC codes do not fit the 16-bit frame fields",
            divider.adc_bits
        )));
    }
    samples
        .iter()
        .map(|s| {
            let ms = (s.timestamp * 1000.0).round();
            if !(ms >= 0.0) {
                return Err(CliError::Data(format!(
                    "negative timestamp {} s cannot be streamed",
                    s.timestamp
                )));
            }
            let counts = s
                .channels
                .0
                .map(|p| pressure_to_count(p, profile, divider).value() as u16);
            Ok((ms as u64, counts))
        })
        .collect()
}

pub fn stream(args: &StreamArgs, stop: Arc<AtomicBool>) -> Result<(), CliError> {
    let log = load_session(&args.input)?;
    let profile = resolve_profile(args.profile.as_deref().unwrap_or(&log.header.profile))?;
    let source = frame_source(&log.samples, &profile, &log.header.divider)?;
    let addr = args.addr.clone().unwrap_or_else(default_addr);
    let connector = TcpConnector::new(addr.as_str()).map_err(|e| CliError::Network(format!("{addr}: {e}")))?;
    let config = EmitterConfig {
        device_id: args.device_id.unwrap_or(log.header.device_id),
        pacing: if args.realtime {
            Pacing::Realtime
        } else {
            Pacing::Replay
        },
        backoff: Backoff {
            max_attempts: args.max_attempts,
            ..Backoff::default()
        },
        stop,
    };
    let stats = emit(source, connector, &config).map_err(|e| match e {
        EmitError::Exhausted { .. } => CliError::Network(format!("{addr}: {e}")),
        other => other.into(),
    })?;
    eprintln!(
        "sent {} frames to {addr} ({} reconnects)",
        stats.frames, stats.reconnects
    );
    Ok(())
}

struct DeviceSession {
    writer: SessionWriter,
    analyzer: Option<Analyzer>,
    last_timestamp: Option<f64>,
    out_of_order: u64,
}

pub fn collect(args: &CollectArgs, stop: Arc<AtomicBool>) -> Result<(), CliError> {
    let profile = resolve_profile(&args.profile)?;
    let analysis = args.analyze.then(|| analysis_config(&args.analysis)).transpose()?;
    let epoch = match &args.epoch {
        Some(s) => parse_epoch(s)?,
        None => Utc::now(),
    };
    if let Some(t) = args.timeout {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Usage(format!(
                "--timeout must be a non-negative number of seconds, got {t}"
            )));
        }
    }
    let format = output_format(&args.output, args.format);
    let divider = DividerConfig::default();
    let header_for = |device_id: u8| SessionHeader {
        device_id,
        epoch,
        divider,
        profile: args.profile.clone(),
        sample_rate_hz: args.rate,
    };

    let addr = args.addr.clone().unwrap_or_else(default_addr);
    let collector = Collector::bind(
        addr.as_str(),
        CollectorConfig {
            profile: profile.clone(),
            divider,
            max_connections: args.max_connections,
        },
    )
    .map_err(|e| CliError::Network(format!("cannot listen on {addr}: {e}")))?;
    let local = collector.local_addr().map_err(|e| CliError::Network(e.to_string()))?;
    eprintln!("listening on {local}");

    let shutdown = collector.shutdown_handle();
    let done = AtomicBool::new(false);
    let deadline = args.timeout.map(|t| Instant::now() + Duration::from_secs_f64(t));
    let mut live = args.live.then(|| LiveView::new(profile.max_pressure().pascals()));
    let mut devices: BTreeMap<u8, DeviceSession> = BTreeMap::new();
    let (tx, rx) = mpsc::channel::<CollectedSample>();

    let (stats, failure) = std::thread::scope(|scope| {
        let server = scope.spawn(move || {
            let stats = collector.run(&tx);
            drop(tx);
            stats
        });
        let (done, shutdown) = (&done, &shutdown);
        scope.spawn(move || {
            while !done.load(Ordering::Relaxed) {
                if stop.load(Ordering::Relaxed) || deadline.is_some_and(|d| Instant::now() >= d) {
                    shutdown.store(true, Ordering::Relaxed);
                    break;
                }
                std::thread::sleep(Duration::from_millis(20));
            }
        });

        // keep draining after a failure so the server thread never blocks
        let mut failure = None;
        for item in rx {
            if failure.is_some() {
                continue;
            }
            if let Err(e) = accept(&mut devices, item, args, format, &header_for, analysis, live.as_mut()) {
                failure = Some(e);
                shutdown.store(true, Ordering::Relaxed);
            }
        }
        done.store(true, Ordering::Relaxed);
        (server.join().expect("collector thread"), failure)
    });
    if let Some(view) = live.as_mut() {
        view.draw();
    }

    let claimed = devices
        .iter()
        .find(|(_, d)| d.writer.path() == args.output)
        .map(|(id, _)| *id);
    let primary = claimed.or(args.device_id).unwrap_or(0);
    if claimed.is_none() {
        // no traffic from the primary device: still leave a valid, empty session
        let writer = SessionWriter::create(&args.output, format, &header_for(primary))?;
        devices.insert(
            primary,
            DeviceSession {
                writer,
                analyzer: analysis.map(Analyzer::new),
                last_timestamp: None,
                out_of_order: 0,
            },
        );
    }

    let mut primary_report = None;
    for (id, mut dev) in devices {
        if let Some(analyzer) = &dev.analyzer {
            let report = analyzer.report();
            dev.writer.write_report(&report)?;
            if id == primary {
                primary_report = Some(report);
            }
        }
        if dev.out_of_order > 0 {
            eprintln!(
                "device {id}: dropped {} samples that went back in time",
                dev.out_of_order
            );
        }
        eprintln!("device {id}: saved {}", dev.writer.path().display());
        dev.writer.finish()?;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let stats = stats.map_err(|e| CliError::Network(e.to_string()))?;
    eprintln!(
        "connections {}, decode errors {}, rejected frames {}",
        stats.connections, stats.decode_errors, stats.rejected_frames
    );
    for (id, d) in &stats.devices {
        eprintln!(
            "device {id}: {} frames, {} gaps, {} missing",
            d.frames, d.gaps, d.missing
        );
    }

    if let Some(report) = primary_report {
        let json = report_json(&report);
        print!("{json}");
        if let Some(path) = &args.report {
            write_text(path, &json)?;
        }
    }
    Ok(())
}

fn accept(
    devices: &mut BTreeMap<u8, DeviceSession>,
    item: CollectedSample,
    args: &CollectArgs,
    format: Format,
    header_for: &dyn Fn(u8) -> SessionHeader,
    analysis: Option<solesense::analysis::AnalysisConfig>,
    live: Option<&mut LiveView>,
) -> Result<(), CliError> {
    let id = item.device_id;
    if !devices.contains_key(&id) {
        let taken = devices.values().any(|d| d.writer.path() == args.output);
        let path = if !taken && args.device_id.is_none_or(|p| p == id) {
            args.output.clone()
        } else {
            device_path(&args.output, id)
        };
        let writer = SessionWriter::create(&path, format, &header_for(id))?;
        devices.insert(
            id,
            DeviceSession {
                writer,
                analyzer: analysis.map(Analyzer::new),
                last_timestamp: None,
                out_of_order: 0,
            },
        );
    }
    let dev = devices.get_mut(&id).expect("inserted above");
    let sample = item.sample;
    if dev.last_timestamp.is_some_and(|t| sample.timestamp <= t) {
        dev.out_of_order += 1;
        return Ok(());
    }
    dev.last_timestamp = Some(sample.timestamp);
    dev.writer.write_sample(&sample)?;
    if let Some(analyzer) = &mut dev.analyzer {
        if let Some(event) = analyzer.push(&sample)? {
            dev.writer.write_event(&event)?;
        }
    }
    if let Some(view) = live {
        view.update(id, sample, dev.analyzer.as_ref().map(Analyzer::phase));
    }
    Ok(())
}
