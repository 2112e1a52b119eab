use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde_json::json;
use solesense::analysis::analyze;
use solesense::sensor::{
    characterize, fit_profile, read_calibration_csv, CalibrationPoint, CalibrationProfile, DynamicsConfig,
};
use solesense::session::{read_legacy_csv, FileKind, LegacyRecord, SessionLog};
use solesense::SoleChannel;

use super::calibrate::default_onset;
use super::common::{analysis_config, file_kind, load_session, report_json, resolve_profile, write_text};
use crate::args::AnalyzeArgs;
use crate::error::{calibration_error, CliError};
use crate::plot::{sole_map, Chart, Series, Style};

pub fn run(args: &AnalyzeArgs) -> Result<(), CliError> {
    let path = &args.input;
    match file_kind(path)? {
        Some(FileKind::SessionCsv | FileKind::SessionJsonl) => session(args, load_session(path)?),
        Some(FileKind::BenchLog) => {
            let file = File::open(path).map_err(CliError::io(path))?;
            let records = read_legacy_csv(BufReader::new(file))?;
            bench_log(args, &records)
        }
        Some(FileKind::Calibration) => {
            let file = File::open(path).map_err(CliError::io(path))?;
            let points = read_calibration_csv(BufReader::new(file)).map_err(|e| calibration_error(path, e))?;
            calibration(args, &points)
        }
        None => Err(CliError::Data(format!(
            "{}: not a session, bench log or calibration file",
            path.display()
        ))),
    }
}

fn emit(args: &AnalyzeArgs, json: &str) -> Result<(), CliError> {
    print!("{json}");
    if let Some(p) = &args.report {
        write_text(p, json)?;
    }
    Ok(())
}

fn session(args: &AnalyzeArgs, log: SessionLog) -> Result<(), CliError> {
    let cfg = analysis_config(&args.analysis)?;
    let (_, report) = analyze(&log.samples, &cfg)?;
    emit(args, &report_json(&report))?;
    if let Some(dir) = &args.plots {
        let profile = resolve_profile(args.profile.as_deref().unwrap_or(&log.header.profile))?;
        session_plots(dir, &log, &profile)?;
    }
    Ok(())
}

fn bench_log(args: &AnalyzeArgs, records: &[LegacyRecord]) -> Result<(), CliError> {
    let range = |f: fn(&LegacyRecord) -> f64| {
        let lo = records.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = records.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        (!records.is_empty()).then(|| json!({ "min": lo, "max": hi }))
    };
    let summary = json!({
        "kind": "bench_log",
        "records": records.len(),
        "duration_s": records.last().zip(records.first()).map(|(l, f)| l.time_s - f.time_s),
        "pressure_pa": range(|r| r.pressure_pa),
        "resistance_ohm": range(|r| r.resistance_ohm),
    });
    emit(args, &pretty(&summary))?;
    if let Some(dir) = &args.plots {
        prepare(dir)?;
        let t_p: Vec<(f64, f64)> = records.iter().map(|r| (r.time_s, r.pressure_pa)).collect();
        let t_r: Vec<(f64, f64)> = records.iter().map(|r| (r.time_s, r.resistance_ohm)).collect();
        let p_r: Vec<(f64, f64)> = records.iter().map(|r| (r.pressure_pa, r.resistance_ohm)).collect();
        write_plot(
            dir,
            "time_vs_pressure",
            &["time_s", "pressure_pa"],
            &t_p,
            chart(
                "Time vs Pressure",
                "time (s)",
                "pressure (Pa)",
                Style::Lines,
                false,
                vec![series("sensor", &t_p)],
            ),
        )?;
        write_plot(
            dir,
            "time_vs_resistance",
            &["time_s", "resistance_ohm"],
            &t_r,
            chart(
                "Time vs Resistance",
                "time (s)",
                "resistance (Ω)",
                Style::Lines,
                true,
                vec![series("sensor", &t_r)],
            ),
        )?;
        write_plot(
            dir,
            "response_curve",
            &["pressure_pa", "resistance_ohm"],
            &p_r,
            chart(
                "Pressure Response Curve",
                "pressure (Pa)",
                "resistance (Ω)",
                Style::Markers,
                true,
                vec![series("sensor", &p_r)],
            ),
        )?;
    }
    Ok(())
}

fn calibration(args: &AnalyzeArgs, points: &[CalibrationPoint]) -> Result<(), CliError> {
    let name = args.input.file_stem().and_then(|s| s.to_str()).unwrap_or("calibration");
    let fitted = fit_profile(name, points, default_onset(points, None)?).map_err(|e| calibration_error(&args.input, e));
    let summary = json!({
        "kind": "calibration",
        "points": points.len(),
        "characterization": match &fitted {
            Ok(p) => Some(characterize(p, &DynamicsConfig::for_profile(p))),
            Err(_) => None,
        },
    });
    emit(args, &pretty(&summary))?;
    if let Some(dir) = &args.plots {
        prepare(dir)?;
        let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.pressure.pascals(), p.ohms())).collect();
        write_plot(
            dir,
            "response_curve",
            &["pressure_pa", "resistance_ohm"],
            &pairs,
            chart(
                "Pressure Response Curve",
                "pressure (Pa)",
                "resistance (Ω)",
                Style::Markers,
                true,
                vec![series(name, &pairs)],
            ),
        )?;
    }
    fitted.map(|_| ())
}

fn session_plots(dir: &Path, log: &SessionLog, profile: &CalibrationProfile) -> Result<(), CliError> {
    prepare(dir)?;
    let per_channel = |f: &dyn Fn(f64) -> f64| -> Vec<Series> {
        SoleChannel::ALL
            .iter()
            .map(|&ch| Series {
                name: ch.label().to_string(),
                points: log
                    .samples
                    .iter()
                    .map(|s| (s.timestamp, f(s.channels[ch].pascals())))
                    .collect(),
            })
            .collect()
    };
    let ohms = |pa: f64| {
        let p = solesense::Pressure::new(pa).expect("session pressures are valid");
        profile
            .static_resistance(p)
            .as_ohms()
            .unwrap_or_else(|| profile.idle_ohms())
    };

    let pressure = per_channel(&|pa| pa);
    let resistance = per_channel(&ohms);
    write_table(dir, "time_vs_pressure", "_pa", &pressure)?;
    write_table(dir, "time_vs_resistance", "_ohm", &resistance)?;
    let kpa: Vec<Series> = pressure
        .into_iter()
        .map(|s| Series {
            points: s.points.into_iter().map(|(t, p)| (t, p / 1e3)).collect(),
            ..s
        })
        .collect();
    svg(
        dir,
        "time_vs_pressure",
        &chart(
            "Time vs Pressure",
            "time (s)",
            "pressure (kPa)",
            Style::Lines,
            false,
            kpa,
        ),
    )?;
    svg(
        dir,
        "time_vs_resistance",
        &chart(
            "Time vs Resistance",
            "time (s)",
            "resistance (Ω)",
            Style::Lines,
            true,
            resistance,
        ),
    )?;

    let curve: Vec<(f64, f64)> = profile
        .points()
        .iter()
        .map(|p| (p.pressure.pascals(), p.ohms()))
        .collect();
    write_plot(
        dir,
        "response_curve",
        &["pressure_pa", "resistance_ohm"],
        &curve,
        chart(
            "Pressure Response Curve",
            "pressure (Pa)",
            "resistance (Ω)",
            Style::Markers,
            true,
            vec![series(profile.name(), &curve)],
        ),
    )?;

    let full_scale = profile.max_pressure().pascals();
    let peaks: Vec<(SoleChannel, f64)> = SoleChannel::ALL
        .iter()
        .map(|&ch| {
            (
                ch,
                log.samples.iter().map(|s| s.channels[ch].pascals()).fold(0.0, f64::max),
            )
        })
        .collect();
    let cells: Vec<(String, f64, f64, f64, String)> = peaks
        .iter()
        .map(|&(ch, peak)| {
            let (x, y) = sole_position(ch);
            (
                ch.label().to_string(),
                x,
                y,
                peak / full_scale,
                format!("{:.0} kPa", peak / 1e3),
            )
        })
        .collect();
    write_text(&dir.join("sole_map.svg"), &sole_map("Peak pressure", &cells))?;
    let mut csv = String::from("channel,peak_pa\n");
    for (ch, peak) in peaks {
        csv.push_str(&format!("{},{peak}\n", ch.label()));
    }
    write_text(&dir.join("sole_map.csv"), &csv)
}

/// Sensor centre in the unit box of [`sole_map`] (x right, y toe → heel).
fn sole_position(ch: SoleChannel) -> (f64, f64) {
    match ch {
        SoleChannel::Forefoot => (0.5, 0.12),
        SoleChannel::MidfootMedial => (0.25, 0.5),
        SoleChannel::MidfootCentral => (0.5, 0.5),
        SoleChannel::MidfootLateral => (0.75, 0.5),
        SoleChannel::Heel => (0.5, 0.88),
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value");
    s.push('\n');
    s
}

fn prepare(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))
}

fn series(name: &str, points: &[(f64, f64)]) -> Series {
    Series {
        name: name.to_string(),
        points: points.to_vec(),
    }
}

fn chart(title: &str, x: &str, y: &str, style: Style, log_y: bool, series: Vec<Series>) -> Chart {
    Chart {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        style,
        log_y,
        series,
    }
}

fn svg(dir: &Path, name: &str, chart: &Chart) -> Result<(), CliError> {
    write_text(&dir.join(format!("{name}.svg")), &chart.to_svg())
}

/// SVG plus a two-column CSV of exactly the plotted pairs.
fn write_plot(dir: &Path, name: &str, columns: &[&str; 2], rows: &[(f64, f64)], chart: Chart) -> Result<(), CliError> {
    let mut csv = format!("{},{}\n", columns[0], columns[1]);
    for (a, b) in rows {
        csv.push_str(&format!("{a},{b}\n"));
    }
    write_text(&dir.join(format!("{name}.csv")), &csv)?;
    svg(dir, name, &chart)
}

/// One row per sample: `t_s` then one column per channel.
fn write_table(dir: &Path, name: &str, suffix: &str, series: &[Series]) -> Result<(), CliError> {
    let mut csv = String::from("t_s");
    for s in series {
        csv.push_str(&format!(",{}{suffix}", s.name));
    }
    csv.push('\n');
    let rows = series.first().map_or(0, |s| s.points.len());
    for i in 0..rows {
        csv.push_str(&series[0].points[i].0.to_string());
        for s in series {
            csv.push_str(&format!(",{}", s.points[i].1));
        }
        csv.push('\n');
    }
    write_text(&dir.join(format!("{name}.csv")), &csv)
}
