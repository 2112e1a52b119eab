use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use solesense::analysis::compare::COMPARISON_TABLE;
use solesense::analysis::GaitReport;
use solesense::sensor::{CalibrationProfile, BENCH_LOG, CALIBRATION_SWEEP};
use solesense::session::{read_csv, read_jsonl};

const BIN: &str = env!("CARGO_BIN_EXE_solesense");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["simulate"])), 1, "missing -o");
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    assert_eq!(code(&run(&["simulate", "--stance", "1.2", "-o", p(&out)])), 1);
    assert_eq!(code(&run(&["simulate", "--rate", "2000", "-o", p(&out)])), 1);
    assert_eq!(code(&run(&["simulate", "--epoch", "noon", "-o", p(&out)])), 1);
}

#[test]
fn zero_cycles_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    assert_eq!(code(&run(&["simulate", "--cycles", "0", "-o", p(&out)])), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().last().unwrap().starts_with("t_s,"));
    assert!(read_csv(&out).unwrap().samples.is_empty());
}

#[test]
fn simulated_walk_reports_configured_cadence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    assert_eq!(
        code(&run(&["simulate", "--cycles", "20", "--cadence", "110", "-o", p(&out)])),
        0
    );
    assert_eq!(read_jsonl(&out).unwrap().samples.len(), 2182);
    let analyzed = run(&["analyze", p(&out)]);
    assert_eq!(code(&analyzed), 0);
    let report: GaitReport = serde_json::from_slice(&analyzed.stdout).unwrap();
    let cadence = report.cadence_steps_per_min.unwrap();
    assert!((cadence - 110.0).abs() <= 1.1, "cadence {cadence}");
}

#[test]
fn compare_reproduces_the_table_and_plots_two_series() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("cmp.svg");
    let built_in = run(&["compare", "--svg", p(&svg)]);
    assert_eq!(code(&built_in), 0);
    let rows: Vec<Vec<f64>> = stdout(&built_in)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), COMPARISON_TABLE.len());
    for (row, (t, s, f)) in rows.iter().zip(COMPARISON_TABLE) {
        assert_eq!(row[0], t);
        assert!(((row[1] - s) / s).abs() <= 1e-6);
        assert!(((row[2] - f) / f).abs() <= 1e-6);
    }
    let svg = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(svg.matches(r#"class="series""#).count(), 2);

    // the shipped stimulus file is the built-in one
    let from_file = run(&["compare", p(&data("comparison_stimulus.csv"))]);
    assert_eq!(stdout(&from_file), stdout(&built_in));
}

#[test]
fn zero_stimulus_leaves_both_sensors_idle() {
    let dir = tempfile::tempdir().unwrap();
    let stim = dir.path().join("zero.csv");
    std::fs::write(&stim, "t_s,sensor_pa,fsr_pa\n0,0,0\n1,0,0\n2,0,0\n").unwrap();
    let out = dir.path().join("out.csv");
    assert_eq!(code(&run(&["compare", p(&stim), "-o", p(&out)])), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",3342.9,3342.9"), "{line}");
    }
}

#[test]
fn compare_config_errors() {
    assert_eq!(code(&run(&["compare", "--fsr-profile", "missing"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let stim = dir.path().join("bad.csv");
    std::fs::write(&stim, "t,a,b\n0,0,0\n").unwrap();
    assert_eq!(code(&run(&["compare", p(&stim)])), 2);
    assert_eq!(code(&run(&["compare", p(&dir.path().join("absent.csv"))])), 3);
}

#[test]
fn calibrate_specsheet_reports_the_range() {
    let out = run(&["calibrate", p(&data("specsheet.csv"))]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("150000 Ω @ 200 kPa … 200 Ω @ 750 kPa"), "{text}");
    assert!(text.contains("Pa/Ω") && text.contains("Ω/Pa"));
    assert!(text.contains("response time: 120.0 ms"));
    assert!(text.contains("recovery time: 100.0 ms"));
}

#[test]
fn calibrated_profile_reproduces_points_and_drives_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let profile_path = dir.path().join("t44.json");
    let report_path = dir.path().join("char.json");
    let out = run(&[
        "calibrate",
        p(&data("calibration_table44.csv")),
        "-o",
        p(&profile_path),
        "--report",
        p(&report_path),
    ]);
    assert_eq!(code(&out), 0);
    let profile: CalibrationProfile = serde_json::from_slice(&std::fs::read(&profile_path).unwrap()).unwrap();
    for (pa, ohm) in CALIBRATION_SWEEP {
        let got = profile
            .static_resistance(solesense::Pressure::new(pa).unwrap())
            .as_ohms()
            .unwrap();
        assert!(((got - ohm) / ohm).abs() <= 1e-9);
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert!(report["hysteresis_percent"].as_f64().unwrap() <= 6.0 + 1e-9);

    // a profile file works wherever a built-in name does
    let session = dir.path().join("s.csv");
    assert_eq!(
        code(&run(&[
            "simulate",
            "--cycles",
            "2",
            "--profile",
            p(&profile_path),
            "-o",
            p(&session)
        ])),
        0
    );
    let builtin = dir.path().join("b.csv");
    assert_eq!(code(&run(&["simulate", "--cycles", "2", "-o", p(&builtin)])), 0);
    assert_eq!(read_csv(&session).unwrap().samples, read_csv(&builtin).unwrap().samples);
}

#[test]
fn calibrate_rejects_bad_point_sets() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    std::fs::write(&one, "pressure_pa,resistance_ohm\n300000,1000\n").unwrap();
    assert_eq!(code(&run(&["calibrate", p(&one)])), 2);

    let rising = dir.path().join("rising.csv");
    std::fs::write(&rising, "pressure_pa,resistance_ohm\n300000,1000\n400000,2000\n").unwrap();
    let out = run(&["calibrate", p(&rising)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("1000 Ω @ 300000 Pa") && err.contains("2000 Ω @ 400000 Pa"),
        "{err}"
    );

    assert_eq!(code(&run(&["calibrate", p(&dir.path().join("absent.csv"))])), 3);
}

fn csv_pairs(path: &Path) -> (String, Vec<(f64, f64)>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    (header, rows)
}

#[test]
fn bench_log_plots_carry_the_logged_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["analyze", p(&data("bench_log.csv")), "--plots", p(dir.path())]);
    assert_eq!(code(&out), 0);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["records"], 15);

    let (h, tp) = csv_pairs(&dir.path().join("time_vs_pressure.csv"));
    assert_eq!(h, "time_s,pressure_pa");
    assert_eq!(tp, BENCH_LOG.iter().map(|r| (r.0, r.1)).collect::<Vec<_>>());
    let (h, tr) = csv_pairs(&dir.path().join("time_vs_resistance.csv"));
    assert_eq!(h, "time_s,resistance_ohm");
    assert_eq!(tr, BENCH_LOG.iter().map(|r| (r.0, r.2)).collect::<Vec<_>>());
    assert_eq!(tp[0], (0.0, 428_589.8));
    assert_eq!(tr[0], (0.0, 3_342_900.0));
    for name in ["time_vs_pressure", "time_vs_resistance", "response_curve"] {
        let svg = std::fs::read_to_string(dir.path().join(format!("{name}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
    }
}

#[test]
fn calibration_response_curve_is_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["analyze", p(&data("calibration_table44.csv")), "--plots", p(dir.path())]);
    assert_eq!(code(&out), 0);
    let (h, pairs) = csv_pairs(&dir.path().join("response_curve.csv"));
    assert_eq!(h, "pressure_pa,resistance_ohm");
    assert_eq!(pairs, CALIBRATION_SWEEP.to_vec());
}

#[test]
fn session_plots_cover_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.csv");
    assert_eq!(code(&run(&["simulate", "--cycles", "3", "-o", p(&session)])), 0);
    let plots = dir.path().join("plots");
    assert_eq!(code(&run(&["analyze", p(&session), "--plots", p(&plots)])), 0);
    let table = std::fs::read_to_string(plots.join("time_vs_pressure.csv")).unwrap();
    assert_eq!(table.lines().count(), 301);
    let svg = std::fs::read_to_string(plots.join("time_vs_pressure.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="series""#).count(), 5);
    let sole = std::fs::read_to_string(plots.join("sole_map.svg")).unwrap();
    assert_eq!(sole.matches(r#"class="sensor""#).count(), 5);
}

#[test]
fn analyze_io_and_format_errors() {
    let out = run(&["analyze", "/nonexistent/session.csv"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("/nonexistent/session.csv"));
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.txt");
    std::fs::write(&junk, "hello\n").unwrap();
    assert_eq!(code(&run(&["analyze", p(&junk)])), 2);
}

#[test]
fn idle_collector_leaves_an_empty_session() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty.jsonl");
    let res = run(&[
        "collect",
        "-o",
        p(&out),
        "--addr",
        "127.0.0.1:0",
        "--timeout",
        "0.2",
        "--analyze",
    ]);
    assert_eq!(code(&res), 0);
    let log = read_jsonl(&out).unwrap();
    assert!(log.samples.is_empty());
    let report: GaitReport = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(report.samples, 0);
    assert_eq!(log.report, Some(report));
}

#[test]
fn stream_without_collector_is_a_network_error() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.csv");
    assert_eq!(code(&run(&["simulate", "--cycles", "1", "-o", p(&session)])), 0);
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let addr = format!("127.0.0.1:{port}");
    let out = run(&["stream", p(&session), "--addr", &addr, "--max-attempts", "2"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn address_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.csv");
    assert_eq!(code(&run(&["simulate", "--cycles", "1", "-o", p(&session)])), 0);
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let out = Command::new(BIN)
        .args(["stream", p(&session), "--max-attempts", "1"])
        .env("SOLESENSE_ADDR", format!("127.0.0.1:{port}"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8(out.stderr).unwrap().contains(&port.to_string()));
}
