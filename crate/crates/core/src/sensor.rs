//! Digital twin of one piezoresistive sensor.
//!
//! The static curve is piecewise linear in (pressure, ln resistance) through the
//! calibration points. Dynamics add a symmetric play operator in the pressure
//! domain followed by a first-order lag on ln resistance with separate loading
//! and recovery time constants.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{Pressure, Resistance, UnitError};

/// 10–90 % loading transition time of the fabricated sensor (s).
pub const RESPONSE_TIME: f64 = 0.120;
/// 10–90 % recovery transition time of the fabricated sensor (s).
pub const RECOVERY_TIME: f64 = 0.100;
/// Full-scale hysteresis loop width as a fraction of the pressure span.
pub const HYSTERESIS_FRACTION: f64 = 0.06;
/// Contact threshold band (± fraction of the base level).
pub const THRESHOLD_BAND: f64 = 0.10;
/// Sensitivity printed on the sensor's datasheet (Pa/Ω). Reported next to the
/// computed figure; never used as ground truth.
pub const DATASHEET_SENSITIVITY_PA_PER_OHM: f64 = 0.02;
/// Default pressure below which a sensor reads open circuit.
pub const DEFAULT_ONSET_PA: f64 = 200_000.0;

/// Bench pressure sweep: (pressure Pa, resistance Ω), including repeated readings.
pub const CALIBRATION_SWEEP: [(f64, f64); 9] = [
    (428_589.8, 3_342_900.0),
    (428_589.8, 3_342_900.0),
    (428_589.8, 3_342_900.0),
    (469_052.1, 1_924_700.0),
    (480_612.8, 1_711_436.842),
    (486_393.1, 1_620_800.0),
    (509_514.4, 1_333_783.333),
    (532_635.8, 1_128_771.429),
    (723_386.8, 463_322.950_8),
];

/// Bench time-series log: (time s, pressure Pa, resistance Ω).
pub const BENCH_LOG: [(f64, f64, f64); 15] = [
    (0.0, 428_589.8, 3_342_900.0),
    (1.0, 428_589.8, 3_342_900.0),
    (2.0, 428_589.8, 3_342_900.0),
    (3.0, 428_589.8, 3_342_900.0),
    (4.0, 428_589.8, 3_342_900.0),
    (5.0, 434_370.1, 29_162.12),
    (6.0, 469_052.1, 29_162.12),
    (7.0, 469_052.1, 29_162.12),
    (8.0, 469_052.1, 29_162.12),
    (9.0, 469_052.1, 29_162.12),
    (10.0, 480_612.8, 3_342_900.0),
    (11.0, 509_514.4, 3_342_900.0),
    (12.0, 532_635.8, 3_342_900.0),
    (13.0, 549_976.8, 3_342_900.0),
    (14.0, 648_242.5, 8_387.898),
];

/// Datasheet range endpoints: light contact and full load.
pub const SPEC_SHEET_ENDPOINTS: [(f64, f64); 2] = [(200_000.0, 150_000.0), (750_000.0, 200.0)];

/// Resistance levels of the commercial FSR used for side-by-side runs,
/// placed at declared pressures (idle, half press, full press).
pub const FSR_LEVELS: [(f64, f64); 3] = [
    (428_589.8, 3_342_900.0),
    (480_612.8, 2_051_325.0),
    (648_242.5, 123_811.11),
];

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("need at least 2 distinct pressures, got {0}")]
    TooFewPoints(usize),
    #[error("resistance increases with pressure: {lower_ohm} Ω @ {lower_pa} Pa then {higher_ohm} Ω @ {higher_pa} Pa")]
    NonMonotone {
        lower_pa: f64,
        lower_ohm: f64,
        higher_pa: f64,
        higher_ohm: f64,
    },
    #[error("point {index}: {source}")]
    BadPoint { index: usize, source: UnitError },
    #[error("onset pressure {onset} Pa lies above the first calibration point {first} Pa")]
    OnsetAbovePoints { onset: f64, first: f64 },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("timestamp {requested} s precedes previous update at {previous} s")]
    TimeReversed { previous: f64, requested: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub pressure: Pressure,
    pub resistance: Resistance,
}

impl CalibrationPoint {
    /// Both values must be finite and strictly positive.
    pub fn new(pressure_pa: f64, resistance_ohm: f64) -> Result<Self, UnitError> {
        if !(pressure_pa > 0.0) {
            return Err(UnitError::OutOfDomain {
                quantity: "calibration pressure",
                value: pressure_pa,
            });
        }
        Ok(CalibrationPoint {
            pressure: Pressure::new(pressure_pa)?,
            resistance: Resistance::ohms(resistance_ohm)?,
        })
    }

    pub fn ohms(&self) -> f64 {
        self.resistance.as_ohms().expect("calibration points are finite")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Knot {
    pressure: f64,
    ohms: f64,
    ln_ohms: f64,
}

/// Fitted monotone pressure → resistance map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileFile", into = "ProfileFile")]
pub struct CalibrationProfile {
    name: String,
    points: Vec<CalibrationPoint>,
    onset: Pressure,
    fit_r2: f64,
    knots: Vec<Knot>,
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    name: String,
    onset_pressure_pa: f64,
    fit_r2: f64,
    points: Vec<CalibrationPoint>,
}

impl TryFrom<ProfileFile> for CalibrationProfile {
    type Error = CalibrationError;
    fn try_from(f: ProfileFile) -> Result<Self, Self::Error> {
        let onset =
            Pressure::new(f.onset_pressure_pa).map_err(|source| CalibrationError::BadPoint { index: 0, source })?;
        fit_profile(&f.name, &f.points, onset)
    }
}

impl From<CalibrationProfile> for ProfileFile {
    fn from(p: CalibrationProfile) -> Self {
        ProfileFile {
            name: p.name,
            onset_pressure_pa: p.onset.pascals(),
            fit_r2: p.fit_r2,
            points: p.points,
        }
    }
}

/// Fit a profile: sort by pressure, average duplicate pressures, then
/// interpolate ln(resistance) piecewise-linearly.
pub fn fit_profile(
    name: &str,
    points: &[CalibrationPoint],
    onset: Pressure,
) -> Result<CalibrationProfile, CalibrationError> {
    let mut sorted: Vec<CalibrationPoint> = points.to_vec();
    sorted.sort_by(|a, b| a.pressure.pascals().total_cmp(&b.pressure.pascals()));

    let mut merged: Vec<CalibrationPoint> = Vec::with_capacity(sorted.len());
    let mut i = 0;
    while i < sorted.len() {
        let p = sorted[i].pressure;
        let group: Vec<f64> = sorted[i..]
            .iter()
            .take_while(|pt| pt.pressure == p)
            .map(CalibrationPoint::ohms)
            .collect();
        let mean = group.iter().sum::<f64>() / group.len() as f64;
        merged.push(CalibrationPoint {
            pressure: p,
            resistance: Resistance::ohms(mean).map_err(|source| CalibrationError::BadPoint {
                index: merged.len(),
                source,
            })?,
        });
        i += group.len();
    }

    if merged.len() < 2 {
        return Err(CalibrationError::TooFewPoints(merged.len()));
    }
    for w in merged.windows(2) {
        if w[1].ohms() > w[0].ohms() {
            return Err(CalibrationError::NonMonotone {
                lower_pa: w[0].pressure.pascals(),
                lower_ohm: w[0].ohms(),
                higher_pa: w[1].pressure.pascals(),
                higher_ohm: w[1].ohms(),
            });
        }
    }
    if onset > merged[0].pressure {
        return Err(CalibrationError::OnsetAbovePoints {
            onset: onset.pascals(),
            first: merged[0].pressure.pascals(),
        });
    }

    let knots: Vec<Knot> = merged
        .iter()
        .map(|pt| Knot {
            pressure: pt.pressure.pascals(),
            ohms: pt.ohms(),
            ln_ohms: pt.ohms().ln(),
        })
        .collect();
    let mut profile = CalibrationProfile {
        name: name.to_owned(),
        points: merged,
        onset,
        fit_r2: 1.0,
        knots,
    };
    profile.fit_r2 = profile.log_r2(points);
    Ok(profile)
}

impl CalibrationProfile {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// De-duplicated points in increasing pressure order.
    pub fn points(&self) -> &[CalibrationPoint] {
        &self.points
    }

    pub fn onset_pressure(&self) -> Pressure {
        self.onset
    }

    pub fn max_pressure(&self) -> Pressure {
        self.points[self.points.len() - 1].pressure
    }

    pub fn fit_r2(&self) -> f64 {
        self.fit_r2
    }

    /// Largest finite resistance the sensor reports (first calibration point).
    pub fn idle_ohms(&self) -> f64 {
        self.points[0].ohms()
    }

    /// Smallest resistance the sensor reports (last calibration point).
    pub fn min_ohms(&self) -> f64 {
        self.points[self.points.len() - 1].ohms()
    }

    /// Coefficient of determination of the model's ln R against the given raw points.
    fn log_r2(&self, raw: &[CalibrationPoint]) -> f64 {
        let observed: Vec<f64> = raw.iter().map(|p| p.ohms().ln()).collect();
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
        let ss_res: f64 = raw
            .iter()
            .zip(&observed)
            .map(|(p, y)| (self.ln_ohms_at(p.pressure.pascals()) - y).powi(2))
            .sum();
        if ss_tot == 0.0 {
            if ss_res == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
        }
    }

    /// ln R of the curve at a pressure at or above onset, clamped to the end points.
    fn ln_ohms_at(&self, p: f64) -> f64 {
        self.ohms_at(p).ln()
    }

    /// Resistance on the curve, exact at the knots.
    fn ohms_at(&self, p: f64) -> f64 {
        let k = &self.knots;
        if p <= k[0].pressure {
            return k[0].ohms;
        }
        let last = k[k.len() - 1];
        if p >= last.pressure {
            return last.ohms;
        }
        let j = k.partition_point(|kn| kn.pressure <= p);
        let (a, b) = (k[j - 1], k[j]);
        if p == a.pressure {
            return a.ohms;
        }
        let frac = (p - a.pressure) / (b.pressure - a.pressure);
        (a.ln_ohms + frac * (b.ln_ohms - a.ln_ohms)).exp()
    }

    /// Static (settled) resistance at a pressure.
    pub fn static_resistance(&self, pressure: Pressure) -> Resistance {
        if pressure < self.onset {
            return Resistance::OPEN_CIRCUIT;
        }
        Resistance::ohms(self.ohms_at(pressure.pascals())).expect("interpolated resistance is finite")
    }

    /// Invert the static curve.
    pub fn pressure_for(&self, resistance: Resistance) -> StaticInverse {
        let Some(ohms) = resistance.as_ohms() else {
            return StaticInverse::BelowOnset;
        };
        let k = &self.knots;
        let target = ohms.ln();
        if target > k[0].ln_ohms {
            return StaticInverse::BelowOnset;
        }
        if target == k[0].ln_ohms {
            return StaticInverse::Within(self.points[0].pressure);
        }
        let last = k[k.len() - 1];
        if target <= last.ln_ohms {
            return StaticInverse::Saturated(self.max_pressure());
        }
        // ln R is non-increasing: knots[..j] >= target > knots[j..]
        let j = k.partition_point(|kn| kn.ln_ohms >= target);
        let (a, b) = (k[j - 1], k[j]);
        let frac = (a.ln_ohms - target) / (a.ln_ohms - b.ln_ohms);
        let p = a.pressure + frac * (b.pressure - a.pressure);
        StaticInverse::Within(Pressure::new(p.clamp(a.pressure, b.pressure)).expect("between two knots"))
    }
}

/// Result of inverting the static curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticInverse {
    /// Resistance above the idle level: the sensor is not loaded past onset.
    BelowOnset,
    Within(Pressure),
    /// Resistance at or below the full-load level.
    Saturated(Pressure),
}

impl StaticInverse {
    /// Pressure estimate, reporting below-onset as zero.
    pub fn pressure(self) -> Pressure {
        match self {
            StaticInverse::BelowOnset => Pressure::ZERO,
            StaticInverse::Within(p) | StaticInverse::Saturated(p) => p,
        }
    }
}

pub fn static_resistance(profile: &CalibrationProfile, pressure: Pressure) -> Resistance {
    profile.static_resistance(pressure)
}

fn points_from(pairs: &[(f64, f64)]) -> Vec<CalibrationPoint> {
    pairs
        .iter()
        .map(|&(p, r)| CalibrationPoint::new(p, r).expect("built-in points are valid"))
        .collect()
}

fn default_onset() -> Pressure {
    Pressure::new(DEFAULT_ONSET_PA).expect("constant")
}

/// Profile fitted on the bench calibration sweep.
pub fn table44_profile() -> CalibrationProfile {
    fit_profile("table44", &points_from(&CALIBRATION_SWEEP), default_onset()).expect("built-in profile")
}

/// Two-point profile from the datasheet range endpoints.
pub fn specsheet_profile() -> CalibrationProfile {
    fit_profile("specsheet", &points_from(&SPEC_SHEET_ENDPOINTS), default_onset()).expect("built-in profile")
}

/// Profile of the fabricated sensor as seen in the bench time-series log.
pub fn bench_profile() -> CalibrationProfile {
    let records: Vec<(f64, f64)> = BENCH_LOG.iter().map(|&(_, p, r)| (p, r)).collect();
    profile_from_log("bench", &records, default_onset()).expect("built-in profile")
}

/// Built-in commercial FSR profile for comparison runs.
pub fn fsr_reference_profile() -> CalibrationProfile {
    fit_profile("fsr", &points_from(&FSR_LEVELS), default_onset()).expect("built-in profile")
}

/// Fit a profile from time-ordered (pressure, resistance) log records, keeping the
/// first occurrence of each distinct resistance level.
pub fn profile_from_log(
    name: &str,
    records: &[(f64, f64)],
    onset: Pressure,
) -> Result<CalibrationProfile, CalibrationError> {
    let mut seen: Vec<f64> = Vec::new();
    let mut points = Vec::new();
    for (index, &(p, r)) in records.iter().enumerate() {
        if seen.contains(&r) {
            continue;
        }
        seen.push(r);
        points.push(CalibrationPoint::new(p, r).map_err(|source| CalibrationError::BadPoint { index, source })?);
    }
    fit_profile(name, &points, onset)
}

pub const BUILTIN_PROFILES: [&str; 4] = ["table44", "specsheet", "bench", "fsr"];

pub fn builtin_profile(name: &str) -> Option<CalibrationProfile> {
    match name {
        "table44" => Some(table44_profile()),
        "specsheet" => Some(specsheet_profile()),
        "bench" => Some(bench_profile()),
        "fsr" => Some(fsr_reference_profile()),
        _ => None,
    }
}

/// Read calibration points from CSV with header `pressure_pa,resistance_ohm`.
pub fn read_calibration_csv<R: BufRead>(reader: R) -> Result<Vec<CalibrationPoint>, CalibrationError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(1, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["pressure_pa", "resistance_ohm"] {
        return Err(CalibrationError::Parse {
            line: 1,
            message: format!(
                "expected header `pressure_pa,resistance_ohm`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut points = Vec::new();
    for (index, record) in rdr.records().enumerate() {
        let line = index as u64 + 2;
        let record = record.map_err(|e| csv_error(line, e))?;
        let field = |i: usize| -> Result<f64, CalibrationError> {
            record
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CalibrationError::Parse {
                    line,
                    message: format!("column {} is not a number", i + 1),
                })
        };
        let (p, r) = (field(0)?, field(1)?);
        points.push(CalibrationPoint::new(p, r).map_err(|e| CalibrationError::Parse {
            line,
            message: e.to_string(),
        })?);
    }
    Ok(points)
}

fn csv_error(line: u64, e: csv::Error) -> CalibrationError {
    let line = e.position().map(|p| p.line()).unwrap_or(line);
    CalibrationError::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn write_calibration_csv<W: Write>(mut w: W, points: &[CalibrationPoint]) -> std::io::Result<()> {
    writeln!(w, "pressure_pa,resistance_ohm")?;
    for pt in points {
        writeln!(w, "{},{}", pt.pressure.pascals(), pt.ohms())?;
    }
    Ok(())
}

/// Dynamic parameters of one sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    /// Time constant when resistance falls (loading), s.
    pub tau_load: f64,
    /// Time constant when resistance rises (unloading), s.
    pub tau_recover: f64,
    /// Play operator half-width, Pa.
    pub hysteresis_halfwidth: f64,
    /// Simulation step used by characterization runs, s.
    pub sample_period: f64,
}

impl DynamicsConfig {
    /// Fabricated-sensor dynamics scaled to a profile's pressure span.
    ///
    /// Transition times are read as 10–90 % times of a first-order system, so
    /// τ = t / ln 9. The play half-width is half the full-scale loop width.
    pub fn for_profile(profile: &CalibrationProfile) -> Self {
        DynamicsConfig {
            tau_load: RESPONSE_TIME / 9f64.ln(),
            tau_recover: RECOVERY_TIME / 9f64.ln(),
            hysteresis_halfwidth: hysteresis_halfwidth(profile),
            sample_period: 1e-3,
        }
    }

    /// Near-instant electrical response used for the commercial FSR.
    pub fn fast(profile: &CalibrationProfile) -> Self {
        DynamicsConfig {
            tau_load: 1e-3,
            tau_recover: 1e-3,
            ..Self::for_profile(profile)
        }
    }
}

fn hysteresis_halfwidth(profile: &CalibrationProfile) -> f64 {
    0.5 * HYSTERESIS_FRACTION * (profile.max_pressure().pascals() - profile.onset_pressure().pascals())
}

/// State of one simulated sensor between updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorState {
    pub effective_pressure: Pressure,
    pub lagged_resistance: Resistance,
    pub last_timestamp: f64,
}

impl SensorState {
    /// Unloaded sensor at time `t0`.
    pub fn unloaded(t0: f64) -> Self {
        SensorState {
            effective_pressure: Pressure::ZERO,
            lagged_resistance: Resistance::OPEN_CIRCUIT,
            last_timestamp: t0,
        }
    }
}

/// Play (backlash) operator: the output moves only when the input leaves the
/// dead band `[output - h, output + h]`.
pub fn play(previous: f64, input: f64, halfwidth: f64) -> f64 {
    previous.max(input - halfwidth).min(input + halfwidth).max(0.0)
}

/// Advance one sensor to `timestamp` under `applied` pressure.
pub fn step(
    state: &SensorState,
    applied: Pressure,
    timestamp: f64,
    profile: &CalibrationProfile,
    dynamics: &DynamicsConfig,
) -> Result<(SensorState, Resistance), SensorError> {
    let dt = timestamp - state.last_timestamp;
    if dt < 0.0 || dt.is_nan() {
        return Err(SensorError::TimeReversed {
            previous: state.last_timestamp,
            requested: timestamp,
        });
    }
    let eff = play(
        state.effective_pressure.pascals(),
        applied.pascals(),
        dynamics.hysteresis_halfwidth,
    );
    let effective_pressure = Pressure::new(eff).expect("play output is finite and non-negative");
    let target = profile.static_resistance(effective_pressure);

    let lagged = match target.as_ohms() {
        // release below onset: no lag
        None => Resistance::OPEN_CIRCUIT,
        Some(target_ohms) => {
            let current = state.lagged_resistance.as_ohms().unwrap_or_else(|| profile.idle_ohms());
            let tau = if target_ohms < current {
                dynamics.tau_load
            } else {
                dynamics.tau_recover
            };
            // first-order lag on ln R; exact target once the decay underflows
            let decay = (-dt / tau).exp();
            let lagged = target_ohms * (decay * (current / target_ohms).ln()).exp();
            Resistance::ohms(lagged).expect("between two finite resistances")
        }
    };
    let next = SensorState {
        effective_pressure,
        lagged_resistance: lagged,
        last_timestamp: timestamp,
    };
    Ok((next, lagged))
}

/// Model-derived figures of merit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub profile: String,
    pub onset_pressure_pa: f64,
    pub max_pressure_pa: f64,
    pub resistance_at_onset_ohm: f64,
    pub resistance_at_max_ohm: f64,
    /// |ΔP| / |ΔR| over [onset, max]; `None` when resistance does not change.
    pub sensitivity_pa_per_ohm: Option<f64>,
    /// |ΔR| / |ΔP| over [onset, max].
    pub sensitivity_ohm_per_pa: f64,
    pub datasheet_sensitivity_pa_per_ohm: f64,
    /// Whether the computed Pa/Ω figure agrees with the datasheet within 10 %.
    pub sensitivity_matches_datasheet: bool,
    /// 10–90 % time for a step from zero to full load, s.
    pub response_time_s: Option<f64>,
    /// 10–90 % time for a step from full load down to onset, s.
    pub recovery_time_s: Option<f64>,
    /// Quasi-static loop width as a percentage of the pressure span.
    pub hysteresis_percent: f64,
    pub threshold_band: f64,
    pub fit_r2: f64,
}

pub fn characterize(profile: &CalibrationProfile, dynamics: &DynamicsConfig) -> Characterization {
    let onset = profile.onset_pressure();
    let max = profile.max_pressure();
    let r_onset = profile
        .static_resistance(onset)
        .as_ohms()
        .expect("onset is on the curve");
    let r_max = profile.static_resistance(max).as_ohms().expect("max is on the curve");
    let dp = max.pascals() - onset.pascals();
    let dr = (r_onset - r_max).abs();
    let pa_per_ohm = (dr > 0.0).then(|| dp / dr);

    Characterization {
        profile: profile.name().to_owned(),
        onset_pressure_pa: onset.pascals(),
        max_pressure_pa: max.pascals(),
        resistance_at_onset_ohm: r_onset,
        resistance_at_max_ohm: r_max,
        sensitivity_pa_per_ohm: pa_per_ohm,
        sensitivity_ohm_per_pa: if dp > 0.0 { dr / dp } else { 0.0 },
        datasheet_sensitivity_pa_per_ohm: DATASHEET_SENSITIVITY_PA_PER_OHM,
        sensitivity_matches_datasheet: pa_per_ohm
            .is_some_and(|s| (s - DATASHEET_SENSITIVITY_PA_PER_OHM).abs() <= 0.1 * DATASHEET_SENSITIVITY_PA_PER_OHM),
        response_time_s: transition_time(profile, dynamics, Pressure::ZERO, max),
        recovery_time_s: transition_time(profile, dynamics, max, onset),
        hysteresis_percent: hysteresis_percent(profile, dynamics),
        threshold_band: THRESHOLD_BAND,
        fit_r2: profile.fit_r2(),
    }
}

/// Simulated 10–90 % transition time for a pressure step, measured on ln R.
///
/// The sensor is first settled at `from`; the step is applied at t = 0 and
/// sampled at `dynamics.sample_period`. Crossing times are linearly
/// interpolated between samples. Returns `None` when the step does not change
/// the output or the output ends open circuit.
pub fn transition_time(
    profile: &CalibrationProfile,
    dynamics: &DynamicsConfig,
    from: Pressure,
    to: Pressure,
) -> Option<f64> {
    let tau = dynamics.tau_load.max(dynamics.tau_recover);
    let settle = 100.0 * tau;
    let mut state = SensorState::unloaded(-settle);
    let (s, r0) = step(&state, from, 0.0, profile, dynamics).ok()?;
    state = s;
    // leaving open circuit, the lag starts from the idle level
    let start = r0.as_ohms().unwrap_or(profile.idle_ohms()).ln();

    let horizon = 20.0 * tau;
    let n = (horizon / dynamics.sample_period).ceil() as usize;
    let mut trace = Vec::with_capacity(n + 1);
    trace.push((0.0, start));
    for i in 1..=n {
        let t = i as f64 * dynamics.sample_period;
        let (s, r) = step(&state, to, t, profile, dynamics).ok()?;
        state = s;
        trace.push((t, r.as_ohms()?.ln()));
    }
    let end = trace.last()?.1;
    let span = end - start;
    if span == 0.0 {
        return None;
    }
    let crossing = |level: f64| -> Option<f64> {
        let goal = start + level * span;
        trace.windows(2).find_map(|w| {
            let (t0, y0) = w[0];
            let (t1, y1) = w[1];
            let (d0, d1) = ((y0 - goal) * span.signum(), (y1 - goal) * span.signum());
            (d0 < 0.0 && d1 >= 0.0).then(|| t0 + (t1 - t0) * (-d0) / (d1 - d0))
        })
    };
    Some(crossing(0.9)? - crossing(0.1)?)
}

/// Quasi-static hysteresis: triangular sweep onset → max → onset, each point
/// held until settled. The loop width at each applied pressure is the
/// difference of the equivalent (inverse static) pressures on the unloading and
/// loading branches; the result is the widest loop as a percentage of span.
pub fn hysteresis_percent(profile: &CalibrationProfile, dynamics: &DynamicsConfig) -> f64 {
    const STEPS: usize = 200;
    let lo = profile.onset_pressure().pascals();
    let hi = profile.max_pressure().pascals();
    let span = hi - lo;
    if span <= 0.0 {
        return 0.0;
    }
    let hold = 60.0 * dynamics.tau_load.max(dynamics.tau_recover);
    let applied = |i: usize| Pressure::new(lo + span * i as f64 / STEPS as f64).expect("in range");

    let mut state = SensorState::unloaded(0.0);
    let mut t = 0.0;
    let mut run = |p: Pressure| -> Resistance {
        t += hold;
        let (s, r) = step(&state, p, t, profile, dynamics).expect("time increases");
        state = s;
        r
    };
    let loading: Vec<Resistance> = (0..=STEPS).map(|i| run(applied(i))).collect();
    let unloading: Vec<Resistance> = (0..=STEPS).rev().map(|i| run(applied(i))).collect();

    let mut widest: f64 = 0.0;
    for i in 0..=STEPS {
        let up = profile.pressure_for(loading[i]);
        let down = profile.pressure_for(unloading[STEPS - i]);
        if let (StaticInverse::Within(a), StaticInverse::Within(b)) = (up, down) {
            // the flat idle plateau has no unique inverse
            if a == profile.points()[0].pressure || b == profile.points()[0].pressure {
                continue;
            }
            widest = widest.max((b.pascals() - a.pascals()).abs());
        }
    }
    100.0 * widest / span
}
