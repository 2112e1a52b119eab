//! Side-by-side response of the fabricated sensor and a commercial FSR.

use serde::{Deserialize, Serialize};

use crate::sensor::{self, play, CalibrationProfile, DynamicsConfig, SensorState, StaticInverse};
use crate::units::{Pressure, Resistance};

/// Published resistance readings over 14 one-second steps:
/// (t s, fabricated sensor kΩ, FSR kΩ).
pub const COMPARISON_TABLE: [(f64, f64, f64); 14] = [
    (0.0, 3342.9, 3342.9),
    (1.0, 3342.9, 3342.9),
    (2.0, 3342.9, 3342.9),
    (3.0, 3342.9, 3342.9),
    (4.0, 3342.9, 123.81111),
    (5.0, 29.16212, 123.81111),
    (6.0, 29.16212, 123.81111),
    (7.0, 29.16212, 3342.9),
    (8.0, 29.16212, 3342.9),
    (9.0, 29.16212, 3342.9),
    (10.0, 3342.9, 3342.9),
    (11.0, 3342.9, 2051.325),
    (12.0, 3342.9, 2051.325),
    (13.0, 3342.9, 2051.325),
];

/// Applied pressure on each sensor at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusRow {
    pub t_s: f64,
    pub sensor_pa: f64,
    pub fsr_pa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub t_s: f64,
    pub sensor_ohm: f64,
    pub fsr_ohm: f64,
}

/// Drive both sensor models with the stimulus.
///
/// Negative or non-finite stimulus values count as no load. Open circuit is
/// reported as the profile's idle resistance, which is how a
/// bench meter shows an unloaded sensor.
pub fn compare_sensors(
    stimulus: &[StimulusRow],
    sensor: (&CalibrationProfile, &DynamicsConfig),
    fsr: (&CalibrationProfile, &DynamicsConfig),
) -> Vec<ComparisonRow> {
    let t0 = stimulus.first().map_or(0.0, |r| r.t_s);
    let mut states = [SensorState::unloaded(t0), SensorState::unloaded(t0)];
    let models = [sensor, fsr];
    let mut rows = Vec::with_capacity(stimulus.len());
    for row in stimulus {
        let mut out = [0.0; 2];
        for (k, applied) in [row.sensor_pa, row.fsr_pa].into_iter().enumerate() {
            let (profile, dynamics) = models[k];
            let applied = Pressure::saturating(applied).unwrap_or(Pressure::ZERO);
            // time steps run forward; a repeated or earlier time is held
            let t = row.t_s.max(states[k].last_timestamp);
            let (next, r) = sensor::step(&states[k], applied, t, profile, dynamics).expect("time is non-decreasing");
            states[k] = next;
            out[k] = r.as_ohms().unwrap_or_else(|| profile.idle_ohms());
        }
        rows.push(ComparisonRow {
            t_s: row.t_s,
            sensor_ohm: out[0],
            fsr_ohm: out[1],
        });
    }
    rows
}

/// Recover one sensor's applied pressure series from its resistance readings.
///
/// Each reading is mapped to the pressure the static curve needs, then offset
/// by the play half-width in the direction of travel so the hysteresis
/// operator lands exactly on it. Idle readings become zero load.
fn reconstruct_column(readings_ohm: &[f64], profile: &CalibrationProfile, dynamics: &DynamicsConfig) -> Vec<f64> {
    let h = dynamics.hysteresis_halfwidth;
    let mut effective = 0.0;
    readings_ohm
        .iter()
        .map(|&ohms| {
            let applied = if ohms >= profile.idle_ohms() {
                0.0
            } else {
                let target = match profile.pressure_for(Resistance::ohms(ohms).expect("finite reading")) {
                    StaticInverse::BelowOnset => 0.0,
                    inverse => inverse.pressure().pascals(),
                };
                if target > effective {
                    target + h
                } else if target < effective {
                    (target - h).max(0.0)
                } else {
                    effective
                }
            };
            effective = play(effective, applied, h);
            applied
        })
        .collect()
}

/// Stimulus that reproduces a table of (t s, sensor Ω, FSR Ω) readings.
pub fn reconstruct_stimulus(
    readings: &[(f64, f64, f64)],
    sensor: (&CalibrationProfile, &DynamicsConfig),
    fsr: (&CalibrationProfile, &DynamicsConfig),
) -> Vec<StimulusRow> {
    let s: Vec<f64> = readings.iter().map(|r| r.1).collect();
    let f: Vec<f64> = readings.iter().map(|r| r.2).collect();
    let s = reconstruct_column(&s, sensor.0, sensor.1);
    let f = reconstruct_column(&f, fsr.0, fsr.1);
    readings
        .iter()
        .zip(s.into_iter().zip(f))
        .map(|(r, (sensor_pa, fsr_pa))| StimulusRow {
            t_s: r.0,
            sensor_pa,
            fsr_pa,
        })
        .collect()
}

/// Profiles and dynamics used for the standard comparison run.
pub fn standard_models() -> [(CalibrationProfile, DynamicsConfig); 2] {
    let bench = sensor::bench_profile();
    let fsr = sensor::fsr_reference_profile();
    let bench_dyn = DynamicsConfig::for_profile(&bench);
    let fsr_dyn = DynamicsConfig::fast(&fsr);
    [(bench, bench_dyn), (fsr, fsr_dyn)]
}

/// Stimulus behind the published comparison table.
pub fn table_stimulus() -> Vec<StimulusRow> {
    let [(bench, bench_dyn), (fsr, fsr_dyn)] = standard_models();
    let readings: Vec<_> = COMPARISON_TABLE
        .iter()
        .map(|&(t, s, f)| (t, s * 1e3, f * 1e3))
        .collect();
    reconstruct_stimulus(&readings, (&bench, &bench_dyn), (&fsr, &fsr_dyn))
}
