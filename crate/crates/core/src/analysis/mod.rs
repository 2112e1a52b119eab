//! Online gait phase detection and gait-quality metrics.
//!
//! Per-region contact comes from a Schmitt trigger on the regional pressure.
//! Phases are classified from the contact pattern and the previous phase, and
//! an [`Analyzer`] folds samples one at a time into events and a report.

pub mod compare;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensor::THRESHOLD_BAND;
use crate::synth::{GaitPhase, PressureSample};
use crate::units::Region;

pub use compare::{compare_sensors, reconstruct_stimulus, ComparisonRow, StimulusRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("sample {index}: timestamp {timestamp} s does not follow {previous} s")]
    Unordered { index: u64, timestamp: f64, previous: f64 },
}

/// How a region's channels are combined into one pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Contact pressure the Schmitt band is centred on, Pa.
    pub contact_base_pa: f64,
    /// Half-width of the band as a fraction of the base.
    pub band: f64,
    pub reduction: Reduction,
    /// Heel-only time after which initial contact becomes loading response, s.
    pub loading_dwell_s: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            contact_base_pa: 20_000.0,
            band: THRESHOLD_BAND,
            reduction: Reduction::Max,
            loading_dwell_s: 0.030,
        }
    }
}

impl AnalysisConfig {
    pub fn on_threshold(&self) -> f64 {
        self.contact_base_pa * (1.0 + self.band)
    }

    pub fn off_threshold(&self) -> f64 {
        self.contact_base_pa * (1.0 - self.band)
    }
}

pub fn region_pressure(sample: &PressureSample, region: Region, reduction: Reduction) -> f64 {
    let values = region.channels().iter().map(|&ch| sample.channels[ch].pascals());
    match reduction {
        Reduction::Max => values.fold(0.0, f64::max),
        Reduction::Mean => values.sum::<f64>() / region.channels().len() as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContactState {
    pub heel_on: bool,
    pub midfoot_on: bool,
    pub forefoot_on: bool,
}

impl ContactState {
    fn get(&self, region: Region) -> bool {
        match region {
            Region::Forefoot => self.forefoot_on,
            Region::Midfoot => self.midfoot_on,
            Region::Heel => self.heel_on,
        }
    }

    fn set(&mut self, region: Region, on: bool) {
        match region {
            Region::Forefoot => self.forefoot_on = on,
            Region::Midfoot => self.midfoot_on = on,
            Region::Heel => self.heel_on = on,
        }
    }

    pub fn any(&self) -> bool {
        self.heel_on || self.midfoot_on || self.forefoot_on
    }
}

/// Schmitt-trigger update of the contact state.
pub fn contact_state(sample: &PressureSample, previous: ContactState, config: &AnalysisConfig) -> ContactState {
    let mut next = previous;
    for region in Region::ALL {
        let p = region_pressure(sample, region, config.reduction);
        if p >= config.on_threshold() {
            next.set(region, true);
        } else if p <= config.off_threshold() {
            next.set(region, false);
        } else {
            next.set(region, previous.get(region));
        }
    }
    next
}

/// Phase suggested by a contact pattern given the previous phase.
///
/// `time_in_previous` is how long the previous phase has lasted; it drives the
/// initial-contact to loading-response split when the midfoot is slow to load.
pub fn classify_phase(
    state: ContactState,
    previous: GaitPhase,
    time_in_previous: f64,
    config: &AnalysisConfig,
) -> GaitPhase {
    use GaitPhase::*;
    let ContactState {
        heel_on: heel,
        midfoot_on: mid,
        forefoot_on: fore,
    } = state;
    let candidate = match (heel, mid, fore) {
        (false, false, false) => Swing,
        // any heel contact out of swing is a strike
        (true, _, _) if previous == Swing => InitialContact,
        (true, false, false) => match previous {
            InitialContact if time_in_previous + 1e-9 >= config.loading_dwell_s => LoadingResponse,
            InitialContact => InitialContact,
            _ => LoadingResponse,
        },
        (true, true, _) if previous == InitialContact => LoadingResponse,
        (true, true, _) | (false, true, false) | (true, false, true) => MidStance,
        (false, true, true) => TerminalStance,
        (false, false, true) => PreSwing,
    };
    // no stepping backwards within one stance
    if candidate.is_stance() && previous.is_stance() && candidate.ordinal() < previous.ordinal() {
        previous
    } else {
        candidate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "phase")]
pub enum EventKind {
    HeelStrike,
    ToeOff,
    PhaseTransition(GaitPhase),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitEvent {
    pub kind: EventKind,
    pub timestamp: f64,
    /// Index of the stance (heel strike count minus one) the event belongs to.
    pub cycle_index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionPeaks {
    pub forefoot_pa: f64,
    pub midfoot_pa: f64,
    pub heel_pa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseDurations {
    pub initial_contact_s: Option<f64>,
    pub loading_response_s: Option<f64>,
    pub mid_stance_s: Option<f64>,
    pub terminal_stance_s: Option<f64>,
    pub pre_swing_s: Option<f64>,
    pub swing_s: Option<f64>,
}

impl PhaseDurations {
    fn from_means(means: [Option<f64>; 6]) -> Self {
        PhaseDurations {
            initial_contact_s: means[0],
            loading_response_s: means[1],
            mid_stance_s: means[2],
            terminal_stance_s: means[3],
            pre_swing_s: means[4],
            swing_s: means[5],
        }
    }

    pub fn get(&self, phase: GaitPhase) -> Option<f64> {
        match phase {
            GaitPhase::InitialContact => self.initial_contact_s,
            GaitPhase::LoadingResponse => self.loading_response_s,
            GaitPhase::MidStance => self.mid_stance_s,
            GaitPhase::TerminalStance => self.terminal_stance_s,
            GaitPhase::PreSwing => self.pre_swing_s,
            GaitPhase::Swing => self.swing_s,
        }
    }
}

/// Aggregate gait metrics. Field names are the JSON schema.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GaitReport {
    pub samples: u64,
    /// Complete cycles: heel strike → toe off → next heel strike → toe off.
    pub cycles: u32,
    pub heel_strikes: u32,
    pub toe_offs: u32,
    /// Steps per minute (two steps per stride).
    pub cadence_steps_per_min: Option<f64>,
    pub stance_fraction_mean: Option<f64>,
    pub stance_fraction_stddev: Option<f64>,
    pub peak_pressure: RegionPeaks,
    pub phase_mean_duration: PhaseDurations,
    pub violations: u32,
}

#[derive(Debug, Clone, Copy, Default)]
struct Running {
    sum: f64,
    sum_sq: f64,
    count: u32,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.count += 1;
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    fn stddev(&self) -> Option<f64> {
        let mean = self.mean()?;
        Some((self.sum_sq / self.count as f64 - mean * mean).max(0.0).sqrt())
    }
}

/// Single-pass gait analyzer with constant memory.
#[derive(Debug, Clone)]
pub struct Analyzer {
    config: AnalysisConfig,
    contact: ContactState,
    phase: GaitPhase,
    phase_entered: Option<f64>,
    seen_transition: bool,
    last_timestamp: Option<f64>,
    samples: u64,
    heel_strikes: u32,
    toe_offs: u32,
    violations: u32,
    /// Latest heel strike not yet closed by a toe off. A later strike
    /// replaces it, so a spurious strike in swing is discarded and a stance
    /// that loses contact before push-off still closes at the toe off.
    open_stance: Option<f64>,
    /// (heel strike, toe off) of the last stance that reached toe off.
    last_stance: Option<(f64, f64)>,
    strides: Running,
    stance_fractions: Running,
    phase_durations: [Running; 6],
    peaks: RegionPeaks,
}

impl Analyzer {
    pub fn new(config: AnalysisConfig) -> Self {
        Analyzer {
            config,
            contact: ContactState::default(),
            phase: GaitPhase::Swing,
            phase_entered: None,
            seen_transition: false,
            last_timestamp: None,
            samples: 0,
            heel_strikes: 0,
            toe_offs: 0,
            violations: 0,
            open_stance: None,
            last_stance: None,
            strides: Running::default(),
            stance_fractions: Running::default(),
            phase_durations: [Running::default(); 6],
            peaks: RegionPeaks::default(),
        }
    }

    pub fn phase(&self) -> GaitPhase {
        self.phase
    }

    pub fn contact(&self) -> ContactState {
        self.contact
    }

    /// Fold one sample. Returns the event it triggered, if any.
    pub fn push(&mut self, sample: &PressureSample) -> Result<Option<GaitEvent>, AnalysisError> {
        let t = sample.timestamp;
        if let Some(previous) = self.last_timestamp {
            if !(t > previous) {
                return Err(AnalysisError::Unordered {
                    index: self.samples,
                    timestamp: t,
                    previous,
                });
            }
        }
        self.last_timestamp = Some(t);
        self.samples += 1;

        let r = self.config.reduction;
        self.peaks.forefoot_pa = self.peaks.forefoot_pa.max(region_pressure(sample, Region::Forefoot, r));
        self.peaks.midfoot_pa = self.peaks.midfoot_pa.max(region_pressure(sample, Region::Midfoot, r));
        self.peaks.heel_pa = self.peaks.heel_pa.max(region_pressure(sample, Region::Heel, r));

        self.contact = contact_state(sample, self.contact, &self.config);
        let entered = *self.phase_entered.get_or_insert(t);
        let next = classify_phase(self.contact, self.phase, t - entered, &self.config);
        if next == self.phase {
            return Ok(None);
        }

        let previous = self.phase;
        // the segment the stream opened in was not observed from its start
        if self.seen_transition {
            self.phase_durations[previous.ordinal()].push(t - entered);
        }
        self.seen_transition = true;
        if next != previous.next() {
            self.violations += 1;
        }
        self.phase = next;
        self.phase_entered = Some(t);

        let kind = match (previous, next) {
            (GaitPhase::Swing, GaitPhase::InitialContact) => {
                self.heel_strikes += 1;
                self.open_stance = Some(t);
                EventKind::HeelStrike
            }
            (GaitPhase::PreSwing, GaitPhase::Swing) => {
                self.toe_offs += 1;
                self.close_stance(t);
                EventKind::ToeOff
            }
            (_, phase) => EventKind::PhaseTransition(phase),
        };
        Ok(Some(GaitEvent {
            kind,
            timestamp: t,
            cycle_index: self.heel_strikes.saturating_sub(1),
        }))
    }

    fn close_stance(&mut self, toe_off: f64) {
        let Some(strike) = self.open_stance.take() else {
            return;
        };
        if let Some((prev_strike, prev_toe_off)) = self.last_stance {
            let stride = strike - prev_strike;
            self.strides.push(stride);
            self.stance_fractions.push((prev_toe_off - prev_strike) / stride);
        }
        self.last_stance = Some((strike, toe_off));
    }

    pub fn report(&self) -> GaitReport {
        let cycles = self.strides.count;
        GaitReport {
            samples: self.samples,
            cycles,
            heel_strikes: self.heel_strikes,
            toe_offs: self.toe_offs,
            cadence_steps_per_min: (cycles > 0).then(|| 2.0 * cycles as f64 / (self.strides.sum / 60.0)),
            stance_fraction_mean: self.stance_fractions.mean(),
            stance_fraction_stddev: self.stance_fractions.stddev(),
            peak_pressure: self.peaks,
            phase_mean_duration: PhaseDurations::from_means(self.phase_durations.map(|r| r.mean())),
            violations: self.violations,
        }
    }
}

/// Analyze a whole stream.
pub fn analyze<'a>(
    samples: impl IntoIterator<Item = &'a PressureSample>,
    config: &AnalysisConfig,
) -> Result<(Vec<GaitEvent>, GaitReport), AnalysisError> {
    let mut analyzer = Analyzer::new(*config);
    let mut events = Vec::new();
    for sample in samples {
        events.extend(analyzer.push(sample)?);
    }
    Ok((events, analyzer.report()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{Channels, Pressure, SoleChannel};

    fn sample(t: f64, fore: f64, mid: f64, heel: f64) -> PressureSample {
        let p = |v: f64| Pressure::new(v).unwrap();
        PressureSample {
            timestamp: t,
            channels: Channels([p(fore), p(mid), p(0.0), p(0.0), p(heel)]),
        }
    }

    #[test]
    fn contact_examples() {
        let cfg = AnalysisConfig::default();
        let off = contact_state(&sample(0.0, 0.0, 0.0, 0.0), ContactState::default(), &cfg);
        assert!(!off.any());
        let heel = contact_state(&sample(0.0, 0.0, 0.0, 549e3), ContactState::default(), &cfg);
        assert_eq!(
            heel,
            ContactState {
                heel_on: true,
                midfoot_on: false,
                forefoot_on: false
            }
        );
    }

    #[test]
    fn dither_inside_band_never_toggles() {
        let cfg = AnalysisConfig::default();
        for start in [
            ContactState::default(),
            ContactState {
                heel_on: true,
                midfoot_on: true,
                forefoot_on: true,
            },
        ] {
            let mut state = start;
            for i in 0..100 {
                let v = if i % 2 == 0 { 19e3 } else { 21e3 };
                state = contact_state(&sample(i as f64, v, v, v), state, &cfg);
                assert_eq!(state, start);
            }
        }
    }

    #[test]
    fn mean_reduction() {
        let mut s = sample(0.0, 0.0, 0.0, 0.0);
        s.channels[SoleChannel::MidfootMedial] = Pressure::new(30e3).unwrap();
        assert_eq!(region_pressure(&s, Region::Midfoot, Reduction::Max), 30e3);
        assert_eq!(region_pressure(&s, Region::Midfoot, Reduction::Mean), 10e3);
    }

    #[test]
    fn classification_examples() {
        use GaitPhase::*;
        let cfg = AnalysisConfig::default();
        let st = |heel, mid, fore| ContactState {
            heel_on: heel,
            midfoot_on: mid,
            forefoot_on: fore,
        };
        assert_eq!(classify_phase(st(false, false, false), MidStance, 0.0, &cfg), Swing);
        assert_eq!(classify_phase(st(true, false, false), Swing, 0.0, &cfg), InitialContact);
        assert_eq!(
            classify_phase(st(false, false, true), TerminalStance, 0.0, &cfg),
            PreSwing
        );
        assert_eq!(
            classify_phase(st(true, false, false), InitialContact, 0.01, &cfg),
            InitialContact
        );
        assert_eq!(
            classify_phase(st(true, false, false), InitialContact, 0.03, &cfg),
            LoadingResponse
        );
        assert_eq!(
            classify_phase(st(true, true, false), InitialContact, 0.0, &cfg),
            LoadingResponse
        );
        assert_eq!(
            classify_phase(st(true, true, false), LoadingResponse, 0.0, &cfg),
            MidStance
        );
        assert_eq!(
            classify_phase(st(false, true, true), MidStance, 0.0, &cfg),
            TerminalStance
        );
        // backwards within stance is held
        assert_eq!(
            classify_phase(st(true, true, false), TerminalStance, 0.0, &cfg),
            TerminalStance
        );
    }

    #[test]
    fn empty_stream() {
        let (events, report) = analyze(&[], &AnalysisConfig::default()).unwrap();
        assert!(events.is_empty());
        assert_eq!(report.cycles, 0);
        assert_eq!(report.cadence_steps_per_min, None);
    }

    #[test]
    fn single_heel_burst() {
        let samples: Vec<_> = (0..20)
            .map(|i| {
                let heel = if (5..10).contains(&i) { 100e3 } else { 0.0 };
                sample(i as f64 * 0.01, 0.0, 0.0, heel)
            })
            .collect();
        let (events, report) = analyze(&samples, &AnalysisConfig::default()).unwrap();
        let strikes = events.iter().filter(|e| e.kind == EventKind::HeelStrike).count();
        assert_eq!(strikes, 1);
        assert_eq!(report.cycles, 0);
        assert_eq!(report.toe_offs, 0);
    }

    #[test]
    fn unordered_timestamps_rejected() {
        let samples = [
            sample(0.0, 0.0, 0.0, 0.0),
            sample(0.02, 0.0, 0.0, 0.0),
            sample(0.01, 0.0, 0.0, 0.0),
        ];
        assert_eq!(
            analyze(&samples, &AnalysisConfig::default()).unwrap_err(),
            AnalysisError::Unordered {
                index: 2,
                timestamp: 0.01,
                previous: 0.02
            }
        );
    }

    #[test]
    fn ramp_switches_once_each_way() {
        let cfg = AnalysisConfig::default();
        let mut state = ContactState::default();
        let mut toggles = 0;
        let levels: Vec<f64> = (0..=100).chain((0..100).rev()).map(|i| i as f64 * 1e3).collect();
        for (i, &v) in levels.iter().enumerate() {
            let next = contact_state(&sample(i as f64, 0.0, 0.0, v), state, &cfg);
            if next.heel_on != state.heel_on {
                toggles += 1;
            }
            state = next;
        }
        assert_eq!(toggles, 2);
    }
}
