//! Reference plantar pressure waveforms with a known phase structure.
//!
//! One cycle is one stride of one foot. Each region carries a raised-cosine
//! lobe: the heel loads first, the midfoot carries a broad hump through mid
//! stance, and the forefoot peaks at push-off. Every channel is exactly zero
//! during swing before noise is added.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{self, Channels, Pressure, SensorGeometry, SoleChannel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid gait parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GaitPhase {
    InitialContact,
    LoadingResponse,
    MidStance,
    TerminalStance,
    PreSwing,
    Swing,
}

impl GaitPhase {
    /// Cyclic order of one stride.
    pub const CYCLE: [GaitPhase; 6] = [
        GaitPhase::InitialContact,
        GaitPhase::LoadingResponse,
        GaitPhase::MidStance,
        GaitPhase::TerminalStance,
        GaitPhase::PreSwing,
        GaitPhase::Swing,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn next(self) -> GaitPhase {
        GaitPhase::CYCLE[(self.ordinal() + 1) % 6]
    }

    pub fn is_stance(self) -> bool {
        self != GaitPhase::Swing
    }
}

/// Plantar pressure on all five channels at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureSample {
    /// Seconds since session start.
    pub timestamp: f64,
    pub channels: Channels<Pressure>,
}

impl PressureSample {
    pub fn zero(timestamp: f64) -> Self {
        PressureSample {
            timestamp,
            channels: Channels([Pressure::ZERO; 5]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpan {
    pub phase: GaitPhase,
    /// Fraction of the cycle, inclusive.
    pub start: f64,
    /// Fraction of the cycle, exclusive.
    pub end: f64,
}

/// Contiguous phase spans covering one cycle `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimeline {
    spans: Vec<PhaseSpan>,
}

/// Stance sub-phase boundaries at the reference stance fraction of 0.6.
const REFERENCE_STANCE: f64 = 0.6;
const REFERENCE_BOUNDARIES: [f64; 5] = [0.0, 0.02, 0.12, 0.31, 0.50];

pub fn default_timeline(stance_fraction: f64) -> Result<PhaseTimeline, SynthError> {
    if !(stance_fraction > 0.0 && stance_fraction < 1.0) {
        return Err(SynthError::InvalidParams(format!(
            "stance fraction must lie in (0, 1), got {stance_fraction}"
        )));
    }
    let scale = stance_fraction / REFERENCE_STANCE;
    let mut bounds: Vec<f64> = REFERENCE_BOUNDARIES.iter().map(|b| b * scale).collect();
    bounds.push(stance_fraction);
    bounds.push(1.0);
    let spans = GaitPhase::CYCLE
        .iter()
        .enumerate()
        .map(|(i, &phase)| PhaseSpan {
            phase,
            start: bounds[i],
            end: bounds[i + 1],
        })
        .collect();
    Ok(PhaseTimeline { spans })
}

impl PhaseTimeline {
    pub fn spans(&self) -> &[PhaseSpan] {
        &self.spans
    }

    pub fn span(&self, phase: GaitPhase) -> PhaseSpan {
        self.spans[phase.ordinal()]
    }

    pub fn phase_at(&self, fraction: f64) -> GaitPhase {
        self.spans
            .iter()
            .find(|s| fraction < s.end)
            .map_or(GaitPhase::Swing, |s| s.phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    /// kg
    pub body_mass: f64,
    /// steps per minute (two steps per stride)
    pub cadence: f64,
    pub stance_fraction: f64,
    /// Hz
    pub sample_rate: f64,
    pub cycles: u32,
    /// Pa, standard deviation of additive noise
    pub noise_sigma: f64,
    pub seed: u64,
    /// Fraction of body weight a single sensor face sees at a share of 1.0.
    pub load_scale: f64,
    pub geometry: SensorGeometry,
}

impl Default for GaitParams {
    fn default() -> Self {
        GaitParams {
            body_mass: 70.0,
            cadence: 120.0,
            stance_fraction: 0.6,
            sample_rate: 100.0,
            cycles: 10,
            noise_sigma: 0.0,
            seed: 0,
            load_scale: 0.18,
            geometry: SensorGeometry::default(),
        }
    }
}

/// Peak load shares relative to the per-sensor body-weight pressure.
pub const HEEL_SHARE: f64 = 1.0;
pub const FOREFOOT_SHARE: f64 = 1.1;
pub const MIDFOOT_SHARE: f64 = 0.35;

impl GaitParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidParams(msg));
        if !(self.stance_fraction > 0.0 && self.stance_fraction < 1.0) {
            return bad(format!(
                "stance fraction must lie in (0, 1), got {}",
                self.stance_fraction
            ));
        }
        if !(self.cadence.is_finite() && self.cadence > 0.0) {
            return bad(format!("cadence must be positive, got {}", self.cadence));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate >= 20.0) {
            return bad(format!("sample rate must be at least 20 Hz, got {}", self.sample_rate));
        }
        if !(self.body_mass.is_finite() && self.body_mass >= 0.0) {
            return bad(format!("body mass must be non-negative, got {}", self.body_mass));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise sigma must be non-negative, got {}", self.noise_sigma));
        }
        if !(self.load_scale.is_finite() && self.load_scale >= 0.0) {
            return bad(format!("load scale must be non-negative, got {}", self.load_scale));
        }
        if !(self.geometry.area() > 0.0) {
            return bad("sensor area must be positive".into());
        }
        Ok(())
    }

    /// Stride duration, s.
    pub fn cycle_duration(&self) -> f64 {
        120.0 / self.cadence
    }

    pub fn sample_count(&self) -> usize {
        (self.cycles as f64 * self.cycle_duration() * self.sample_rate).round() as usize
    }

    /// Pressure on one sensor at a load share of 1.0, Pa.
    pub fn reference_pressure(&self) -> f64 {
        let force = units::force_from_mass(self.body_mass).expect("validated mass");
        units::pressure_from_force(force, &self.geometry)
            .expect("validated geometry")
            .pascals()
            * self.load_scale
    }
}

/// Raised-cosine lobe rising over `[start, peak]` and falling over `[peak, end]`.
fn lobe(u: f64, start: f64, peak: f64, end: f64) -> f64 {
    if u <= start || u >= end {
        0.0
    } else if u <= peak {
        0.5 * (1.0 - (PI * (u - start) / (peak - start)).cos())
    } else {
        0.5 * (1.0 + (PI * (u - peak) / (end - peak)).cos())
    }
}

/// Noise-free channel envelopes at cycle fraction `u`, Pa.
pub fn envelope(u: f64, timeline: &PhaseTimeline, reference: f64) -> Channels<f64> {
    use GaitPhase::*;
    let ic = timeline.span(InitialContact);
    let lr = timeline.span(LoadingResponse);
    let ts = timeline.span(TerminalStance);
    let ps = timeline.span(PreSwing);

    let heel = HEEL_SHARE * reference * lobe(u, ic.start, (ic.end + lr.end) / 2.0, ts.start);
    let mid = MIDFOOT_SHARE / 3.0 * reference * lobe(u, ic.end, (ic.end + ps.start) / 2.0, ps.start);
    let fore = FOREFOOT_SHARE * reference * lobe(u, ts.start, (ps.start + ps.end) / 2.0, ps.end);
    Channels([fore, mid, mid, mid, heel])
}

/// Peak positions (cycle fractions) of the heel and forefoot lobes.
pub fn peak_fractions(timeline: &PhaseTimeline) -> (f64, f64) {
    let ic = timeline.span(GaitPhase::InitialContact);
    let lr = timeline.span(GaitPhase::LoadingResponse);
    let ps = timeline.span(GaitPhase::PreSwing);
    ((ic.end + lr.end) / 2.0, (ps.start + ps.end) / 2.0)
}

/// Deterministic sample stream for a parameter set.
pub struct Synthesizer {
    params: GaitParams,
    timeline: PhaseTimeline,
    reference: f64,
    index: usize,
    total: usize,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Iterator for Synthesizer {
    type Item = PressureSample;

    fn next(&mut self) -> Option<PressureSample> {
        if self.index >= self.total {
            return None;
        }
        let t = self.index as f64 / self.params.sample_rate;
        self.index += 1;
        let period = self.params.cycle_duration();
        let cycle = (t / period).floor();
        let u = ((t - cycle * period) / period).clamp(0.0, 1.0);
        let clean = envelope(u, &self.timeline, self.reference);
        let noise = self.noise;
        let rng = &mut self.rng;
        let channels = Channels::from_fn(|ch: SoleChannel| {
            let mut v = clean[ch];
            if let Some(dist) = noise {
                v += dist.sample(rng);
            }
            Pressure::saturating(v).expect("finite")
        });
        Some(PressureSample { timestamp: t, channels })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.total - self.index;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Synthesizer {}

pub fn synthesize(params: &GaitParams) -> Result<Synthesizer, SynthError> {
    params.validate()?;
    let noise = if params.noise_sigma > 0.0 {
        Some(Normal::new(0.0, params.noise_sigma).map_err(|e| SynthError::InvalidParams(e.to_string()))?)
    } else {
        None
    };
    Ok(Synthesizer {
        params: *params,
        timeline: default_timeline(params.stance_fraction)?,
        reference: params.reference_pressure(),
        index: 0,
        total: params.sample_count(),
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        noise,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub cycle: u32,
    pub phase: GaitPhase,
    pub start: f64,
    pub end: f64,
}

/// Exact phase intervals of every synthesized cycle.
pub fn ground_truth(params: &GaitParams) -> Result<Vec<PhaseRecord>, SynthError> {
    params.validate()?;
    let timeline = default_timeline(params.stance_fraction)?;
    let period = params.cycle_duration();
    Ok((0..params.cycles)
        .flat_map(|cycle| {
            let origin = cycle as f64 * period;
            timeline.spans().iter().map(move |s| PhaseRecord {
                cycle,
                phase: s.phase,
                start: origin + s.start * period,
                end: origin + s.end * period,
            })
        })
        .collect())
}
