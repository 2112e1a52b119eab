//! Digital twin of a five-sensor pressure-sensing shoe sole.
//!
//! Layers, bottom up: [`units`] (quantities and sole layout), [`sensor`]
//! (piezoresistive sensor model), [`acquisition`] (divider and ADC),
//! [`synth`] (reference gait waveforms), [`analysis`] (phase detection and
//! gait metrics), [`telemetry`] (frame codec and TCP transport) and
//! [`session`] (CSV/JSONL logs).

// `!(x > y)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod analysis;
pub mod sensor;
pub mod session;
pub mod synth;
pub mod telemetry;
pub mod units;

pub use units::{Channels, Force, Pressure, Region, Resistance, SensorGeometry, SoleChannel, Voltage};
