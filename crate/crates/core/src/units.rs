//! Semantic quantities, the five-sensor sole layout, and force/pressure mechanics.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gravitational acceleration used for weight-to-force conversion (m/s²).
///
/// Fixed at 9.81 rather than the standard 9.80665 so the mass/pressure
/// reference table reproduces exactly.
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("{quantity} must be finite and non-negative, got {value}")]
    OutOfDomain { quantity: &'static str, value: f64 },
    #[error("sensor area must be positive and finite, got {0} m²")]
    BadArea(f64),
    #[error("mass table entry {index}: {source}")]
    TableEntry {
        index: usize,
        #[source]
        source: Box<UnitError>,
    },
}

fn non_negative(quantity: &'static str, value: f64) -> Result<f64, UnitError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(UnitError::OutOfDomain { quantity, value })
    }
}

/// Pressure in pascals; always finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Pressure(f64);

impl Pressure {
    pub const ZERO: Pressure = Pressure(0.0);

    pub fn new(pascals: f64) -> Result<Self, UnitError> {
        non_negative("pressure", pascals).map(Pressure)
    }

    /// Clamps negative inputs to zero. Non-finite input is still an error.
    pub fn saturating(pascals: f64) -> Result<Self, UnitError> {
        if pascals.is_nan() || pascals.is_infinite() {
            return Err(UnitError::OutOfDomain {
                quantity: "pressure",
                value: pascals,
            });
        }
        Ok(Pressure(pascals.max(0.0)))
    }

    pub fn from_kilopascals(kpa: f64) -> Result<Self, UnitError> {
        Self::new(kpa * 1e3)
    }

    pub fn pascals(self) -> f64 {
        self.0
    }

    pub fn kilopascals(self) -> f64 {
        self.0 / 1e3
    }
}

impl TryFrom<f64> for Pressure {
    type Error = UnitError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Pressure::new(v)
    }
}

impl From<Pressure> for f64 {
    fn from(p: Pressure) -> f64 {
        p.0
    }
}

impl fmt::Display for Pressure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Pa", self.0)
    }
}

/// Force in newtons; always finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Force(f64);

impl Force {
    pub fn new(newtons: f64) -> Result<Self, UnitError> {
        non_negative("force", newtons).map(Force)
    }

    pub fn newtons(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Force {
    type Error = UnitError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Force::new(v)
    }
}

impl From<Force> for f64 {
    fn from(f: Force) -> f64 {
        f.0
    }
}

/// Electrical resistance: a finite positive ohm value or an open circuit.
///
/// Open circuit orders above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Option<f64>", into = "Option<f64>")]
pub struct Resistance(Option<f64>);

impl Resistance {
    pub const OPEN_CIRCUIT: Resistance = Resistance(None);

    pub fn ohms(value: f64) -> Result<Self, UnitError> {
        if value.is_finite() && value > 0.0 {
            Ok(Resistance(Some(value)))
        } else {
            Err(UnitError::OutOfDomain {
                quantity: "resistance",
                value,
            })
        }
    }

    pub fn is_open(self) -> bool {
        self.0.is_none()
    }

    /// Ohm value, or `None` for an open circuit.
    pub fn as_ohms(self) -> Option<f64> {
        self.0
    }
}

impl PartialOrd for Resistance {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        match (self.0, other.0) {
            (None, None) => Some(Equal),
            (None, Some(_)) => Some(Greater),
            (Some(_), None) => Some(Less),
            (Some(a), Some(b)) => a.partial_cmp(&b),
        }
    }
}

impl TryFrom<Option<f64>> for Resistance {
    type Error = UnitError;
    fn try_from(v: Option<f64>) -> Result<Self, Self::Error> {
        match v {
            None => Ok(Resistance::OPEN_CIRCUIT),
            Some(ohms) => Resistance::ohms(ohms),
        }
    }
}

impl From<Resistance> for Option<f64> {
    fn from(r: Resistance) -> Self {
        r.0
    }
}

impl fmt::Display for Resistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(ohms) => write!(f, "{ohms} Ω"),
            None => f.write_str("open circuit"),
        }
    }
}

/// Potential in volts, non-negative. The upper bound (supply rail) is
/// enforced by the circuit that produces it.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Voltage(f64);

impl Voltage {
    pub fn new(volts: f64) -> Result<Self, UnitError> {
        non_negative("voltage", volts).map(Voltage)
    }

    pub fn volts(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Voltage {
    type Error = UnitError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Voltage::new(v)
    }
}

impl From<Voltage> for f64 {
    fn from(v: Voltage) -> f64 {
        v.0
    }
}

/// Sensor positions on the sole, in canonical wire/report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SoleChannel {
    Forefoot,
    MidfootMedial,
    MidfootCentral,
    MidfootLateral,
    Heel,
}

impl SoleChannel {
    pub const ALL: [SoleChannel; 5] = [
        SoleChannel::Forefoot,
        SoleChannel::MidfootMedial,
        SoleChannel::MidfootCentral,
        SoleChannel::MidfootLateral,
        SoleChannel::Heel,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn region(self) -> Region {
        match self {
            SoleChannel::Forefoot => Region::Forefoot,
            SoleChannel::MidfootMedial | SoleChannel::MidfootCentral | SoleChannel::MidfootLateral => Region::Midfoot,
            SoleChannel::Heel => Region::Heel,
        }
    }

    /// snake_case label used in file headers.
    pub fn label(self) -> &'static str {
        match self {
            SoleChannel::Forefoot => "forefoot",
            SoleChannel::MidfootMedial => "midfoot_medial",
            SoleChannel::MidfootCentral => "midfoot_central",
            SoleChannel::MidfootLateral => "midfoot_lateral",
            SoleChannel::Heel => "heel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Forefoot,
    Midfoot,
    Heel,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Forefoot, Region::Midfoot, Region::Heel];

    pub fn channels(self) -> &'static [SoleChannel] {
        match self {
            Region::Forefoot => &[SoleChannel::Forefoot],
            Region::Midfoot => &[
                SoleChannel::MidfootMedial,
                SoleChannel::MidfootCentral,
                SoleChannel::MidfootLateral,
            ],
            Region::Heel => &[SoleChannel::Heel],
        }
    }
}

/// One value per sole channel, indexed by [`SoleChannel`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Channels<T>(pub [T; 5]);

impl<T> Channels<T> {
    pub fn from_fn(mut f: impl FnMut(SoleChannel) -> T) -> Self {
        Channels(SoleChannel::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (SoleChannel, &T)> {
        SoleChannel::ALL.into_iter().zip(self.0.iter())
    }

    pub fn map<U>(self, f: impl FnMut(T) -> U) -> Channels<U> {
        Channels(self.0.map(f))
    }
}

impl<T> Index<SoleChannel> for Channels<T> {
    type Output = T;
    fn index(&self, ch: SoleChannel) -> &T {
        &self.0[ch.index()]
    }
}

impl<T> IndexMut<SoleChannel> for Channels<T> {
    fn index_mut(&mut self, ch: SoleChannel) -> &mut T {
        &mut self.0[ch.index()]
    }
}

/// Square sensor face. Defaults to the fabricated 15 × 15 mm, 1.25 mm thick part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub side_length: f64,
    pub thickness: f64,
}

impl Default for SensorGeometry {
    fn default() -> Self {
        SensorGeometry {
            side_length: 0.015,
            thickness: 0.00125,
        }
    }
}

impl SensorGeometry {
    pub fn area(&self) -> f64 {
        self.side_length * self.side_length
    }
}

/// Weight force of `mass` kilograms.
pub fn force_from_mass(mass: f64) -> Result<Force, UnitError> {
    let mass = non_negative("mass", mass)?;
    Force::new(mass * GRAVITY)
}

pub fn pressure_from_force(force: Force, geometry: &SensorGeometry) -> Result<Pressure, UnitError> {
    let area = geometry.area();
    if !(area.is_finite() && area > 0.0) {
        return Err(UnitError::BadArea(area));
    }
    Pressure::new(force.newtons() / area)
}

/// Force and pressure for each mass resting on one sensor face.
pub fn mass_table(masses: &[f64], geometry: &SensorGeometry) -> Result<Vec<(Force, Pressure)>, UnitError> {
    masses
        .iter()
        .enumerate()
        .map(|(index, &m)| {
            force_from_mass(m)
                .and_then(|f| Ok((f, pressure_from_force(f, geometry)?)))
                .map_err(|e| UnitError::TableEntry {
                    index,
                    source: Box::new(e),
                })
        })
        .collect()
}
