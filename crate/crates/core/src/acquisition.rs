//! Voltage divider, ADC quantization and the inverse chain back to pressure.
//!
//! Topology: the sensor is R₂ and the output is measured across it, so
//! `V_out = V_in · R₂ / (R₁ + R₂)`. An open (unloaded) sensor reads the full
//! rail; pressing lowers R₂ and the output voltage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensor::CalibrationProfile;
use crate::units::{Pressure, Resistance, Voltage};

/// Battery rail of the insole electronics (V). Recorded as metadata; the
/// divider is fed from the regulated logic rail.
pub const BATTERY_VOLTAGE: f64 = 3.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcquisitionError {
    #[error("voltage {v} V outside [0, {v_in}] V")]
    OutOfRange { v: f64, v_in: f64 },
    #[error("0 V output: sensor resistance below representable range")]
    Saturated,
    #[error("ADC count {count} exceeds {max} for {bits}-bit converter")]
    CountRange { count: u32, max: u32, bits: u8 },
    #[error("invalid divider configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DividerConfig {
    /// Divider supply, V.
    pub v_in: f64,
    /// Fixed resistor, Ω.
    pub r1: f64,
    pub adc_bits: u8,
    /// ADC full-scale reference, V.
    pub v_ref: f64,
    /// Board battery voltage, V (metadata only).
    pub battery_v: f64,
}

impl Default for DividerConfig {
    fn default() -> Self {
        DividerConfig {
            v_in: 3.3,
            r1: 150_000.0,
            adc_bits: 12,
            v_ref: 3.3,
            battery_v: BATTERY_VOLTAGE,
        }
    }
}

impl DividerConfig {
    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if !(self.v_in.is_finite() && self.v_in > 0.0) {
            return Err(AcquisitionError::Config(format!(
                "v_in must be positive, got {}",
                self.v_in
            )));
        }
        if !(self.v_ref.is_finite() && self.v_ref > 0.0) {
            return Err(AcquisitionError::Config(format!(
                "v_ref must be positive, got {}",
                self.v_ref
            )));
        }
        if !(self.r1.is_finite() && self.r1 > 0.0) {
            return Err(AcquisitionError::Config(format!(
                "r1 must be positive, got {}",
                self.r1
            )));
        }
        if !(1..=24).contains(&self.adc_bits) {
            return Err(AcquisitionError::Config(format!(
                "adc_bits must be 1..=24, got {}",
                self.adc_bits
            )));
        }
        Ok(())
    }

    pub fn levels(&self) -> u32 {
        1 << self.adc_bits
    }

    pub fn max_count(&self) -> u32 {
        self.levels() - 1
    }

    /// Width of one ADC code, V.
    pub fn lsb(&self) -> f64 {
        self.v_ref / self.levels() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AdcCount(u32);

impl AdcCount {
    pub fn new(value: u32, cfg: &DividerConfig) -> Result<Self, AcquisitionError> {
        if value > cfg.max_count() {
            return Err(AcquisitionError::CountRange {
                count: value,
                max: cfg.max_count(),
                bits: cfg.adc_bits,
            });
        }
        Ok(AdcCount(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

pub fn divider_out(r2: Resistance, cfg: &DividerConfig) -> Voltage {
    let v = match r2.as_ohms() {
        Some(r) => cfg.v_in * r / (cfg.r1 + r),
        None => cfg.v_in,
    };
    Voltage::new(v).expect("divider output lies within [0, v_in]")
}

pub fn invert_divider(v_out: Voltage, cfg: &DividerConfig) -> Result<Resistance, AcquisitionError> {
    let v = v_out.volts();
    if v > cfg.v_in {
        return Err(AcquisitionError::OutOfRange { v, v_in: cfg.v_in });
    }
    if v == cfg.v_in {
        return Ok(Resistance::OPEN_CIRCUIT);
    }
    if v == 0.0 {
        return Err(AcquisitionError::Saturated);
    }
    Resistance::ohms(cfg.r1 * v / (cfg.v_in - v)).map_err(|_| AcquisitionError::Saturated)
}

/// Current drawn through one divider, A.
pub fn divider_current(r2: Resistance, cfg: &DividerConfig) -> f64 {
    match r2.as_ohms() {
        Some(r) => cfg.v_in / (cfg.r1 + r),
        None => 0.0,
    }
}

/// Upper bound on divider current, reached as the sensor resistance goes to zero.
pub fn max_divider_current(cfg: &DividerConfig) -> f64 {
    cfg.v_in / cfg.r1
}

pub fn quantize(v: Voltage, cfg: &DividerConfig) -> AdcCount {
    let scaled = (v.volts() / cfg.v_ref * cfg.levels() as f64).floor();
    AdcCount(scaled.clamp(0.0, cfg.max_count() as f64) as u32)
}

/// Mid-rise reconstruction of a code.
pub fn dequantize(c: AdcCount, cfg: &DividerConfig) -> Voltage {
    Voltage::new((c.0 as f64 + 0.5) * cfg.lsb()).expect("non-negative")
}

/// Pressure recovered from one ADC code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub pressure: Pressure,
    /// The code maps to a resistance above the profile's idle level.
    pub below_onset: bool,
    /// The code maps to a resistance at or below the full-load level.
    pub saturated: bool,
}

pub fn pressure_to_count(p: Pressure, profile: &CalibrationProfile, cfg: &DividerConfig) -> AdcCount {
    resistance_to_count(profile.static_resistance(p), cfg)
}

pub fn resistance_to_count(r: Resistance, cfg: &DividerConfig) -> AdcCount {
    quantize(divider_out(r, cfg), cfg)
}

/// Recover pressure from a code: count → V → R → pressure.
///
/// Codes below the one containing the profile's full-load resistance are read
/// as that code, so recovering and re-quantizing a pressure is idempotent.
pub fn count_to_pressure(c: AdcCount, profile: &CalibrationProfile, cfg: &DividerConfig) -> Reading {
    let floor_code = resistance_to_count(Resistance::ohms(profile.min_ohms()).expect("finite"), cfg);
    let code = c.max(floor_code);
    let r = match invert_divider(dequantize(code, cfg), cfg) {
        Ok(r) => r,
        Err(AcquisitionError::Saturated) => Resistance::ohms(profile.min_ohms()).expect("finite"),
        Err(_) => Resistance::OPEN_CIRCUIT,
    };
    use crate::sensor::StaticInverse::*;
    match profile.pressure_for(r) {
        BelowOnset => Reading {
            pressure: Pressure::ZERO,
            below_onset: true,
            saturated: false,
        },
        Within(p) => Reading {
            pressure: p,
            below_onset: false,
            saturated: false,
        },
        Saturated(p) => Reading {
            pressure: p,
            below_onset: false,
            saturated: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::{specsheet_profile, table44_profile};

    fn ohm(v: f64) -> Resistance {
        Resistance::ohms(v).unwrap()
    }

    fn volt(v: f64) -> Voltage {
        Voltage::new(v).unwrap()
    }

    #[test]
    fn divider_examples() {
        let cfg = DividerConfig::default();
        assert!((divider_out(ohm(150_000.0), &cfg).volts() - 1.65).abs() < 1e-15);
        // 3.3 · 200 / 150 200
        assert!((divider_out(ohm(200.0), &cfg).volts() - 0.004_394_141_145_139_813).abs() < 1e-15);
        assert_eq!(divider_out(Resistance::OPEN_CIRCUIT, &cfg).volts(), 3.3);
    }

    #[test]
    fn inversion_examples() {
        let cfg = DividerConfig::default();
        assert!((invert_divider(volt(1.65), &cfg).unwrap().as_ohms().unwrap() - 150_000.0).abs() < 1e-6);
        assert!(invert_divider(volt(3.3), &cfg).unwrap().is_open());
        assert_eq!(invert_divider(volt(0.0), &cfg), Err(AcquisitionError::Saturated));
        assert!(matches!(
            invert_divider(volt(3.4), &cfg),
            Err(AcquisitionError::OutOfRange { .. })
        ));
        for r in [200.0, 29_162.12, 3_342_900.0] {
            let back = invert_divider(divider_out(ohm(r), &cfg), &cfg)
                .unwrap()
                .as_ohms()
                .unwrap();
            assert!((back - r).abs() / r < 1e-9);
        }
    }

    #[test]
    fn quantizer_examples() {
        let cfg = DividerConfig::default();
        assert_eq!(quantize(volt(0.0), &cfg).value(), 0);
        assert_eq!(quantize(volt(1.65), &cfg).value(), 2048);
        assert_eq!(quantize(volt(3.3), &cfg).value(), 4095);
        assert_eq!(quantize(volt(10.0), &cfg).value(), 4095);
        assert!((dequantize(AdcCount::new(0, &cfg).unwrap(), &cfg).volts() - 0.000_402_832_031_25).abs() < 1e-15);
        assert!((dequantize(AdcCount::new(4095, &cfg).unwrap(), &cfg).volts() - 3.299_597_167_968_75).abs() < 1e-12);
        assert!(AdcCount::new(4096, &cfg).is_err());
    }

    #[test]
    fn every_code_survives_reconstruction() {
        let cfg = DividerConfig::default();
        for c in 0..=cfg.max_count() {
            let code = AdcCount::new(c, &cfg).unwrap();
            assert_eq!(quantize(dequantize(code, &cfg), &cfg), code);
        }
    }

    #[test]
    fn full_load_code() {
        let cfg = DividerConfig::default();
        let prof = specsheet_profile();
        assert_eq!(pressure_to_count(Pressure::new(750e3).unwrap(), &prof, &cfg).value(), 5);
        assert_eq!(pressure_to_count(Pressure::ZERO, &prof, &cfg).value(), 4095);
    }

    #[test]
    fn open_codes_read_zero_pressure() {
        let cfg = DividerConfig::default();
        let prof = specsheet_profile();
        let reading = count_to_pressure(AdcCount::new(4095, &cfg).unwrap(), &prof, &cfg);
        assert_eq!(reading.pressure, Pressure::ZERO);
        assert!(reading.below_onset);
        let reading = count_to_pressure(AdcCount::new(0, &cfg).unwrap(), &prof, &cfg);
        assert!(!reading.below_onset);
    }

    #[test]
    fn recovered_pressure_is_a_fixed_point() {
        let cfg = DividerConfig::default();
        for prof in [specsheet_profile(), table44_profile()] {
            for c in 0..=cfg.max_count() {
                let p = count_to_pressure(AdcCount::new(c, &cfg).unwrap(), &prof, &cfg).pressure;
                let c2 = pressure_to_count(p, &prof, &cfg);
                let p2 = count_to_pressure(c2, &prof, &cfg).pressure;
                assert_eq!(p, p2, "{} code {c}", prof.name());
            }
        }
    }

    #[test]
    fn default_current_budget() {
        let cfg = DividerConfig::default();
        assert!((max_divider_current(&cfg) - 22e-6).abs() < 1e-12);
        assert!(max_divider_current(&cfg) < 1e-3);
        assert!(divider_current(ohm(200.0), &cfg) <= max_divider_current(&cfg));
        assert_eq!(divider_current(Resistance::OPEN_CIRCUIT, &cfg), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(DividerConfig::default().validate().is_ok());
        let bad = DividerConfig {
            adc_bits: 25,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DividerConfig {
            r1: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn divider_roundtrip(r in 200.0f64..3.4e6) {
            let cfg = DividerConfig::default();
            let back = invert_divider(divider_out(ohm(r), &cfg), &cfg).unwrap().as_ohms().unwrap();
            proptest::prop_assert!((back - r).abs() / r < 1e-9);
        }

        #[test]
        fn divider_output_increases_with_resistance(a in 1.0f64..1e7, b in 1.0f64..1e7) {
            let cfg = DividerConfig::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            proptest::prop_assume!(lo < hi);
            let (vl, vh) = (divider_out(ohm(lo), &cfg).volts(), divider_out(ohm(hi), &cfg).volts());
            proptest::prop_assert!(vl <= vh);
            proptest::prop_assert!(vl > 0.0 && vh < cfg.v_in);
        }

        #[test]
        fn counts_fall_with_pressure(a in 200e3f64..750e3, b in 200e3f64..750e3) {
            let cfg = DividerConfig::default();
            let prof = specsheet_profile();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let cl = pressure_to_count(Pressure::new(lo).unwrap(), &prof, &cfg);
            let ch = pressure_to_count(Pressure::new(hi).unwrap(), &prof, &cfg);
            proptest::prop_assert!(cl >= ch);
        }
    }
}
