use std::fs::File;
use std::io::BufReader;

use solesense::acquisition::{max_divider_current, DividerConfig};
use solesense::sensor::{
    characterize, fit_profile, read_calibration_csv, CalibrationPoint, Characterization, DynamicsConfig,
    DEFAULT_ONSET_PA,
};
use solesense::Pressure;

use super::common::write_text;
use crate::args::CalibrateArgs;
use crate::error::{calibration_error, CliError};

/// Requested onset, else the default onset or the lowest calibration pressure if that is lower.
pub fn default_onset(points: &[CalibrationPoint], onset_kpa: Option<f64>) -> Result<Pressure, CliError> {
    match onset_kpa {
        Some(kpa) => Pressure::from_kilopascals(kpa).map_err(|e| CliError::Usage(format!("--onset-kpa: {e}"))),
        None => {
            let lowest = points
                .iter()
                .map(|p| p.pressure.pascals())
                .fold(DEFAULT_ONSET_PA, f64::min);
            Ok(Pressure::new(lowest).expect("calibration pressures are valid"))
        }
    }
}

/// "R Ω @ P kPa … R Ω @ P kPa" over the profile's span.
pub fn range_line(c: &Characterization) -> String {
    format!(
        "{} Ω @ {} kPa … {} Ω @ {} kPa",
        c.resistance_at_onset_ohm,
        c.onset_pressure_pa / 1e3,
        c.resistance_at_max_ohm,
        c.max_pressure_pa / 1e3
    )
}

fn ms(t: Option<f64>) -> String {
    t.map_or_else(|| "n/a".to_string(), |t| format!("{:.1} ms", t * 1e3))
}

pub fn summary(c: &Characterization, points: usize) -> String {
    let pa_per_ohm = c
        .sensitivity_pa_per_ohm
        .map_or_else(|| "n/a".to_string(), |s| format!("{s:.6} Pa/Ω"));
    let divider = DividerConfig::default();
    format!(
        "profile: {} ({points} points, fit R² = {:.12})\n\
         range: {}\n\
         sensitivity: {pa_per_ohm} | {:.6e} Ω/Pa (datasheet {} Pa/Ω, {})\n\
         response time: {}\n\
         recovery time: {}\n\
         hysteresis: {:.3} % of span\n\
         threshold band: ±{} %\n\
         divider current: ≤ {:.4} mA\n",
        c.profile,
        c.fit_r2,
        range_line(c),
        c.sensitivity_ohm_per_pa,
        c.datasheet_sensitivity_pa_per_ohm,
        if c.sensitivity_matches_datasheet {
            "agrees"
        } else {
            "differs"
        },
        ms(c.response_time_s),
        ms(c.recovery_time_s),
        c.hysteresis_percent,
        c.threshold_band * 100.0,
        max_divider_current(&divider) * 1e3,
    )
}

pub fn run(args: &CalibrateArgs) -> Result<(), CliError> {
    let path = &args.input;
    let file = File::open(path).map_err(CliError::io(path))?;
    let points = read_calibration_csv(BufReader::new(file)).map_err(|e| calibration_error(path, e))?;
    let onset = default_onset(&points, args.onset_kpa)?;
    let name = args
        .name
        .clone()
        .or_else(|| path.file_stem().and_then(|s| s.to_str()).map(str::to_string))
        .unwrap_or_else(|| "custom".to_string());
    let profile = fit_profile(&name, &points, onset).map_err(|e| calibration_error(path, e))?;
    let c = characterize(&profile, &DynamicsConfig::for_profile(&profile));

    print!("{}", summary(&c, points.len()));
    if let Some(out) = &args.output {
        let json = serde_json::to_string_pretty(&profile).expect("profile serializes") + "\n";
        write_text(out, &json)?;
    }
    if let Some(out) = &args.report {
        let json = serde_json::to_string_pretty(&c).expect("characterization serializes") + "\n";
        write_text(out, &json)?;
    }
    Ok(())
}
