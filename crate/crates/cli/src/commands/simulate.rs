use solesense::acquisition::{count_to_pressure, resistance_to_count, DividerConfig};
use solesense::sensor::{step, DynamicsConfig, SensorState};
use solesense::synth::{synthesize, GaitParams, PressureSample};
use solesense::telemetry::SessionHeader;
use solesense::Channels;

use super::common::{output_format, parse_epoch, resolve_profile, SessionWriter};
use crate::args::SimulateArgs;
use crate::error::CliError;

/// Device clock resolution; session timestamps are whole milliseconds.
const MAX_RATE_HZ: f64 = 1000.0;

pub fn params(args: &SimulateArgs) -> Result<GaitParams, CliError> {
    let params = GaitParams {
        body_mass: args.mass,
        cadence: args.cadence,
        stance_fraction: args.stance,
        sample_rate: args.rate,
        cycles: args.cycles,
        noise_sigma: args.noise,
        seed: args.seed,
        load_scale: args.load_scale,
        ..GaitParams::default()
    };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if params.sample_rate > MAX_RATE_HZ {
        return Err(CliError::Usage(format!(
            "sample rate must be at most {MAX_RATE_HZ} Hz, got {}",
            params.sample_rate
        )));
    }
    Ok(params)
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let params = params(args)?;
    let epoch = parse_epoch(&args.epoch)?;
    let profile = resolve_profile(&args.profile)?;
    let dynamics = DynamicsConfig::for_profile(&profile);
    let divider = DividerConfig::default();
    let header = SessionHeader {
        device_id: args.device_id,
        epoch,
        divider,
        profile: args.profile.clone(),
        sample_rate_hz: params.sample_rate,
    };

    let format = output_format(&args.output, args.format);
    let mut out = SessionWriter::create(&args.output, format, &header)?;
    let mut states = [SensorState::unloaded(0.0); 5];
    for applied in synthesize(&params).map_err(|e| CliError::Usage(e.to_string()))? {
        let mut measured = Channels([solesense::Pressure::ZERO; 5]);
        for (ch, p) in applied.channels.iter() {
            let (next, r) = step(&states[ch.index()], *p, applied.timestamp, &profile, &dynamics)
                .expect("synthesized timestamps increase");
            states[ch.index()] = next;
            measured[ch] = count_to_pressure(resistance_to_count(r, &divider), &profile, &divider).pressure;
        }
        let ms = (applied.timestamp * 1000.0).round();
        out.write_sample(&PressureSample {
            timestamp: ms / 1000.0,
            channels: measured,
        })?;
    }
    out.finish()
}
