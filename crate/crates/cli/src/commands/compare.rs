use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use solesense::analysis::{compare::table_stimulus, compare_sensors, ComparisonRow, StimulusRow};
use solesense::sensor::DynamicsConfig;

use super::common::{resolve_profile, write_text};
use crate::args::CompareArgs;
use crate::error::CliError;
use crate::plot::{Chart, Series, Style};

pub const STIMULUS_COLUMNS: [&str; 3] = ["t_s", "sensor_pa", "fsr_pa"];

pub fn read_stimulus(path: &Path) -> Result<Vec<StimulusRow>, CliError> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(BufReader::new(file));
    let data = CliError::data(path);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if headers.iter().collect::<Vec<_>>() != STIMULUS_COLUMNS {
        return Err(data(format!(
            "line 1: expected columns `{}`",
            STIMULUS_COLUMNS.join(",")
        )));
    }
    let rows: Result<Vec<StimulusRow>, csv::Error> = rdr.deserialize().collect();
    let rows = rows.map_err(|e| {
        let line = e.position().map_or(0, |p| p.line());
        CliError::Data(format!("{}: line {line}: {e}", path.display()))
    })?;
    if let Some(w) = rows.windows(2).find(|w| !(w[1].t_s >= w[0].t_s)) {
        return Err(CliError::Data(format!(
            "{}: time goes backwards ({} s then {} s)",
            path.display(),
            w[0].t_s,
            w[1].t_s
        )));
    }
    Ok(rows)
}

pub fn to_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("t_s,sensor_kohm,fsr_kohm\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.t_s, r.sensor_ohm / 1e3, r.fsr_ohm / 1e3));
    }
    out
}

pub fn run(args: &CompareArgs) -> Result<(), CliError> {
    let sensor = resolve_profile(&args.sensor_profile)?;
    let fsr = resolve_profile(&args.fsr_profile)?;
    let stimulus = match &args.stimulus {
        Some(path) => read_stimulus(path)?,
        None => table_stimulus(),
    };
    let rows = compare_sensors(
        &stimulus,
        (&sensor, &DynamicsConfig::for_profile(&sensor)),
        (&fsr, &DynamicsConfig::fast(&fsr)),
    );
    let csv = to_csv(&rows);
    match &args.output {
        Some(path) => write_text(path, &csv)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(csv.as_bytes())
                .and_then(|_| out.flush())
                .map_err(CliError::io(Path::new("<stdout>")))?;
        }
    }
    if let Some(path) = &args.svg {
        let chart = Chart {
            title: "Comparison of Resistance Responses".into(),
            x_label: "time (s)".into(),
            y_label: "resistance (kΩ)".into(),
            style: Style::Lines,
            log_y: true,
            series: vec![
                Series {
                    name: format!("fabricated ({})", sensor.name()),
                    points: rows.iter().map(|r| (r.t_s, r.sensor_ohm / 1e3)).collect(),
                },
                Series {
                    name: format!("FSR ({})", fsr.name()),
                    points: rows.iter().map(|r| (r.t_s, r.fsr_ohm / 1e3)).collect(),
                },
            ],
        };
        write_text(path, &chart.to_svg())?;
    }
    Ok(())
}
