use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use solesense::analysis::{AnalysisConfig, GaitEvent, GaitReport, Reduction};
use solesense::sensor::{builtin_profile, CalibrationProfile, BUILTIN_PROFILES};
use solesense::session::{read_csv, read_jsonl, sniff, CsvSessionWriter, FileKind, JsonlSessionWriter, SessionLog};
use solesense::synth::PressureSample;
use solesense::telemetry::SessionHeader;

use crate::args::{AnalysisArgs, Format, ReductionArg};
use crate::error::CliError;

/// Built-in profile by name, else a profile JSON file.
pub fn resolve_profile(name_or_path: &str) -> Result<CalibrationProfile, CliError> {
    if let Some(p) = builtin_profile(name_or_path) {
        return Ok(p);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(CliError::Data(format!(
            "unknown profile `{name_or_path}` (built-in: {}; or a profile JSON path)",
            BUILTIN_PROFILES.join(", ")
        )));
    }
    let file = File::open(path).map_err(CliError::io(path))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: not a calibration profile: {e}", path.display())))
}

pub fn file_kind(path: &Path) -> Result<Option<FileKind>, CliError> {
    let file = File::open(path).map_err(CliError::io(path))?;
    Ok(sniff(BufReader::new(file))?)
}

pub fn load_session(path: &Path) -> Result<SessionLog, CliError> {
    match file_kind(path)? {
        Some(FileKind::SessionCsv) => Ok(read_csv(path)?),
        Some(FileKind::SessionJsonl) => Ok(read_jsonl(path)?),
        _ => Err(CliError::Data(format!("{}: not a session file", path.display()))),
    }
}

/// Explicit format, else `.jsonl`/`.json` → JSONL, anything else → CSV.
pub fn output_format(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "json") => Format::Jsonl,
        _ => Format::Csv,
    })
}

pub fn parse_epoch(s: &str) -> Result<DateTime<Utc>, CliError> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| CliError::Usage(format!("--epoch `{s}`: {e}")))
}

pub fn analysis_config(args: &AnalysisArgs) -> Result<AnalysisConfig, CliError> {
    if !(args.contact_kpa.is_finite() && args.contact_kpa > 0.0) {
        return Err(CliError::Usage(format!(
            "--contact-kpa must be positive, got {}",
            args.contact_kpa
        )));
    }
    Ok(AnalysisConfig {
        contact_base_pa: args.contact_kpa * 1e3,
        reduction: match args.reduction {
            ReductionArg::Max => Reduction::Max,
            ReductionArg::Mean => Reduction::Mean,
        },
        ..AnalysisConfig::default()
    })
}

/// The one serialization of a report used by every command.
pub fn report_json(report: &GaitReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

/// Session file being written sample by sample.
pub struct SessionWriter {
    path: PathBuf,
    inner: Inner,
}

enum Inner {
    Csv(CsvSessionWriter<BufWriter<File>>),
    Jsonl(JsonlSessionWriter<BufWriter<File>>),
}

impl SessionWriter {
    pub fn create(path: &Path, format: Format, header: &SessionHeader) -> Result<Self, CliError> {
        let file = BufWriter::new(File::create(path).map_err(CliError::io(path))?);
        let inner = match format {
            Format::Csv => Inner::Csv(CsvSessionWriter::new(file, header).map_err(CliError::io(path))?),
            Format::Jsonl => Inner::Jsonl(JsonlSessionWriter::new(file, header).map_err(CliError::io(path))?),
        };
        Ok(SessionWriter {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write_sample(&mut self, sample: &PressureSample) -> Result<(), CliError> {
        match &mut self.inner {
            Inner::Csv(w) => w.write_sample(sample),
            Inner::Jsonl(w) => w.write_sample(sample),
        }
        .map_err(CliError::io(&self.path))
    }

    /// CSV sessions carry samples only; events are dropped there.
    pub fn write_event(&mut self, event: &GaitEvent) -> Result<(), CliError> {
        match &mut self.inner {
            Inner::Csv(_) => Ok(()),
            Inner::Jsonl(w) => w.write_event(event).map_err(CliError::io(&self.path)),
        }
    }

    pub fn write_report(&mut self, report: &GaitReport) -> Result<(), CliError> {
        match &mut self.inner {
            Inner::Csv(_) => Ok(()),
            Inner::Jsonl(w) => w.write_report(report).map_err(CliError::io(&self.path)),
        }
    }

    pub fn finish(self) -> Result<(), CliError> {
        let path = self.path;
        let mut out = match self.inner {
            Inner::Csv(w) => w.into_inner(),
            Inner::Jsonl(w) => w.into_inner(),
        }
        .map_err(CliError::io(&path))?;
        out.flush().map_err(CliError::io(&path))
    }
}

/// `dir/name.ext` → `dir/name-dev<ID>.ext`.
pub fn device_path(primary: &Path, device: u8) -> PathBuf {
    let stem = primary.file_stem().and_then(|s| s.to_str()).unwrap_or("session");
    let name = match primary.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-dev{device}.{ext}"),
        None => format!("{stem}-dev{device}"),
    };
    primary.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_follow_extension() {
        assert_eq!(output_format(Path::new("a/s.jsonl"), None), Format::Jsonl);
        assert_eq!(output_format(Path::new("s.csv"), None), Format::Csv);
        assert_eq!(output_format(Path::new("s"), None), Format::Csv);
        assert_eq!(output_format(Path::new("s.csv"), Some(Format::Jsonl)), Format::Jsonl);
    }

    #[test]
    fn device_files_sit_next_to_the_primary() {
        assert_eq!(device_path(Path::new("out/s.csv"), 3), PathBuf::from("out/s-dev3.csv"));
        assert_eq!(device_path(Path::new("s"), 0), PathBuf::from("s-dev0"));
    }

    #[test]
    fn unknown_profile_is_a_data_error() {
        let err = resolve_profile("no-such-profile").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(resolve_profile("bench").is_ok());
    }

    #[test]
    fn epochs_parse_as_rfc3339() {
        assert_eq!(parse_epoch("1970-01-01T00:00:00Z").unwrap(), DateTime::UNIX_EPOCH);
        assert_eq!(parse_epoch("yesterday").unwrap_err().exit_code(), 1);
    }
}
