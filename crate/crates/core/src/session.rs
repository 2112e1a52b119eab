//! Session logs on disk: CSV for samples, JSONL for samples plus events and
//! reports, and a reader for single-sensor bench logs.
//!
//! Writers emit each record with one `write_all` of a complete,
//! newline-terminated line. Readers drop a final line that lacks its newline,
//! so a file read while it is being written never yields a torn record.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::DividerConfig;
use crate::analysis::{GaitEvent, GaitReport};
use crate::synth::PressureSample;
use crate::telemetry::SessionHeader;
use crate::units::{Channels, Pressure, SoleChannel};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Stream(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

impl SessionError {
    fn parse(line: u64, message: impl Into<String>) -> Self {
        SessionError::Parse {
            line,
            message: message.into(),
        }
    }

    fn at(path: &Path) -> impl FnOnce(io::Error) -> SessionError + '_ {
        move |source| SessionError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub const CSV_COLUMNS: [&str; 6] = [
    "t_s",
    "forefoot_pa",
    "midfoot_medial_pa",
    "midfoot_central_pa",
    "midfoot_lateral_pa",
    "heel_pa",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: SessionHeader,
    pub samples: Vec<PressureSample>,
    pub events: Vec<GaitEvent>,
    pub report: Option<GaitReport>,
}

impl SessionLog {
    pub fn new(header: SessionHeader) -> Self {
        SessionLog {
            header,
            samples: Vec::new(),
            events: Vec::new(),
            report: None,
        }
    }
}

fn check_order(previous: Option<f64>, t: f64, line: u64) -> Result<(), SessionError> {
    if !t.is_finite() {
        return Err(SessionError::parse(line, format!("timestamp {t} is not finite")));
    }
    match previous {
        Some(p) if t <= p => Err(SessionError::parse(line, format!("timestamp {t} does not follow {p}"))),
        _ => Ok(()),
    }
}

/// Text up to and including the last newline.
fn complete_lines(text: &str) -> &str {
    match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    }
}

fn read_text<R: Read>(mut reader: R) -> Result<String, SessionError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(text)
}

// ---- CSV ----------------------------------------------------------------

fn header_lines(h: &SessionHeader) -> String {
    let d = &h.divider;
    format!(
        "# device_id: {}\n# epoch: {}\n# profile: {}\n# sample_rate_hz: {}\n# divider_v_in: {}\n# divider_r1_ohm: {}\n# divider_adc_bits: {}\n# divider_v_ref: {}\n# battery_v: {}\n{}\n",
        h.device_id,
        h.epoch_rfc3339(),
        h.profile,
        h.sample_rate_hz,
        d.v_in,
        d.r1,
        d.adc_bits,
        d.v_ref,
        d.battery_v,
        CSV_COLUMNS.join(",")
    )
}

fn sample_line(s: &PressureSample) -> String {
    let mut line = format!("{}", s.timestamp);
    for ch in SoleChannel::ALL {
        line.push(',');
        line.push_str(&s.channels[ch].pascals().to_string());
    }
    line.push('\n');
    line
}

/// Incremental CSV session writer.
pub struct CsvSessionWriter<W: Write> {
    out: W,
    last: Option<f64>,
}

impl<W: Write> CsvSessionWriter<W> {
    pub fn new(mut out: W, header: &SessionHeader) -> io::Result<Self> {
        out.write_all(header_lines(header).as_bytes())?;
        out.flush()?;
        Ok(CsvSessionWriter { out, last: None })
    }

    pub fn write_sample(&mut self, sample: &PressureSample) -> io::Result<()> {
        if self.last.is_some_and(|p| sample.timestamp <= p) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("sample at {} s out of order", sample.timestamp),
            ));
        }
        self.last = Some(sample.timestamp);
        self.out.write_all(sample_line(sample).as_bytes())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_csv_to<W: Write>(log: &SessionLog, out: W) -> io::Result<()> {
    let mut w = CsvSessionWriter::new(out, &log.header)?;
    for s in &log.samples {
        w.write_sample(s)?;
    }
    w.into_inner().map(|_| ())
}

pub fn write_csv(log: &SessionLog, path: &Path) -> Result<(), SessionError> {
    let file = File::create(path).map_err(SessionError::at(path))?;
    write_csv_to(log, BufWriter::new(file)).map_err(SessionError::at(path))
}

fn parse_header_block<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (u64, &'a str)>>,
) -> Result<SessionHeader, SessionError> {
    let mut device_id = None;
    let mut epoch = None;
    let mut profile = None;
    let mut sample_rate = None;
    let mut divider = DividerConfig::default();
    let mut last_line = 0;
    while let Some(&(n, line)) = lines.peek() {
        let Some(rest) = line.strip_prefix('#') else { break };
        lines.next();
        last_line = n;
        let Some((key, value)) = rest.split_once(':') else {
            return Err(SessionError::parse(n, "header line is not `# key: value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        let num = |v: &str| -> Result<f64, SessionError> {
            v.parse::<f64>()
                .map_err(|_| SessionError::parse(n, format!("{key}: `{v}` is not a number")))
        };
        match key {
            "device_id" => {
                device_id = Some(
                    value
                        .parse::<u8>()
                        .map_err(|_| SessionError::parse(n, format!("device_id: `{value}` is not 0..=255")))?,
                )
            }
            "epoch" => {
                let t =
                    DateTime::parse_from_rfc3339(value).map_err(|e| SessionError::parse(n, format!("epoch: {e}")))?;
                epoch = Some(t.with_timezone(&Utc));
            }
            "profile" => profile = Some(value.to_string()),
            "sample_rate_hz" => sample_rate = Some(num(value)?),
            "divider_v_in" => divider.v_in = num(value)?,
            "divider_r1_ohm" => divider.r1 = num(value)?,
            "divider_adc_bits" => {
                divider.adc_bits = value
                    .parse()
                    .map_err(|_| SessionError::parse(n, format!("divider_adc_bits: `{value}`")))?
            }
            "divider_v_ref" => divider.v_ref = num(value)?,
            "battery_v" => divider.battery_v = num(value)?,
            // unknown keys are kept readable for newer writers
            _ => {}
        }
    }
    let missing = |k: &str| SessionError::parse(last_line + 1, format!("header block lacks `{k}`"));
    divider
        .validate()
        .map_err(|e| SessionError::parse(last_line, e.to_string()))?;
    Ok(SessionHeader {
        device_id: device_id.ok_or_else(|| missing("device_id"))?,
        epoch: epoch.ok_or_else(|| missing("epoch"))?,
        divider,
        profile: profile.ok_or_else(|| missing("profile"))?,
        sample_rate_hz: sample_rate.ok_or_else(|| missing("sample_rate_hz"))?,
    })
}

pub fn read_csv_from<R: Read>(reader: R) -> Result<SessionLog, SessionError> {
    let text = read_text(reader)?;
    let text = complete_lines(&text);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l)).peekable();
    let header = parse_header_block(&mut lines)?;
    let Some((column_line, columns)) = lines.next() else {
        return Err(SessionError::parse(1, "missing column header"));
    };
    if columns.trim_end() != CSV_COLUMNS.join(",") {
        return Err(SessionError::parse(
            column_line,
            format!("expected columns `{}`, found `{columns}`", CSV_COLUMNS.join(",")),
        ));
    }
    let body_offset = column_line;
    let body: String = lines.map(|(_, l)| format!("{l}\n")).collect();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut log = SessionLog::new(header);
    let mut previous = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line()) + body_offset;
            SessionError::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line()) + body_offset;
        if record.len() != CSV_COLUMNS.len() {
            return Err(SessionError::parse(
                line,
                format!("expected {} fields, found {}", CSV_COLUMNS.len(), record.len()),
            ));
        }
        let field = |i: usize| -> Result<f64, SessionError> {
            record[i]
                .parse::<f64>()
                .map_err(|_| SessionError::parse(line, format!("{}: `{}` is not a number", CSV_COLUMNS[i], &record[i])))
        };
        let t = field(0)?;
        check_order(previous, t, line)?;
        previous = Some(t);
        let mut values = [Pressure::ZERO; 5];
        for (i, v) in values.iter_mut().enumerate() {
            let pa = field(i + 1)?;
            *v = Pressure::new(pa).map_err(|e| SessionError::parse(line, format!("{}: {e}", CSV_COLUMNS[i + 1])))?;
        }
        log.samples.push(PressureSample {
            timestamp: t,
            channels: Channels(values),
        });
    }
    Ok(log)
}

pub fn read_csv(path: &Path) -> Result<SessionLog, SessionError> {
    let file = File::open(path).map_err(SessionError::at(path))?;
    read_csv_from(BufReader::new(file)).map_err(|e| match e {
        SessionError::Stream(source) => SessionError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

// ---- JSONL --------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HeaderRecord {
    device_id: u8,
    epoch: String,
    profile: String,
    sample_rate_hz: f64,
    divider: DividerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Header(HeaderRecord),
    Sample(PressureSample),
    Event(GaitEvent),
    Report(GaitReport),
}

fn json_line(record: &Record) -> String {
    let mut line = serde_json::to_string(record).expect("records serialize");
    line.push('\n');
    line
}

/// Incremental JSONL session writer.
pub struct JsonlSessionWriter<W: Write> {
    out: W,
    last: Option<f64>,
}

impl<W: Write> JsonlSessionWriter<W> {
    pub fn new(mut out: W, header: &SessionHeader) -> io::Result<Self> {
        let record = Record::Header(HeaderRecord {
            device_id: header.device_id,
            epoch: header.epoch_rfc3339(),
            profile: header.profile.clone(),
            sample_rate_hz: header.sample_rate_hz,
            divider: header.divider,
        });
        out.write_all(json_line(&record).as_bytes())?;
        out.flush()?;
        Ok(JsonlSessionWriter { out, last: None })
    }

    pub fn write_sample(&mut self, sample: &PressureSample) -> io::Result<()> {
        if self.last.is_some_and(|p| sample.timestamp <= p) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("sample at {} s out of order", sample.timestamp),
            ));
        }
        self.last = Some(sample.timestamp);
        self.out.write_all(json_line(&Record::Sample(*sample)).as_bytes())
    }

    pub fn write_event(&mut self, event: &GaitEvent) -> io::Result<()> {
        self.out.write_all(json_line(&Record::Event(*event)).as_bytes())
    }

    pub fn write_report(&mut self, report: &GaitReport) -> io::Result<()> {
        self.out
            .write_all(json_line(&Record::Report(report.clone())).as_bytes())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Samples first, then events, then the report.
pub fn write_jsonl_to<W: Write>(log: &SessionLog, out: W) -> io::Result<()> {
    let mut w = JsonlSessionWriter::new(out, &log.header)?;
    for s in &log.samples {
        w.write_sample(s)?;
    }
    for e in &log.events {
        w.write_event(e)?;
    }
    if let Some(r) = &log.report {
        w.write_report(r)?;
    }
    w.into_inner().map(|_| ())
}

pub fn write_jsonl(log: &SessionLog, path: &Path) -> Result<(), SessionError> {
    let file = File::create(path).map_err(SessionError::at(path))?;
    write_jsonl_to(log, BufWriter::new(file)).map_err(SessionError::at(path))
}

pub fn read_jsonl_from<R: Read>(reader: R) -> Result<SessionLog, SessionError> {
    let text = read_text(reader)?;
    let mut log: Option<SessionLog> = None;
    let mut previous = None;
    for (i, line) in complete_lines(&text).lines().enumerate() {
        let n = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(line).map_err(|e| SessionError::parse(n, e.to_string()))?;
        match (record, log.as_mut()) {
            (Record::Header(h), None) => {
                let epoch = DateTime::parse_from_rfc3339(&h.epoch)
                    .map_err(|e| SessionError::parse(n, format!("epoch: {e}")))?
                    .with_timezone(&Utc);
                h.divider
                    .validate()
                    .map_err(|e| SessionError::parse(n, e.to_string()))?;
                log = Some(SessionLog::new(SessionHeader {
                    device_id: h.device_id,
                    epoch,
                    divider: h.divider,
                    profile: h.profile,
                    sample_rate_hz: h.sample_rate_hz,
                }));
            }
            (_, None) => return Err(SessionError::parse(n, "first record must be the header")),
            (Record::Header(_), Some(_)) => return Err(SessionError::parse(n, "second header record")),
            (Record::Sample(s), Some(log)) => {
                check_order(previous, s.timestamp, n)?;
                previous = Some(s.timestamp);
                log.samples.push(s);
            }
            (Record::Event(e), Some(log)) => log.events.push(e),
            (Record::Report(r), Some(log)) => {
                if log.report.is_some() {
                    return Err(SessionError::parse(n, "second report record"));
                }
                log.report = Some(r);
            }
        }
    }
    log.ok_or_else(|| SessionError::parse(1, "empty file: no header record"))
}

pub fn read_jsonl(path: &Path) -> Result<SessionLog, SessionError> {
    let file = File::open(path).map_err(SessionError::at(path))?;
    read_jsonl_from(BufReader::new(file)).map_err(|e| match e {
        SessionError::Stream(source) => SessionError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

// ---- bench logs and format detection ------------------------------------

pub const LEGACY_COLUMNS: [&str; 3] = ["time_s", "pressure_pa", "resistance_ohm"];

/// One row of a single-sensor bench log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegacyRecord {
    pub time_s: f64,
    pub pressure_pa: f64,
    pub resistance_ohm: f64,
}

pub fn read_legacy_csv<R: Read>(reader: R) -> Result<Vec<LegacyRecord>, SessionError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| SessionError::parse(1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != LEGACY_COLUMNS {
        return Err(SessionError::parse(
            1,
            format!("expected columns `{}`", LEGACY_COLUMNS.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<LegacyRecord>() {
        let rec = rec.map_err(|e| SessionError::parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

/// On-disk formats this crate reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    SessionCsv,
    SessionJsonl,
    BenchLog,
    Calibration,
}

/// Guess a file's format from its first non-blank line.
pub fn sniff<R: BufRead>(reader: R) -> Result<Option<FileKind>, SessionError> {
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let kind = if line.starts_with('{') {
            Some(FileKind::SessionJsonl)
        } else if line.starts_with('#') || line == CSV_COLUMNS.join(",") {
            Some(FileKind::SessionCsv)
        } else if line.replace(' ', "") == LEGACY_COLUMNS.join(",") {
            Some(FileKind::BenchLog)
        } else if line.replace(' ', "") == "pressure_pa,resistance_ohm" {
            Some(FileKind::Calibration)
        } else {
            None
        };
        return Ok(kind);
    }
    Ok(None)
}
