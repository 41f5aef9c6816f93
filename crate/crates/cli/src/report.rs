//! Report document and CSV emission.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::SCHEMA_VERSION;

/// One checked property. `required` entries decide the exit status.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictEntry {
    pub stage: String,
    pub name: String,
    pub holds: bool,
    pub required: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorEntry {
    pub stage: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub stage: String,
    pub name: String,
    pub data: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualTable {
    pub point: usize,
    pub alpha: Vec<usize>,
    pub d: Vec<f64>,
    pub residual: Vec<f64>,
    pub c_prime: Option<f64>,
    pub k: Option<f64>,
    pub monotone: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub passed: bool,
    pub config_echo: Value,
    pub verdicts: Vec<VerdictEntry>,
    pub certificates: Vec<Certificate>,
    pub residual_tables: Vec<ResidualTable>,
    pub cube_stats: Option<Value>,
    pub warnings: Vec<String>,
    pub errors: Vec<ErrorEntry>,
    /// CSV files written next to the report, relative names.
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(command: &str, config_echo: Value) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            passed: false,
            config_echo,
            verdicts: Vec::new(),
            certificates: Vec::new(),
            residual_tables: Vec::new(),
            cube_stats: None,
            warnings: Vec::new(),
            errors: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn verdict(&mut self, stage: &str, name: &str, holds: bool, required: bool, detail: impl Serialize) {
        self.verdicts.push(VerdictEntry {
            stage: stage.into(),
            name: name.into(),
            holds,
            required,
            detail: to_value(&detail),
        });
    }

    pub fn certificate(&mut self, stage: &str, name: &str, data: impl Serialize) {
        self.certificates.push(Certificate { stage: stage.into(), name: name.into(), data: to_value(&data) });
    }

    pub fn warn(&mut self, message: String) {
        if !self.warnings.contains(&message) {
            self.warnings.push(message);
        }
    }

    pub fn error(&mut self, stage: &str, kind: &str, message: impl Into<String>) {
        self.errors.push(ErrorEntry { stage: stage.into(), kind: kind.into(), message: message.into() });
    }

    /// Sets `passed` from the required verdicts, the errors and, when
    /// `strict`, the warnings.
    pub fn finish(&mut self, strict: bool) -> bool {
        self.passed = self.errors.is_empty()
            && self.verdicts.iter().all(|v| v.holds || !v.required)
            && (!strict || self.warnings.is_empty());
        self.passed
    }
}

pub fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Floats in scientific notation with 17 significant digits, so every
/// `f64` round-trips exactly.
struct SigFormatter(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for SigFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn to_json(value: &impl Serialize) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, SigFormatter(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let text = to_json(value).map_err(io::Error::other)?;
    std::fs::write(path, text)
}

/// Comma-separated with a header row and LF line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}
