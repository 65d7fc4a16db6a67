use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use num_rational::BigRational;
use rauzy_core::experiments::fmt_f64;
use rauzy_core::{Error, Result};
use serde_json::Value;

/// Writes `text` to `path`, or to standard output when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let res = match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(|e| Error::InvalidArgument(format!("cannot write output: {e}")))
}

pub fn emit_json(path: Option<&Path>, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    emit(path, &text)
}

/// A structured progress line `event=<name> step=<k> key=value ...` on stderr.
pub fn event(name: &str, step: usize, fields: &[(&str, String)]) {
    let mut line = format!("event={name} step={step}");
    for (k, v) in fields {
        let _ = write!(line, " {k}={v}");
    }
    eprintln!("{line}");
}

pub fn error_event(e: &Error) {
    let (name, step) = match e {
        Error::NonGeneric { step } => ("non_generic", Some(*step)),
        Error::CapExceeded { step, .. } => ("cap_exceeded", Some(*step)),
        Error::DenominatorOverflow { step, .. } => ("denominator_overflow", Some(*step)),
        Error::NotFound(_) => ("not_found", None),
        Error::InsufficientData(_) => ("insufficient_data", None),
        _ => ("invalid_config", None),
    };
    match step {
        Some(k) => eprintln!("event={name} step={k}"),
        None => eprintln!("event={name}"),
    }
    eprintln!("error: {e}");
}

/// A length written the same way in CSV and JSON: floats with 17
/// significant digits, rationals as `p/q`.
pub trait Cell {
    fn cell(&self) -> String;

    fn json(&self) -> Value;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        fmt_f64(*self)
    }

    fn json(&self) -> Value {
        float(*self)
    }
}

impl Cell for BigRational {
    fn cell(&self) -> String {
        self.to_string()
    }

    fn json(&self) -> Value {
        Value::String(self.to_string())
    }
}

/// JSON number for finite floats, the CSV text otherwise.
pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(fmt_f64(x)), Value::Number)
}
