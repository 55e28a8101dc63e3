//! Command-line front end for the `multinorm` toolkit: config parsing, the
//! analysis commands and the reproduction report.

pub mod app;
pub mod commands;
pub mod config;
pub mod repro;
pub mod sync;


use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

pub use commands::{Context, Outcome, ReportFormat};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },

    #[error(transparent)]
    Core(#[from] multinorm::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Self::Config { path: path.into(), msg: msg.into() }
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            *v = serde_json::Number::from_f64(round_sig(n.as_f64().expect("f64"))).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and floats at 12 significant digits.
/// Non-finite values become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("output types serialize");
    round_value(&mut v);
    serde_json::to_string_pretty(&v).expect("value serializes") + "\n"
}
