use std::fmt::Write as _;
use std::io::Write;

use causal_bounds::Error;
use serde::Serialize;
use serde_json::error::Category;

use crate::{Config, OutputFormat};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_VIOLATION: u8 = 3;
pub const EXIT_MISMATCH: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } | Error::InvalidAngles(_) | Error::Io(_) => EXIT_USAGE,
            Error::Json(j) if j.classify() != Category::Data => EXIT_USAGE,
            _ => EXIT_INVALID,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

/// A command result renderable in every output format.
pub trait Report: Serialize {
    fn command(&self) -> &'static str;
    fn table(&self, out: &mut String);
    fn csv(&self, out: &mut String);
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    command: &'static str,
    seed: u64,
    tol: f64,
    result: &'a T,
}

pub fn emit<T: Report>(cfg: &Config, report: &T) -> Result<(), Failure> {
    let mut out = String::new();
    match cfg.output {
        OutputFormat::Json => {
            let env = Envelope { command: report.command(), seed: cfg.seed, tol: cfg.tol, result: report };
            out = serde_json::to_string_pretty(&env).expect("report serializes");
            out.push('\n');
        }
        OutputFormat::Table => {
            let _ = writeln!(out, "{}  (seed {}, tol {:e})", report.command(), cfg.seed, cfg.tol);
            report.table(&mut out);
        }
        OutputFormat::Csv => {
            // CSV consumers get the provenance on stderr so the rows stay parseable.
            eprintln!("# {}: seed {}, tol {:e}", report.command(), cfg.seed, cfg.tol);
            report.csv(&mut out);
        }
    }
    std::io::stdout().lock().write_all(out.as_bytes())?;
    Ok(())
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.9}"))
}
