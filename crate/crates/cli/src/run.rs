//! Resolved run configuration, exit codes, and artifact output.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use serde::Serialize;

use riesz_core::Error;

/// Tolerances shared by every command.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub lemma: f64,
    pub chain: f64,
    pub monotone: f64,
    pub grid: f64,
    pub analytic: f64,
    pub ceiling: f64,
    pub coeff: f64,
    pub residual: f64,
}

impl Tolerances {
    /// `tol` absolute plus `tol` relative to the larger side.
    pub fn slack(tol: f64, lhs: f64, rhs: f64) -> f64 {
        tol + tol * lhs.abs().max(rhs.abs())
    }
}

/// Everything that determines a run's output. The output location is
/// deliberately absent so artifacts compare equal across directories.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub seed: u64,
    pub quad_points: usize,
    pub mc_samples: usize,
    pub tolerances: Tolerances,
    pub args: serde_json::Value,
}

impl RunConfig {
    pub fn header(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("# riesz {} config: {json}\n", riesz_core::VERSION)
    }
}

/// How a command ended.
#[derive(Debug)]
pub enum Failure {
    Violation(String),
    Usage(String),
    Alarm(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Alarm(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Violation(m) | Failure::Usage(m) | Failure::Alarm(m) => m,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("i/o error: {e}"))
    }
}

/// Core errors raised before any computation are usage errors.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub type Outcome = std::result::Result<(), Failure>;

/// Writes artifacts to files under `dir`, or to stdout in order.
pub struct Artifacts {
    dir: Option<PathBuf>,
    header: String,
}

impl Artifacts {
    pub fn new(dir: Option<PathBuf>, config: &RunConfig) -> io::Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir,
            header: config.header(),
        })
    }

    pub fn write(&self, name: &str, body: &str) -> io::Result<()> {
        match &self.dir {
            Some(d) => {
                let mut f = fs::File::create(d.join(name))?;
                f.write_all(self.header.as_bytes())?;
                f.write_all(body.as_bytes())
            }
            None => {
                let mut out = io::stdout().lock();
                writeln!(out, "## {name}")?;
                out.write_all(self.header.as_bytes())?;
                out.write_all(body.as_bytes())?;
                out.flush()
            }
        }
    }
}

/// `{:e}` keeps every digit of an `f64` and round-trips exactly.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Prints `selftest <name> ok|FAIL` and tallies failures.
pub struct SelfTest {
    failed: Vec<String>,
}

impl SelfTest {
    pub fn new() -> Self {
        Self { failed: Vec::new() }
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        eprintln!("selftest {name} {}", if ok { "ok" } else { "FAIL" });
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    pub fn finish(self) -> Outcome {
        if self.failed.is_empty() {
            Ok(())
        } else {
            Err(Failure::Violation(format!("selftest failed: {}", self.failed.join(", "))))
        }
    }
}
