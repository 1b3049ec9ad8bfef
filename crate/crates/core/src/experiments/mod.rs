//! Named experiments with persisted artifacts and per-criterion assertions.
//!
//! Each `cmd_*` function writes its CSV / JSON / OFF artifacts into
//! `config.output_dir` and returns an [`ExperimentReport`], which is also
//! saved as `<experiment>.json` for [`cmd_report`].

mod commands;
mod config;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use commands::{
    cmd_ahlfors, cmd_build, cmd_calibrate, cmd_decay, cmd_duality, cmd_llc, cmd_quotient, cmd_report, oracle_gate,
    ConsolidatedReport, CriterionStatus, Status, EXPERIMENTS,
};
pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing inputs: {}", .0.join(", "))]
    MissingInputs(Vec<String>),
    #[error("oracle corpus failed: {0}")]
    OracleGate(String),
    #[error("computation failed: {0}")]
    Computation(String),
    #[error("io error: {0}")]
    Io(String),
}

impl ExperimentError {
    /// Process exit code for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::MissingInputs(_) => 3,
            _ => 4,
        }
    }
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for ExperimentError {
    fn from(e: serde_json::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}

/// The acceptance criteria every assertion belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    Calibration,
    OracleEquivalence,
    AhlforsRegularity,
    LinearLocalConnectivity,
    ModulusDecay,
    DualityTrend,
    QuotientInvariance,
    StructuralInvariants,
}

impl Criterion {
    pub const ALL: [Criterion; 8] = [
        Criterion::Calibration,
        Criterion::OracleEquivalence,
        Criterion::AhlforsRegularity,
        Criterion::LinearLocalConnectivity,
        Criterion::ModulusDecay,
        Criterion::DualityTrend,
        Criterion::QuotientInvariance,
        Criterion::StructuralInvariants,
    ];

    pub fn number(self) -> u32 {
        Criterion::ALL.iter().position(|&c| c == self).unwrap() as u32 + 1
    }

    pub fn label(self) -> &'static str {
        match self {
            Criterion::Calibration => "solver calibration",
            Criterion::OracleEquivalence => "oracle equivalence",
            Criterion::AhlforsRegularity => "Ahlfors regularity",
            Criterion::LinearLocalConnectivity => "LLC with lambda = 12",
            Criterion::ModulusDecay => "modulus decay",
            Criterion::DualityTrend => "degenerate duality trend",
            Criterion::QuotientInvariance => "quotient invariance",
            Criterion::StructuralInvariants => "structural invariants",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}. {}", self.number(), self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub criterion: Criterion,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(criterion: Criterion, name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { criterion, name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    /// Artifact files written, relative to the output directory.
    pub artifacts: Vec<String>,
    pub results: serde_json::Value,
    pub assertions: Vec<Assertion>,
    pub wall_clock_s: f64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// CSV with `#` comment lines documenting the columns, then an RFC 4180
/// body.
pub(crate) fn write_csv<T: Serialize>(path: &Path, comments: &[&str], rows: &[T]) -> Result<(), ExperimentError> {
    use std::io::Write;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for c in comments {
        writeln!(file, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_are_numbered_in_order() {
        let n: Vec<u32> = Criterion::ALL.iter().map(|c| c.number()).collect();
        assert_eq!(n, (1..=8).collect::<Vec<_>>());
        assert_eq!(Criterion::DualityTrend.to_string(), "6. degenerate duality trend");
    }

    #[test]
    fn csv_has_comment_header_and_quoted_body() {
        #[derive(Serialize)]
        struct Row {
            name: String,
            value: f64,
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["name: label", "value: number"], &[Row { name: "a,b".into(), value: 1.5 }]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# name: label\n# value: number\nname,value\n\"a,b\",1.5\n");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ExperimentError::Config("x".into()).exit_code(), 2);
        assert_eq!(ExperimentError::MissingInputs(vec!["a".into()]).exit_code(), 3);
    }
}
