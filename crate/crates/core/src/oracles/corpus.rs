use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::graph::Graph;
use crate::network::Network;

pub const MAX_VERTICES: usize = 12;

/// A small graph whose complete path family can be enumerated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TinyGraphCase {
    pub name: String,
    pub vertices: usize,
    /// `(a, b, length)`.
    pub edges: Vec<(usize, usize, f64)>,
    pub measure: Vec<f64>,
    pub e: Vec<usize>,
    pub f: Vec<usize>,
    pub p: f64,
    /// Known closed-form value, when there is one.
    #[serde(default)]
    pub expected: Option<f64>,
}

impl TinyGraphCase {
    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |m: String| Err(OracleError::InvalidCase(format!("{}: {m}", self.name)));
        if self.vertices == 0 || self.vertices > MAX_VERTICES {
            return bad(format!("{} vertices, at most {MAX_VERTICES} allowed", self.vertices));
        }
        if self.measure.len() != self.vertices || self.measure.iter().any(|&m| !(m > 0.0)) {
            return bad("measure must be positive on every vertex".into());
        }
        if self.edges.iter().any(|&(a, b, l)| a >= self.vertices || b >= self.vertices || a == b || !(l > 0.0)) {
            return bad("edge endpoints out of range or nonpositive length".into());
        }
        if self.e.is_empty() || self.f.is_empty() {
            return bad("E and F must be nonempty".into());
        }
        if self.e.iter().chain(&self.f).any(|&v| v >= self.vertices) {
            return bad("E or F vertex out of range".into());
        }
        if self.e.iter().any(|v| self.f.contains(v)) {
            return bad("E and F intersect".into());
        }
        if !(self.p > 1.0) {
            return bad(format!("exponent {} must exceed 1", self.p));
        }
        Ok(())
    }

    /// The same graph as a solver network (unit edge areas).
    pub fn network(&self) -> Network {
        let g = Graph::from_edges(self.vertices, self.edges.iter().map(|&(a, b, l)| (a as u32, b as u32, l)));
        let m = g.edge_count();
        Network::new(g, self.measure.clone(), vec![1.0; m])
    }
}

/// Directory of the checked-in corpus.
pub fn default_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("oracle_corpus")
}

/// Every `*.json` case in `dir`, sorted by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<TinyGraphCase>, OracleError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| OracleError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| OracleError::Io(format!("{}: {e}", p.display())))?;
            let case: TinyGraphCase =
                serde_json::from_str(&text).map_err(|e| OracleError::InvalidCase(format!("{}: {e}", p.display())))?;
            case.validate()?;
            Ok(case)
        })
        .collect()
}
