use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;

/// Parameters shared by every experiment, read from TOML.
///
/// Only the first block of fields is usually set; the rest tune sample
/// counts and scan resolutions and default to the acceptance settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Pillowcase depth `M` of the product-space mesh.
    #[serde(rename = "depth_M")]
    pub depth_m: u32,
    pub mesh_h: f64,
    pub vertical_hz: f64,
    pub seed: u64,
    /// Inner truncation radii for the decay experiment.
    pub delta_list: Vec<f64>,
    pub epsilon: f64,
    pub p: f64,
    pub tol: f64,
    pub output_dir: PathBuf,

    /// `F(δ₀, ε₀)` of the solved family.
    pub delta0: f64,
    pub eps0: f64,
    /// The cusp columns of the mesh for truncation `δ` have width
    /// `δ / cusp_grading`.
    pub cusp_grading: f64,
    /// Number of successive halvings of the cusp width in the duality sweep.
    pub refinements: u32,
    /// Surface used by the Ahlfors scan.
    #[serde(rename = "scan_depth_M")]
    pub scan_depth_m: u32,
    pub scan_h: f64,
    pub ahlfors_samples: usize,
    pub llc_samples: usize,
    /// Radius range of the LLC triples.
    pub llc_radii: (f64, f64),
    pub metric_triples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            depth_m: 4,
            mesh_h: 1.0 / 32.0,
            vertical_hz: 1.0 / 16.0,
            seed: 20_240_601,
            delta_list: vec![0.2, 0.1, 0.05, 0.025],
            epsilon: 0.5,
            p: 3.0,
            tol: 1e-4,
            output_dir: PathBuf::from("capmod-out"),
            delta0: 0.25,
            eps0: 0.5,
            cusp_grading: 8.0,
            refinements: 3,
            scan_depth_m: 6,
            scan_h: 1.0 / 128.0,
            ahlfors_samples: 200,
            llc_samples: 100,
            llc_radii: (0.1, 1.0),
            metric_triples: 1000,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        let positive = [
            ("mesh_h", self.mesh_h),
            ("vertical_hz", self.vertical_hz),
            ("epsilon", self.epsilon),
            ("delta0", self.delta0),
            ("eps0", self.eps0),
            ("scan_h", self.scan_h),
            ("cusp_grading", self.cusp_grading),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if self.delta_list.is_empty() {
            return bad("delta_list is empty".into());
        }
        if let Some(d) = self.delta_list.iter().find(|&&d| !(d > 0.0 && d < self.epsilon)) {
            return bad(format!("δ = {d} must lie in (0, ε = {})", self.epsilon));
        }
        if self.delta_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad("delta_list must be strictly decreasing".into());
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p = {} must exceed 1", self.p));
        }
        if !(self.tol > 0.0 && self.tol < 0.1) {
            return bad(format!("tol = {} outside (0, 0.1)", self.tol));
        }
        let (lo, hi) = self.llc_radii;
        if !(lo > 0.0 && lo < hi) {
            return bad(format!("llc_radii ({lo}, {hi}) is not an interval"));
        }
        if self.ahlfors_samples == 0 || self.llc_samples == 0 || self.metric_triples == 0 {
            return bad("sample counts must be positive".into());
        }
        Ok(())
    }

    /// Cusp column width of the mesh used for truncation `δ`.
    pub fn cusp_width(&self, delta: f64) -> f64 {
        (delta / self.cusp_grading).min(self.mesh_h)
    }

    pub fn conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = ExperimentConfig::from_toml("depth_M = 3\nmesh_h = 0.0625\n").unwrap();
        assert_eq!(cfg.depth_m, 3);
        assert_eq!(cfg.epsilon, 0.5);
    }

    #[test]
    fn rejects_bad_values() {
        for text in ["mesh_h = -1.0", "delta_list = [0.1, 0.2]", "delta_list = [0.6]", "p = 1.0", "unknown_key = 1"] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(ExperimentError::Config(_))), "{text}");
        }
    }
}
