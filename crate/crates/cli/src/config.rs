//! Run configuration: a JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use eil_core::CurveSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Acceptance thresholds checked on the computed points, relative to the
/// curve scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Pairing residual `|G|` at AEIL points.
    pub refine: f64,
    /// Distance of an envelope point from its own intermediate line.
    pub online: f64,
    /// Discriminant determinant residual.
    #[serde(rename = "detM")]
    pub det_m: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            refine: 1e-8,
            online: 1e-8,
            det_m: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Emit {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Emit {
            csv: true,
            json: true,
            svg: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub curve: CurveSpec,
    /// `None` means the command's default list.
    pub alphas: Option<Vec<f64>>,
    pub grid_n: usize,
    /// Rows of the invariant table.
    pub samples: usize,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub emit: Emit,
    /// Cusp scan and oracle comparison in `envelope`.
    pub cusps: bool,
    pub oracle: bool,
    pub bisect_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            curve: CurveSpec::Named {
                name: "bean".into(),
                params: Vec::new(),
            },
            alphas: None,
            grid_n: 512,
            samples: 256,
            tolerances: Tolerances::default(),
            out: PathBuf::from("out"),
            emit: Emit::default(),
            cusps: true,
            oracle: true,
            bisect_tol: 1e-4,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(alphas) = &self.alphas {
            if alphas.is_empty() {
                return Err(CliError::Config("alpha list is empty".into()));
            }
            if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
                return Err(CliError::Config(format!("alpha {a} outside (0, 1)")));
            }
        }
        if self.grid_n < 64 {
            return Err(CliError::Config(format!("grid_n must be >= 64, got {}", self.grid_n)));
        }
        if self.samples < 2 {
            return Err(CliError::Config(format!("samples must be >= 2, got {}", self.samples)));
        }
        let t = &self.tolerances;
        for (name, v) in [("refine", t.refine), ("online", t.online), ("detM", t.det_m), ("bisect_tol", self.bisect_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn alphas_or(&self, default: &[f64]) -> Vec<f64> {
        self.alphas.clone().unwrap_or_else(|| default.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn invariants_are_enforced() {
        let bad = [
            RunConfig { alphas: Some(vec![0.5, 1.0]), ..Default::default() },
            RunConfig { alphas: Some(vec![]), ..Default::default() },
            RunConfig { grid_n: 63, ..Default::default() },
            RunConfig {
                tolerances: Tolerances { online: 0.0, ..Default::default() },
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(CliError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn parses_partial_json() {
        let c: RunConfig =
            serde_json::from_str(r#"{"curve":{"name":"ellipse","params":[2,1]},"tolerances":{"detM":1e-5}}"#).unwrap();
        assert_eq!(c.grid_n, 512);
        assert_eq!(c.tolerances.det_m, 1e-5);
        assert!(serde_json::from_str::<RunConfig>(r#"{"grid":5}"#).is_err());
    }
}
