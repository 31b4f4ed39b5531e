//! Experiment configuration: one JSON document, unknown fields rejected.

use std::path::{Path, PathBuf};

use mkv_cubature::{builtin_problem, McConfig, Method, OdeConfig, Partition, Problem};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    /// Overrides the problem's default starting point.
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    /// Overrides the problem's default horizon.
    #[serde(default)]
    pub horizon: Option<f64>,
    pub method: MethodConfig,
    pub formula: FormulaConfig,
    pub partition: PartitionConfig,
    pub sweep: Vec<usize>,
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub ode: OdeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Number of trailing sweep points used for the slope fit.
    #[serde(default = "default_fit_window")]
    pub fit_window: usize,
    #[serde(default)]
    pub max_nodes: Option<u64>,
    /// Run sweep entries concurrently instead of one after another.
    #[serde(default)]
    pub parallel_sweep: bool,
}

fn default_fit_window() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    Taylor { q: u32 },
    Lagrange { r: usize },
}

impl MethodConfig {
    pub fn method(self) -> Method {
        match self {
            MethodConfig::Taylor { q } => Method::Taylor { order: q },
            MethodConfig::Lagrange { r } => Method::Lagrange { points: r },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaConfig {
    pub degree: u32,
    pub d: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKindConfig {
    Uniform,
    Kusuoka,
    ModifiedKusuoka,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub kind: PartitionKindConfig,
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Number of short warm-up steps of the modified grid.
    #[serde(default)]
    pub r: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceConfig {
    ClosedForm,
    EulerMc(McConfig),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.sweep.is_empty() {
            return bad("sweep is empty".into());
        }
        if self.sweep.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("sweep must be strictly increasing, got {:?}", self.sweep));
        }
        if self.fit_window < 2 {
            return bad(format!("fit_window must be at least 2, got {}", self.fit_window));
        }
        match self.method {
            MethodConfig::Lagrange { r: 0 } => return bad("lagrange needs r >= 1".into()),
            MethodConfig::Taylor { .. } | MethodConfig::Lagrange { .. } => {}
        }
        let p = &self.partition;
        match p.kind {
            PartitionKindConfig::Uniform => {
                if p.gamma.is_some() || p.r.is_some() {
                    return bad("uniform partition takes no gamma or r".into());
                }
            }
            PartitionKindConfig::Kusuoka => {
                if p.gamma.is_none() || p.r.is_some() {
                    return bad("kusuoka partition needs gamma and takes no r".into());
                }
            }
            PartitionKindConfig::ModifiedKusuoka => {
                if p.gamma.is_none() || p.r.is_none() {
                    return bad("modified_kusuoka partition needs gamma and r".into());
                }
            }
        }
        if let ReferenceConfig::EulerMc(mc) = &self.reference {
            mc.validate()?;
        }
        self.ode.validate()?;
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem, HarnessError> {
        let mut p = builtin_problem(&self.problem)?;
        if let Some(x) = &self.initial_state {
            p = p.with_initial_state(x.clone())?;
        }
        if let Some(t) = self.horizon {
            p = p.with_horizon(t)?;
        }
        Ok(p)
    }

    /// The grid for `n` steps. A modified grid needs `r < n / 2`; for smaller
    /// `n` the warm-up is shortened to the largest admissible count (none at
    /// all falls back to the plain Kusuoka grid) and a warning is returned.
    pub fn partition(&self, horizon: f64, n: usize) -> Result<(Partition, Option<String>), HarnessError> {
        let p = &self.partition;
        let part = match p.kind {
            PartitionKindConfig::Uniform => (Partition::uniform(horizon, n)?, None),
            PartitionKindConfig::Kusuoka => (Partition::kusuoka(horizon, n, p.gamma.unwrap())?, None),
            PartitionKindConfig::ModifiedKusuoka => {
                let (gamma, r) = (p.gamma.unwrap(), p.r.unwrap());
                if 2 * r < n {
                    (Partition::modified_kusuoka(horizon, n, gamma, r)?, None)
                } else {
                    let shorter = n.div_ceil(2) - 1;
                    let note = format!("n = {n}: warm-up shortened from r = {r} to {shorter} steps");
                    let part = if shorter == 0 {
                        Partition::kusuoka(horizon, n, gamma)?
                    } else {
                        Partition::modified_kusuoka(horizon, n, gamma, shorter)?
                    };
                    (part, Some(note))
                }
            }
        };
        Ok(part)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE1: &str = r#"{
        "problem": "example1",
        "method": {"taylor": {"q": 2}},
        "formula": {"degree": 5, "d": 1},
        "partition": {"kind": "kusuoka", "gamma": 4.5},
        "sweep": [2, 3, 4],
        "reference": "closed_form"
    }"#;

    #[test]
    fn parses_minimal_document() {
        let cfg = ExperimentConfig::from_json(EXAMPLE1).unwrap();
        assert_eq!(cfg.method, MethodConfig::Taylor { q: 2 });
        assert_eq!(cfg.fit_window, 4);
        assert_eq!(cfg.ode, OdeConfig::default());
        assert_eq!(cfg.problem().unwrap().horizon(), 10.0);
    }

    #[test]
    fn rejects_unknown_fields() {
        let typo = EXAMPLE1.replace("\"gamma\"", "\"gama\"");
        assert!(ExperimentConfig::from_json(&typo).is_err());
        let extra = EXAMPLE1.replace("\"q\": 2", "\"q\": 2, \"r\": 3");
        assert!(ExperimentConfig::from_json(&extra).is_err());
        let top = EXAMPLE1.replace("\"sweep\"", "\"seed\": 1, \"sweep\"");
        assert!(ExperimentConfig::from_json(&top).is_err());
    }

    #[test]
    fn rejects_bad_sweeps_and_partitions() {
        assert!(ExperimentConfig::from_json(&EXAMPLE1.replace("[2, 3, 4]", "[]")).is_err());
        assert!(ExperimentConfig::from_json(&EXAMPLE1.replace("[2, 3, 4]", "[3, 3]")).is_err());
        let no_gamma = EXAMPLE1.replace(", \"gamma\": 4.5", "");
        assert!(ExperimentConfig::from_json(&no_gamma).is_err());
    }

    #[test]
    fn monte_carlo_reference() {
        let doc = EXAMPLE1.replace(
            "\"closed_form\"",
            r#"{"euler_mc": {"particles": 1000, "steps": 10, "seed": 5}}"#,
        );
        let cfg = ExperimentConfig::from_json(&doc).unwrap();
        assert!(matches!(cfg.reference, ReferenceConfig::EulerMc(mc) if mc.particles == 1000 && !mc.antithetic));
    }

    #[test]
    fn short_modified_grids_are_shortened() {
        let doc = EXAMPLE1
            .replace("\"kind\": \"kusuoka\"", "\"kind\": \"modified_kusuoka\", \"r\": 3")
            .replace("{\"taylor\": {\"q\": 2}}", "{\"lagrange\": {\"r\": 3}}");
        let cfg = ExperimentConfig::from_json(&doc).unwrap();
        let (full, note) = cfg.partition(10.0, 7).unwrap();
        assert!(note.is_none());
        assert_eq!(full, Partition::modified_kusuoka(10.0, 7, 4.5, 3).unwrap());
        let (short, note) = cfg.partition(10.0, 5).unwrap();
        assert_eq!(short, Partition::modified_kusuoka(10.0, 5, 4.5, 2).unwrap());
        assert!(note.unwrap().contains("r = 3 to 2"));
        let (plain, _) = cfg.partition(10.0, 2).unwrap();
        assert_eq!(plain, Partition::kusuoka(10.0, 2, 4.5).unwrap());
    }
}
