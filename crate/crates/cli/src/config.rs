//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! rows = 3
//! cols = 3
//! arrival_rate = "3/10"
//! discharge = 2
//! bins = [1, 3]
//! phases = ["N", "E", "S", "W"]
//! steps = 5000
//! seed = 0
//!
//! [agent]
//! kind = "dual"
//! alpha = 0.1
//! gamma = 0.9
//! epsilon = 0.1
//!
//! [memory]
//! kappa = "1/2"
//! t_stage = 5
//! symmetry = "dihedral"
//!
//! [analysis]
//! n_max = 50
//! horizon = 100
//! ```
//!
//! Every key is optional and unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use dualmem::approach::ActionSpace;
use dualmem::gridsim::GridConfig;
use dualmem::num::parse_rational;
use dualmem::{HyperParams, Kappa, SymmetryGroup, SymmetryKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    #[default]
    Dual,
    Sarsa,
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentKind::Dual => "dual",
            AgentKind::Sarsa => "sarsa",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub rows: usize,
    pub cols: usize,
    pub arrival_rate: String,
    pub discharge: u32,
    pub bins: Vec<u32>,
    pub phases: Vec<String>,
    pub steps: u64,
    pub seed: u64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            rows: 3,
            cols: 3,
            arrival_rate: "3/10".into(),
            discharge: 2,
            bins: vec![1, 3],
            phases: ["N", "E", "S", "W"].map(String::from).to_vec(),
            steps: 5000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentSection {
    pub kind: AgentKind,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for AgentSection {
    fn default() -> Self {
        AgentSection {
            kind: AgentKind::Dual,
            alpha: 0.1,
            gamma: 0.9,
            epsilon: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MemorySection {
    pub kappa: String,
    pub t_stage: u64,
    pub symmetry: SymmetryKind,
}

impl Default for MemorySection {
    fn default() -> Self {
        MemorySection {
            kappa: "1/2".into(),
            t_stage: 5,
            symmetry: SymmetryKind::Dihedral,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Largest staging count `n` evaluated by `analyze` in the worst case.
    pub n_max: u64,
    /// Default number of steps traced by `trace`.
    pub horizon: u64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            n_max: 50,
            horizon: 100,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridSection,
    pub agent: AgentSection,
    pub memory: MemorySection,
    pub analysis: AnalysisSection,
}

impl FromStr for RunConfig {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        text.parse()
            .map_err(|e: CliError| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn actions(&self) -> Result<ActionSpace> {
        ActionSpace::parse(&self.grid.phases).map_err(|e| CliError::data("[grid] phases", e))
    }

    pub fn kappa(&self) -> Result<Kappa> {
        self.memory
            .kappa
            .parse()
            .map_err(|e| CliError::data("[memory] kappa", e))
    }

    pub fn grid_config(&self) -> Result<GridConfig> {
        let g = &self.grid;
        let cfg = GridConfig {
            rows: g.rows,
            cols: g.cols,
            arrival_rate: parse_rational(&g.arrival_rate).map_err(|e| CliError::data("[grid] arrival_rate", e))?,
            discharge: g.discharge,
            bins: g.bins.clone(),
            actions: self.actions()?,
        };
        cfg.validate().map_err(|e| CliError::data("[grid]", e))?;
        Ok(cfg)
    }

    pub fn hyper_params(&self) -> Result<HyperParams<f64>> {
        let hp = HyperParams {
            action_count: self.grid.phases.len(),
            kappa: self.kappa()?,
            t_stage: self.memory.t_stage,
            alpha: self.agent.alpha,
            gamma: self.agent.gamma,
            epsilon: self.agent.epsilon,
        };
        hp.validate().map_err(|e| CliError::data("[agent]/[memory]", e))?;
        Ok(hp)
    }

    pub fn group(&self) -> Result<SymmetryGroup> {
        let grid = self.grid_config()?;
        SymmetryGroup::new(self.memory.symmetry, &grid.actions, grid.bin_count())
            .map_err(|e| CliError::data("[memory] symmetry", e))
    }
}
