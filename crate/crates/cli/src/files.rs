//! JSON instance and plan documents.

use std::fs;
use std::path::Path;

use fairhorizon::{Configuration, Instance, Plan, Q};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// `reach[i][j] == 1` when an ambulance at zone `j` reaches zone `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub bases: Vec<usize>,
    pub reach: Vec<Vec<u8>>,
    pub zeta: Vec<u32>,
    pub m: u32,
    pub f: f64,
    pub default_r: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance, positions: Option<Vec<[f64; 2]>>) -> Self {
        InstanceFile {
            n: inst.n,
            bases: inst.bases.clone(),
            reach: inst.reach.clone(),
            zeta: inst.demand.clone(),
            m: inst.fleet,
            f: inst.coverage_floor,
            default_r: inst.transition_limit,
            positions,
        }
    }

    pub fn to_instance(&self, horizon: usize) -> CliResult<Instance> {
        let inst = Instance {
            n: self.n,
            bases: self.bases.clone(),
            reach: self.reach.clone(),
            demand: self.zeta.clone(),
            fleet: self.m,
            coverage_floor: self.f,
            transition_limit: self.default_r,
            horizon,
        };
        inst.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(p) = &self.positions {
            if p.len() != self.n {
                return Err(CliError::Usage(format!("expected {} positions, got {}", self.n, p.len())));
            }
        }
        Ok(inst)
    }
}

/// Placements per period and the exact average benefits as `a/b` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub steps: Vec<Vec<u32>>,
    pub benefits: Vec<String>,
}

impl PlanFile {
    pub fn from_plan(plan: &Plan) -> Self {
        PlanFile {
            horizon: plan.horizon(),
            steps: plan.steps.iter().map(|s| s.placement.clone()).collect(),
            benefits: plan.benefits.iter().map(|b| b.to_string()).collect(),
        }
    }

    /// Rebuilds the plan against `inst`, recomputing coverage and checking
    /// the stored benefits.
    pub fn to_plan(&self, inst: &Instance) -> CliResult<Plan> {
        if self.steps.len() != self.horizon {
            return Err(CliError::Usage(format!(
                "plan declares T = {} but has {} steps",
                self.horizon,
                self.steps.len()
            )));
        }
        let steps = self
            .steps
            .iter()
            .map(|x| Configuration::new(inst, x.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let plan = Plan::from_steps(steps)?;
        let stored = self
            .benefits
            .iter()
            .map(|s| s.parse::<Q>().map_err(|e| CliError::Usage(format!("benefit {s:?}: {e}"))))
            .collect::<CliResult<Vec<_>>>()?;
        if stored != plan.benefits {
            return Err(CliError::Usage("stored benefits do not match the steps".into()));
        }
        Ok(plan)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Compact JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string(value).expect("plain data serializes");
    text.push('\n');
    text
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
