//! Run configuration (TOML).
//!
//! ```toml
//! [run]
//! scenario = "marshak-desk"
//! solver = "dlra"          # full | dlra | rosseland
//! t_end = 5e-13            # optional, scenario default otherwise
//! cfl_safety = 0.95
//! assert = "strict"        # strict | monitor
//! seed = 42
//! max_steps = 100000
//!
//! [discretization]         # every key optional
//! epsilon = 1.0
//! nx = 20
//! ny = 20
//! quad_order = 8
//!
//! [lowrank]
//! theta_factor = 0.01
//! rank_initial = 10
//! rank_max = 100
//!
//! [output]
//! dump_every = 0           # 0: initial and final dumps only
//! vtk = false
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{builtin_scenario, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Full,
    Dlra,
    Rosseland,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(SolverKind::Full),
            "dlra" => Ok(SolverKind::Dlra),
            "rosseland" => Ok(SolverKind::Rosseland),
            other => Err(Error::Config(format!("unknown solver '{other}' (full | dlra | rosseland)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssertMode {
    /// A step with e^{n+1} > e^n + 1e−12·e^0 aborts the run.
    Strict,
    /// Energy increases are only logged.
    Monitor,
}

impl std::str::FromStr for AssertMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(AssertMode::Strict),
            "monitor" => Ok(AssertMode::Monitor),
            other => Err(Error::Config(format!("unknown assertion mode '{other}' (strict | monitor)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub scenario: String,
    pub solver: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_assert")]
    pub assert: AssertMode,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowRankSection {
    #[serde(default = "default_theta")]
    pub theta_factor: f64,
    #[serde(default = "default_r0")]
    pub rank_initial: usize,
    #[serde(default = "default_rmax")]
    pub rank_max: usize,
}

impl Default for LowRankSection {
    fn default() -> Self {
        LowRankSection { theta_factor: default_theta(), rank_initial: default_r0(), rank_max: default_rmax() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dump_every: usize,
    #[serde(default)]
    pub vtk: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub discretization: DiscretizationSection,
    #[serde(default)]
    pub lowrank: LowRankSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_safety() -> f64 {
    0.95
}
fn default_assert() -> AssertMode {
    AssertMode::Strict
}
fn default_seed() -> u64 {
    42
}
fn default_max_steps() -> usize {
    1_000_000
}
fn default_theta() -> f64 {
    1e-2
}
fn default_r0() -> usize {
    10
}
fn default_rmax() -> usize {
    100
}

impl RunConfig {
    pub fn new(scenario: &str, solver: SolverKind) -> Self {
        RunConfig {
            run: RunSection {
                scenario: scenario.into(),
                solver,
                t_end: None,
                cfl_safety: default_safety(),
                assert: default_assert(),
                seed: default_seed(),
                max_steps: default_max_steps(),
            },
            discretization: DiscretizationSection::default(),
            lowrank: LowRankSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if !(r.cfl_safety > 0.0 && r.cfl_safety <= 1.0) {
            return Err(Error::Config(format!("cfl_safety must lie in (0, 1], got {}", r.cfl_safety)));
        }
        if let Some(t) = r.t_end {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::Config(format!("t_end must be a finite non-negative number, got {t}")));
            }
        }
        if let Some(e) = self.discretization.epsilon {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(Error::Config(format!("epsilon must be non-negative, got {e}")));
            }
        }
        let l = &self.lowrank;
        if !(l.theta_factor >= 0.0) || !l.theta_factor.is_finite() {
            return Err(Error::Config(format!("theta_factor must be non-negative, got {}", l.theta_factor)));
        }
        if l.rank_initial == 0 || l.rank_max == 0 {
            return Err(Error::Config("ranks must be positive".into()));
        }
        Ok(())
    }

    /// Built-in scenario with this config's overrides applied.
    pub fn scenario(&self) -> Result<Scenario> {
        self.validate()?;
        let mut s = builtin_scenario(&self.run.scenario)?;
        let d = &self.discretization;
        if let Some(e) = d.epsilon {
            s.eps = e;
        }
        if let Some(n) = d.nx {
            s.nx = n;
        }
        if let Some(n) = d.ny {
            s.ny = n;
        }
        if let Some(q) = d.quad_order {
            s.quad_order = q;
        }
        if let Some(t) = self.run.t_end {
            s.t_end = t;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = RunConfig::new("marshak-desk", SolverKind::Dlra);
        c.discretization.epsilon = Some(1e-3);
        c.run.t_end = Some(1e-13);
        c.output.vtk = true;
        let s = c.to_toml().unwrap();
        let back = RunConfig::from_toml(&s).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml().unwrap(), s);
    }

    #[test]
    fn minimal_and_invalid() {
        let c = RunConfig::from_toml("[run]\nscenario = \"gaussian-desk\"\nsolver = \"full\"\n").unwrap();
        assert_eq!(c.lowrank.rank_max, 100);
        assert_eq!(c.run.assert, AssertMode::Strict);
        assert!(RunConfig::from_toml("[run]\nscenario = \"x\"\nsolver = \"spectral\"\n").is_err());
        assert!(RunConfig::from_toml("[run]\nscenario = \"x\"\nsolver = \"full\"\ncfl_safety = 2.0\n").is_err());
        assert!(RunConfig::from_toml("[run]\nscenario = \"x\"\nsolver = \"full\"\nbogus = 1\n").is_err());
    }
}
