//! Experiment configuration, read from a TOML document.
//!
//! Every key is optional; see `configs/table2.toml` for a commented example.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use strelax_core::solver::StoppingRule;
use strelax_core::step_size::{SigmaForm, StepSizeMode, DEFAULT_FIX_TOL};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Random convex quadratic inequalities.
    Quadratic,
    /// Consistent linear system split into row blocks.
    Linear,
    /// Consistent linear system with one hyperplane projection per row.
    Kaczmarz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Identity,
    RowInverseNormSq,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub seeds: Vec<u64>,
    /// Dimension of the unknown.
    pub n: usize,
    /// Number of quadratic functions, or rows of the linear system.
    pub count: usize,
    /// Quadratics: `g_i(y) = -margin` at `y = (1, ..., 1)`.
    pub margin: f64,
    /// Linear: number of row blocks.
    pub blocks: usize,
    pub weights: Weighting,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            kind: ProblemKind::Quadratic,
            seeds: (0..10).collect(),
            n: 50,
            count: 20,
            margin: 0.0,
            blocks: 1,
            weights: Weighting::Identity,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSpec {
    /// Number of strings `E` used by `grid` and `solve`.
    pub strings: usize,
    /// String counts swept by `strings`.
    pub sweep: Vec<usize>,
}

impl Default for PlanSpec {
    fn default() -> Self {
        Self { strings: 1, sweep: vec![2, 4, 5, 10, 20] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    Grt,
    NoGrt,
    Both,
}

/// Which algebraic form evaluates `sigma_max` in grt runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaSpec {
    Inner,
    Sum,
    /// The closed form matching the problem kind.
    Closed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopSpec {
    pub feas_tol: f64,
    pub fix_tol: f64,
    pub max_iter: usize,
}

impl Default for StopSpec {
    fn default() -> Self {
        let d = StoppingRule::default();
        Self { feas_tol: d.feas_tol, fix_tol: d.fix_tol, max_iter: d.max_iter }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    None,
    Box,
    Ball,
    Halfspace,
    NonnegativeOrthant,
}

/// The projection set `Omega` of a projected solve. Vector-valued
/// parameters are given as one scalar broadcast to every coordinate.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub radius: f64,
    pub normal: f64,
    pub offset: f64,
}

impl Default for ConstraintSpec {
    fn default() -> Self {
        Self { kind: ConstraintKind::None, lo: 0.0, hi: 1.0, center: 0.0, radius: 1.0, normal: 1.0, offset: 0.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub plan: PlanSpec,
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Unset: `grid` and `solve` run grt, `strings` runs both.
    pub mode: Option<ModeSpec>,
    pub sigma: SigmaSpec,
    pub stop: StopSpec,
    /// Present only for projected solves.
    pub constraint: Option<ConstraintSpec>,
    pub output: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::default(),
            plan: PlanSpec::default(),
            alphas: vec![1.0],
            lambdas: vec![1.0],
            mode: None,
            sigma: SigmaSpec::Inner,
            stop: StopSpec::default(),
            constraint: None,
            output: None,
            jobs: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.problem.seeds.is_empty() {
            return bad("problem.seeds must be nonempty");
        }
        if self.alphas.is_empty() || self.lambdas.is_empty() {
            return bad("alphas and lambdas must be nonempty");
        }
        if self.plan.sweep.is_empty() {
            return bad("plan.sweep must be nonempty");
        }
        if self.problem.n == 0 || self.problem.count == 0 {
            return bad("problem.n and problem.count must be positive");
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1");
        }
        if let Err(e) = self.stopping().validate() {
            return Err(CliError::Config(e.to_string()));
        }
        Ok(())
    }

    pub fn stopping(&self) -> StoppingRule {
        StoppingRule { feas_tol: self.stop.feas_tol, fix_tol: self.stop.fix_tol, max_iter: self.stop.max_iter }
    }

    /// Step-size mode of a grt (`true`) or no-grt run.
    pub fn step_mode(&self, grt: bool) -> StepSizeMode {
        let form = if !grt {
            SigmaForm::Unit
        } else {
            match (self.sigma, self.problem.kind) {
                (SigmaSpec::Inner, _) => SigmaForm::SigmaInner,
                (SigmaSpec::Sum, _) => SigmaForm::SigmaSum,
                (SigmaSpec::Closed, ProblemKind::Quadratic) => SigmaForm::SigmaClosedSubgrad,
                (SigmaSpec::Closed, _) => SigmaForm::SigmaClosedLinear,
            }
        };
        StepSizeMode { form, fix_tol: DEFAULT_FIX_TOL.min(self.stop.fix_tol) }
    }

    /// Modes to run, falling back to `default` when the config names none.
    pub fn modes(&self, default: ModeSpec) -> Vec<bool> {
        match self.mode.unwrap_or(default) {
            ModeSpec::Grt => vec![true],
            ModeSpec::NoGrt => vec![false],
            ModeSpec::Both => vec![true, false],
        }
    }
}

/// Parses `--seeds`: a comma list (`1,5,9`) and/or half-open ranges (`0..10`).
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let parse = |s: &str| {
            s.trim().parse::<u64>().map_err(|_| CliError::Config(format!("bad seed `{s}`")))
        };
        if let Some((a, b)) = part.split_once("..") {
            seeds.extend(parse(a)?..parse(b)?);
        } else {
            seeds.push(parse(part)?);
        }
    }
    if seeds.is_empty() {
        return Err(CliError::Config("--seeds selects no seeds".into()));
    }
    Ok(seeds)
}
