//! Benchmark protocols: relaxation grids over `(alpha, lambda)`, string-count
//! sweeps with and without extrapolation, and single diagnostic solves.

use std::time::Instant;

use rayon::prelude::*;
use strelax_core::linalg::Vector;
use strelax_core::problems::{gen_consistent_linear, gen_quadratic, gen_start, Problem, WeightMode};
use strelax_core::solver::{self, ConstraintSet, IterationReport, RelaxationSchedule, Status};
use strelax_core::string_averaging::StringPlan;

use crate::config::{ConstraintKind, ModeSpec, ConstraintSpec, ExperimentConfig, ProblemKind, ProblemSpec, Weighting};
use crate::error::CliError;

/// Written above every aggregate table.
pub const AGGREGATE_NOTE: &str =
    "# mean_iters and mean_seconds average the seeds that reached a feasible point; \
     n_failed counts the others; '*' marks cells where every seed failed";

pub fn build_problem(spec: &ProblemSpec, seed: u64) -> Result<Problem, CliError> {
    let problem = match spec.kind {
        ProblemKind::Quadratic => Problem::Quadratic(gen_quadratic(seed, spec.n, spec.count, spec.margin)?),
        ProblemKind::Kaczmarz => Problem::Linear(gen_consistent_linear(seed, spec.count, spec.n)?),
        ProblemKind::Linear => {
            let weights = match spec.weights {
                Weighting::Identity => WeightMode::Identity,
                Weighting::RowInverseNormSq => WeightMode::RowInverseNormSq,
            };
            let lf = gen_consistent_linear(seed, spec.count, spec.n)?
                .with_blocks(spec.blocks, weights)
                .map_err(|e| CliError::Config(e.to_string()))?;
            Problem::Linear(lf)
        }
    };
    Ok(problem)
}

pub fn build_constraint(spec: &ConstraintSpec, n: usize) -> Result<ConstraintSet, CliError> {
    let fill = |v: f64| Vector::filled(n, v);
    let set = match spec.kind {
        ConstraintKind::None => Ok(ConstraintSet::None),
        ConstraintKind::NonnegativeOrthant => Ok(ConstraintSet::NonnegativeOrthant),
        ConstraintKind::Box => ConstraintSet::boxed(fill(spec.lo), fill(spec.hi)),
        ConstraintKind::Ball => ConstraintSet::ball(fill(spec.center), spec.radius),
        ConstraintKind::Halfspace => ConstraintSet::halfspace(fill(spec.normal), spec.offset),
    };
    set.map_err(|e| CliError::Config(e.to_string()))
}

/// One seeded run of one configuration cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub seed: u64,
    pub alpha: f64,
    pub lambda: f64,
    pub strings: usize,
    pub grt: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: IterationReport,
    /// Wall-clock time of the iteration loop only.
    pub seconds: f64,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        self.report.status == Status::Feasible
    }
}

/// Builds the instance, operators and plan for `run`, then times the solve.
pub fn run_once(cfg: &ExperimentConfig, run: RunSpec) -> Result<RunOutcome, CliError> {
    let problem = build_problem(&cfg.problem, run.seed)?;
    let ops = problem.build_uniform(run.alpha).map_err(|e| CliError::Config(e.to_string()))?;
    let plan = StringPlan::contiguous(ops.len(), run.strings).map_err(|e| CliError::Config(e.to_string()))?;
    let x0 = gen_start(run.seed, problem.dim())?;
    let z = problem.known_feasible().cloned();
    let mode = cfg.step_mode(run.grt);
    let stop = cfg.stopping();
    let omega = cfg.constraint.as_ref().map(|c| build_constraint(c, problem.dim())).transpose()?;
    let schedule = RelaxationSchedule::constant(run.lambda).map_err(|e| CliError::Config(e.to_string()))?;

    let started = Instant::now();
    let report = match &omega {
        Some(omega) => {
            solver::solve_projected(&ops, &plan, run.lambda, mode, stop, &x0, omega, z.as_deref())?
        }
        None => solver::solve(&ops, &plan, &schedule, mode, stop, &x0, z.as_deref())?,
    };
    let seconds = started.elapsed().as_secs_f64();
    Ok(RunOutcome { report, seconds })
}

/// Runs every spec, `jobs` at a time; results come back in input order.
pub fn run_all(cfg: &ExperimentConfig, runs: &[RunSpec], jobs: usize) -> Result<Vec<RunOutcome>, CliError> {
    if jobs <= 1 {
        return runs.iter().map(|r| run_once(cfg, *r)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| runs.par_iter().map(|r| run_once(cfg, *r)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub mean_iters: Option<f64>,
    pub mean_seconds: Option<f64>,
    pub n_failed: usize,
    pub iterations: Vec<usize>,
    pub statuses: Vec<Status>,
}

pub fn summarize(outcomes: &[RunOutcome]) -> CellSummary {
    let ok: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.succeeded()).collect();
    let mean = |f: &dyn Fn(&RunOutcome) -> f64| {
        (!ok.is_empty()).then(|| ok.iter().map(|o| f(o)).sum::<f64>() / ok.len() as f64)
    };
    CellSummary {
        mean_iters: mean(&|o| o.report.iterations as f64),
        mean_seconds: mean(&|o| o.seconds),
        n_failed: outcomes.len() - ok.len(),
        iterations: outcomes.iter().map(|o| o.report.iterations).collect(),
        statuses: outcomes.iter().map(|o| o.report.status).collect(),
    }
}

/// A CSV table whose timing columns can be dropped for determinism checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub note: Option<&'static str>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub timing_columns: Vec<usize>,
}

impl Table {
    pub fn to_csv(&self, with_timing: bool) -> Result<String, CliError> {
        let keep: Vec<usize> = (0..self.header.len())
            .filter(|i| with_timing || !self.timing_columns.contains(i))
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(keep.iter().map(|&i| self.header[i]))?;
        for row in &self.rows {
            w.write_record(keep.iter().map(|&i| row[i].as_str()))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)
            .expect("csv output is utf-8");
        Ok(match self.note {
            Some(note) => format!("{note}\n{body}"),
            None => body,
        })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

fn fmt_mean(v: Option<f64>) -> String {
    v.map_or_else(|| "*".to_string(), |v| format!("{v}"))
}

fn fmt_seconds(v: Option<f64>) -> String {
    v.map_or_else(|| "*".to_string(), |v| format!("{v:.6}"))
}

/// `(alpha, lambda)` grid with `E = plan.strings`, one row per cell.
pub fn cmd_grid(cfg: &ExperimentConfig) -> Result<(Table, Vec<CellSummary>), CliError> {
    let grt = match cfg.modes(ModeSpec::Grt).as_slice() {
        [g] => *g,
        _ => return Err(CliError::Config("grid needs mode \"grt\" or \"no-grt\"".into())),
    };
    let cells: Vec<(f64, f64)> = cfg
        .alphas
        .iter()
        .flat_map(|&a| cfg.lambdas.iter().map(move |&l| (a, l)))
        .collect();
    let runs: Vec<RunSpec> = cells
        .iter()
        .flat_map(|&(alpha, lambda)| {
            cfg.problem.seeds.iter().map(move |&seed| RunSpec {
                seed,
                alpha,
                lambda,
                strings: cfg.plan.strings,
                grt,
            })
        })
        .collect();
    let outcomes = run_all(cfg, &runs, cfg.jobs)?;
    let per_cell = cfg.problem.seeds.len();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (i, &(alpha, lambda)) in cells.iter().enumerate() {
        let s = summarize(&outcomes[i * per_cell..(i + 1) * per_cell]);
        rows.push(vec![
            format!("{alpha}"),
            format!("{lambda}"),
            fmt_mean(s.mean_iters),
            fmt_seconds(s.mean_seconds),
            s.n_failed.to_string(),
        ]);
        summaries.push(s);
    }
    let table = Table {
        note: Some(AGGREGATE_NOTE),
        header: vec!["alpha", "lambda", "mean_iters", "mean_seconds", "n_failed"],
        rows,
        timing_columns: vec![3],
    };
    Ok((table, summaries))
}

/// String-count sweep at `alpha = alphas[0]`, `lambda = lambdas[0]`: for
/// every `E` one row per mode.
pub fn cmd_strings(cfg: &ExperimentConfig) -> Result<(Table, Vec<CellSummary>), CliError> {
    let (alpha, lambda) = (cfg.alphas[0], cfg.lambdas[0]);
    let modes = cfg.modes(ModeSpec::Both);
    let cells: Vec<(usize, bool)> = cfg
        .plan
        .sweep
        .iter()
        .flat_map(|&e| modes.iter().map(move |&g| (e, g)))
        .collect();
    let runs: Vec<RunSpec> = cells
        .iter()
        .flat_map(|&(strings, grt)| {
            cfg.problem.seeds.iter().map(move |&seed| RunSpec { seed, alpha, lambda, strings, grt })
        })
        .collect();
    let outcomes = run_all(cfg, &runs, cfg.jobs)?;
    let per_cell = cfg.problem.seeds.len();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (i, &(strings, grt)) in cells.iter().enumerate() {
        let s = summarize(&outcomes[i * per_cell..(i + 1) * per_cell]);
        rows.push(vec![
            strings.to_string(),
            if grt { "grt" } else { "no-grt" }.to_string(),
            fmt_mean(s.mean_iters),
            fmt_seconds(s.mean_seconds),
            s.n_failed.to_string(),
        ]);
        summaries.push(s);
    }
    let table = Table {
        note: Some(AGGREGATE_NOTE),
        header: vec!["strings", "mode", "mean_iters", "mean_seconds", "n_failed"],
        rows,
        timing_columns: vec![3],
    };
    Ok((table, summaries))
}

/// Single run at the first seed, alpha and lambda; grt unless the config names a mode.
pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<(Table, RunOutcome), CliError> {
    let run = RunSpec {
        seed: cfg.problem.seeds[0],
        alpha: cfg.alphas[0],
        lambda: cfg.lambdas[0],
        strings: cfg.plan.strings,
        grt: cfg.modes(ModeSpec::Grt)[0],
    };
    let outcome = run_once(cfg, run)?;
    Ok((iteration_table(&outcome.report), outcome))
}

pub fn iteration_table(report: &IterationReport) -> Table {
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                format!("{}", r.sigma),
                format!("{}", r.lambda),
                format!("{}", r.residual),
                format!("{}", r.violation),
                r.distance.map_or_else(String::new, |d| format!("{d}")),
                format!("{}", r.bound),
            ]
        })
        .collect();
    Table {
        note: None,
        header: vec!["k", "sigma", "lambda", "residual", "violation", "distance", "bound"],
        rows,
        timing_columns: vec![],
    }
}

pub fn summary_line(outcome: &RunOutcome) -> String {
    let r = &outcome.report;
    let dist = r.final_distance.map_or_else(|| "none".to_string(), |d| format!("{d:e}"));
    format!(
        "status={} iterations={} final_violation={:e} final_distance={} seconds={:.6}",
        r.status.as_str(),
        r.iterations,
        r.final_violation,
        dist,
        outcome.seconds
    )
}
