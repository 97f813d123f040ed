//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines always reach stdout; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use strelax::bench::{self, RunSpec};
use strelax::config::{ConstraintKind, ConstraintSpec, ExperimentConfig, ModeSpec, ProblemKind};
use strelax::format;
use strelax::verify::{self, Family, PropertyOutcome};
use strelax_core::linalg;
use strelax_core::problems::{gen_consistent_linear, gen_quadratic, gen_start};
use strelax_core::solver::{self, RelaxationSchedule, Status, StoppingRule};
use strelax_core::step_size::StepSizeMode;
use strelax_core::string_averaging::StringPlan;

struct Criterion {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn within(elapsed: Duration, limit: Duration) -> (bool, String) {
    (elapsed < limit, format!("runtime {:.3}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()))
}

fn suites(outcomes: &[PropertyOutcome]) -> (bool, String) {
    let ok = outcomes.iter().all(PropertyOutcome::passed);
    let detail = outcomes
        .iter()
        .map(|o| format!("{} {}/{} worst={:e}", o.name, o.checked - o.failed, o.checked, o.worst))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, detail)
}

fn timed(id: u32, name: &'static str, limit: Option<Duration>, f: impl FnOnce() -> (bool, String)) -> Criterion {
    let start = Instant::now();
    let (mut passed, mut detail) = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        let (ok, t) = within(elapsed, limit);
        passed &= ok;
        detail = format!("{detail}; {t}");
    }
    Criterion { id, name, passed, detail, elapsed }
}

/// The shared instance suite: 10 seeded quadratic systems, n = 50, 20 functions.
fn seeded_suite() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.problem.kind = ProblemKind::Quadratic;
    cfg.problem.seeds = (0..10).collect();
    cfg.problem.n = 50;
    cfg.problem.count = 20;
    cfg.jobs = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    cfg
}

fn c1() -> (bool, String) {
    let mut out = Vec::new();
    for f in Family::ALL {
        let (a, b) = verify::cutter_suite(f, 1000);
        out.push(a);
        out.push(b);
    }
    suites(&out)
}

fn c2() -> (bool, String) {
    let mut out = Vec::new();
    for f in Family::ALL {
        let (a, b) = verify::sigma_suite(f, 100);
        out.push(a);
        out.push(b);
    }
    suites(&out)
}

fn c3() -> (bool, String) {
    suites(&[verify::single_operator_suite()])
}

fn c4() -> (bool, String) {
    let (k, a) = verify::reduction_suite(100);
    suites(&[k, a])
}

/// Every run of the grid protocol (E = 1, alpha, lambda in {0.5, 1, 1.5})
/// and of the string sweep (both modes) passes the decrease audit.
fn c5() -> (bool, String) {
    let cfg = seeded_suite();
    let mut runs = Vec::new();
    for &seed in &cfg.problem.seeds {
        for alpha in [0.5, 1.0, 1.5] {
            for lambda in [0.5, 1.0, 1.5] {
                runs.push(RunSpec { seed, alpha, lambda, strings: 1, grt: true });
            }
        }
        for strings in [1, 2, 4, 5, 10, 20] {
            for grt in [true, false] {
                runs.push(RunSpec { seed, alpha: 1.0, lambda: 1.0, strings, grt });
            }
        }
    }
    let outcomes = bench::run_all(&cfg, &runs, cfg.jobs).expect("runs");
    let mut audited = 0;
    let mut failed = 0;
    let mut iterations = 0;
    for o in &outcomes {
        audited += 1;
        iterations += o.report.iterations;
        if !solver::fejer_audit(&o.report).expect("distances recorded") {
            failed += 1;
        }
    }
    (failed == 0, format!("{audited} runs, {iterations} iterations audited, {failed} violating runs"))
}

fn c6() -> (bool, String) {
    let lf = gen_consistent_linear(6, 20, 10).unwrap();
    let ops = lf.build_operators(&[1.0; 20]).unwrap();
    let plan = StringPlan::sequential(20).unwrap();
    let sched = RelaxationSchedule::constant(1.0).unwrap();
    let stop = StoppingRule { feas_tol: 1e-8, fix_tol: 1e-16, max_iter: 5000 };
    let x0 = gen_start(6, 10).unwrap();
    let r = solver::solve(&ops, &plan, &sched, StepSizeMode::sigma_max(), stop, &x0, None).unwrap();
    let res = linalg::norm_inf(&linalg::sub(&lf.matrix.mul_vec(&r.final_point), &lf.rhs));
    (
        res <= 1e-8 && r.iterations <= 5000,
        format!("status={} iterations={} residual_inf={res:e}", r.status.as_str(), r.iterations),
    )
}

fn c7() -> (bool, String) {
    let mut cfg = seeded_suite();
    cfg.mode = Some(ModeSpec::Both);
    cfg.plan.sweep = vec![2, 10];
    let (_, cells) = bench::cmd_strings(&cfg).expect("sweep");
    // cells: (E=2, grt), (E=2, no-grt), (E=10, grt), (E=10, no-grt)
    let (grt, nogrt) = (&cells[2], &cells[3]);
    let all_ok = cells.iter().all(|c| c.n_failed == 0);
    let (g, n) = (grt.mean_iters.unwrap_or(f64::INFINITY), nogrt.mean_iters.unwrap_or(f64::INFINITY));
    let wins = grt.iterations.iter().zip(&nogrt.iterations).filter(|(a, b)| a <= b).count();
    (
        all_ok && g <= 0.5 * n && wins >= 8,
        format!(
            "E=2 grt={:?} no-grt={:?}; E=10 grt={g} no-grt={n}; grt<=no-grt on {wins}/10 seeds",
            cells[0].mean_iters, cells[1].mean_iters
        ),
    )
}

fn c8() -> (bool, String) {
    let mut cfg = seeded_suite();
    cfg.alphas = vec![0.5, 1.0, 1.5];
    cfg.lambdas = vec![0.5, 1.0, 1.5];
    cfg.plan.strings = 1;
    let (table, cells) = bench::cmd_grid(&cfg).expect("grid");
    let base = &cells[4]; // alpha = 1, lambda = 1
    let (best_i, best) = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.n_failed == 0)
        .min_by(|a, b| a.1.mean_iters.partial_cmp(&b.1.mean_iters).unwrap())
        .expect("some cell converges everywhere");
    let strict = best.iterations.iter().zip(&base.iterations).filter(|(a, b)| a < b).count();
    let ok = base.n_failed == 0 && best.mean_iters <= base.mean_iters && strict >= 6;
    (
        ok,
        format!(
            "best cell (alpha={}, lambda={}) mean={:?} vs (1,1) mean={:?}; strictly fewer on {strict}/10 seeds",
            table.rows[best_i][0], table.rows[best_i][1], best.mean_iters, base.mean_iters
        ),
    )
}

fn c9() -> (bool, String) {
    let mut cfg = seeded_suite();
    cfg.constraint = Some(ConstraintSpec { kind: ConstraintKind::Box, lo: 0.0, hi: 2.0, ..ConstraintSpec::default() });
    let omega = bench::build_constraint(cfg.constraint.as_ref().unwrap(), 50).unwrap();
    let out = bench::run_once(&cfg, RunSpec { seed: 0, alpha: 1.0, lambda: 1.0, strings: 1, grt: true }).unwrap();
    let r = &out.report;
    let inside = omega.contains(&r.final_point);
    let audit = solver::fejer_audit(r).unwrap();
    (
        r.status == Status::Feasible && inside && audit,
        format!(
            "status={} iterations={} in_box={inside} fejer={audit} violation={:e}",
            r.status.as_str(),
            r.iterations,
            r.final_violation
        ),
    )
}

fn c10() -> (bool, String) {
    suites(&[verify::spectral_suite(50, 50)])
}

fn c11() -> (bool, String) {
    let mut notes = Vec::new();
    let mut ok = true;
    let q = |s| format::write_quadratic(&gen_quadratic(s, 50, 20, 0.0).unwrap());
    let l = |s| format::write_linear(&gen_consistent_linear(s, 20, 10).unwrap());
    let x = |s| format!("{:?}", gen_start(s, 50).unwrap().as_slice());
    for seed in 0..10 {
        ok &= q(seed) == q(seed) && l(seed) == l(seed) && x(seed) == x(seed);
    }
    notes.push(format!("generators identical: {ok}"));

    let mut grid = seeded_suite();
    grid.problem.seeds = vec![0, 1, 2];
    grid.alphas = vec![0.5, 1.5];
    grid.lambdas = vec![0.001, 1.0];
    let mut strings = grid.clone();
    strings.mode = Some(ModeSpec::Both);
    strings.plan.sweep = vec![1, 4];
    let mut kacz = grid.clone();
    kacz.problem.kind = ProblemKind::Kaczmarz;
    kacz.problem.n = 10;
    kacz.alphas = vec![1.0];
    kacz.lambdas = vec![1.0];

    let grid_csv = || bench::cmd_grid(&grid).unwrap().0.to_csv(false).unwrap();
    let strings_csv = || bench::cmd_strings(&strings).unwrap().0.to_csv(false).unwrap();
    let solve_csv = |c: &ExperimentConfig| bench::cmd_solve(c).unwrap().0.to_csv(true).unwrap();
    for (name, same) in [
        ("grid", grid_csv() == grid_csv()),
        ("strings", strings_csv() == strings_csv()),
        ("solve-quadratic", solve_csv(&grid) == solve_csv(&grid)),
        ("solve-kaczmarz", solve_csv(&kacz) == solve_csv(&kacz)),
    ] {
        ok &= same;
        notes.push(format!("{name} csv identical: {same}"));
    }
    (ok, notes.join("; "))
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        timed(1, "relaxed-cutter and SQNE inequalities", Some(secs(5)), c1),
        timed(2, "sigma_max form agreement and lower bound", Some(secs(5)), c2),
        timed(3, "single-operator extrapolation 1/alpha", None, c3),
        timed(4, "Kaczmarz and affine reductions", None, c4),
        timed(5, "Fejer decrease audit on grid and sweep runs", None, c5),
        timed(6, "Kaczmarz strings on 20x10 system", Some(secs(1)), c6),
        timed(7, "string sweep trend, grt vs no-grt", Some(secs(60)), c7),
        timed(8, "relaxation grid trend", Some(secs(120)), c8),
        timed(9, "projected solve onto box [0,2]^n", None, c9),
        timed(10, "spectral radius vs dense eigensolver", None, c10),
        timed(11, "determinism of generators and CSV output", None, c11),
    ];
    let mut failed = 0;
    for c in &criteria {
        if !c.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} [{:.2}s] {}: {}",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.elapsed.as_secs_f64(),
            c.name,
            c.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
