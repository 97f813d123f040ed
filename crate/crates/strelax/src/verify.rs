//! Randomized property suites behind `strelax verify`.
//!
//! Each suite draws its cases from a fixed seed, so a run is reproducible;
//! the checks use only public operator evaluations, never the code paths
//! they verify.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use strelax_core::linalg::{self, spectral_radius_psd, Matrix, Vector};
use strelax_core::operators::{
    self, alphas, cutter_inequality_slack, sqne_slack, AffineFunction, BlockWeight, ConvexFunction,
    LinearBlock, RelaxedCutter,
};
use strelax_core::problems::{gen_consistent_linear, gen_quadratic, gen_start, QuadraticFunction};
use strelax_core::rng::SplitMix64;
use strelax_core::solver::{self, RelaxationSchedule, StoppingRule};
use strelax_core::step_size::{self, StepSizeMode};
use strelax_core::string_averaging::{evaluate, StringPlan, StringTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Hyperplane,
    Halfspace,
    BlockLinear,
    Subgradient,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Hyperplane, Family::Halfspace, Family::BlockLinear, Family::Subgradient];

    pub fn name(self) -> &'static str {
        match self {
            Family::Hyperplane => "hyperplane",
            Family::Halfspace => "halfspace",
            Family::BlockLinear => "block-linear",
            Family::Subgradient => "subgradient",
        }
    }

    fn seed(self) -> u64 {
        self as u64 + 1
    }
}

/// Result of one property over many sampled cases.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: String,
    pub checked: usize,
    pub failed: usize,
    /// The most adverse value seen (slack minimum, relative error maximum).
    pub worst: f64,
}

impl PropertyOutcome {
    fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), checked: 0, failed: 0, worst: f64::NAN }
    }

    fn record(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
        }
    }

    fn worst_min(&mut self, v: f64) {
        self.worst = if self.worst.is_nan() { v } else { self.worst.min(v) };
    }

    fn worst_max(&mut self, v: f64) {
        self.worst = if self.worst.is_nan() { v } else { self.worst.max(v) };
    }

    pub fn passed(&self) -> bool {
        self.failed == 0 && self.checked > 0
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<40} checked={:<6} failed={:<4} worst={:e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checked,
            self.failed,
            self.worst
        )
    }
}

fn random_vec(rng: &mut SplitMix64, n: usize, scale: f64) -> Vector {
    Vector::from((0..n).map(|_| rng.uniform(-scale, scale)).collect::<Vec<_>>())
}

fn random_alpha(rng: &mut SplitMix64) -> f64 {
    rng.uniform(0.05, 1.95)
}

fn random_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
}

/// A random operator of `family` on `R^n` having `z` as a fixed point.
pub fn sample_operator(family: Family, rng: &mut SplitMix64, z: &[f64], alpha: f64) -> RelaxedCutter {
    let n = z.len();
    match family {
        Family::Hyperplane => {
            let a = random_vec(rng, n, 1.0);
            let b = linalg::dot(&a, z);
            RelaxedCutter::hyperplane(a, b, alpha).unwrap()
        }
        Family::Halfspace => {
            let a = random_vec(rng, n, 1.0);
            let b = linalg::dot(&a, z) + rng.next_f64();
            RelaxedCutter::halfspace(a, b, alpha).unwrap()
        }
        Family::BlockLinear => {
            let rows = 1 + (rng.next_u64() % 4) as usize;
            let a = random_matrix(rng, rows, n);
            let b = a.mul_vec(z);
            let weight = match rng.next_u64() % 3 {
                0 => BlockWeight::Identity,
                1 => BlockWeight::Diagonal(Vector::from(
                    (0..rows).map(|_| rng.uniform(0.5, 2.0)).collect::<Vec<_>>(),
                )),
                _ => {
                    let f = random_matrix(rng, rows, rows);
                    let mut m = f.transpose().mul(&f).unwrap();
                    for i in 0..rows {
                        m.set(i, i, m.get(i, i) + 1.0);
                    }
                    for i in 0..rows {
                        for j in 0..i {
                            m.set(i, j, m.get(j, i));
                        }
                    }
                    BlockWeight::Dense(m)
                }
            };
            RelaxedCutter::block_linear(LinearBlock::new(a, weight, b).unwrap(), alpha).unwrap()
        }
        Family::Subgradient => {
            let g = random_matrix(rng, n, n);
            let c = random_vec(rng, n, 1.0);
            let at_z = linalg::norm_sq(&g.mul_vec(z)) + linalg::dot(&c, z);
            let d = -at_z - rng.next_f64();
            let f = QuadraticFunction::new(g, c, d).unwrap();
            RelaxedCutter::subgradient(Arc::new(f), alpha).unwrap()
        }
    }
}

/// Relaxed-cutter inequality and the equivalent strong quasi-nonexpansive
/// inequality over `samples` random `(x, z)` pairs.
pub fn cutter_suite(family: Family, samples: usize) -> (PropertyOutcome, PropertyOutcome) {
    let mut rng = SplitMix64::with_stream(family.seed(), 100);
    let mut cutter = PropertyOutcome::new(format!("relaxed-cutter/{}", family.name()));
    let mut sqne = PropertyOutcome::new(format!("sqne/{}", family.name()));
    for _ in 0..samples {
        let n = 1 + (rng.next_u64() % 8) as usize;
        let z = random_vec(&mut rng, n, 5.0);
        let alpha = random_alpha(&mut rng);
        let op = sample_operator(family, &mut rng, &z, alpha);
        let x = random_vec(&mut rng, n, 10.0);
        // Slacks scale like ‖x − z‖²; compare against that scale.
        let scale = linalg::norm_sq(&linalg::sub(&x, &z)).max(1.0);
        let s = cutter_inequality_slack(&op, &x, &z).unwrap() / scale;
        cutter.worst_min(s);
        cutter.record(s >= -1e-10);
        let q = sqne_slack(&op, &x, &z).unwrap() / scale;
        sqne.worst_min(q);
        sqne.record(q >= -1e-9);
    }
    (cutter, sqne)
}

/// Random operators sharing a fixed point, a random plan over them, and a
/// random point.
pub fn sample_state(family: Family, rng: &mut SplitMix64) -> (Vec<RelaxedCutter>, StringPlan, Vector, Vector) {
    let n = 1 + (rng.next_u64() % 8) as usize;
    let m = 1 + (rng.next_u64() % 8) as usize;
    let z = random_vec(rng, n, 5.0);
    let ops: Vec<RelaxedCutter> = (0..m)
        .map(|_| {
            let a = random_alpha(rng);
            sample_operator(family, rng, &z, a)
        })
        .collect();
    let e = 1 + (rng.next_u64() % m as u64) as usize;
    let mut order: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        order.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
    }
    let strings: Vec<Vec<usize>> = strelax_core::string_averaging::balanced_ranges(m, e)
        .into_iter()
        .map(|r| order[r].to_vec())
        .collect();
    let raw: Vec<f64> = (0..e).map(|_| rng.uniform(0.1, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let drift: f64 = 1.0 - weights.iter().sum::<f64>();
    weights[0] += drift;
    let plan = StringPlan::new(strings, weights, m).unwrap();
    let x = random_vec(rng, n, 10.0);
    (ops, plan, x, z)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn closed_form(family: Family, trace: &StringTrace, plan: &StringPlan, ops: &[RelaxedCutter]) -> Option<f64> {
    match family {
        Family::BlockLinear => Some(step_size::sigma_max_closed_linear(trace, plan, ops).unwrap()),
        Family::Subgradient => Some(step_size::sigma_max_closed_subgrad(trace, plan, ops).unwrap()),
        _ => None,
    }
}

/// Inner, sum and closed forms of `sigma_max` agree to 1e-9 relative, and
/// every value respects the lower bound.
pub fn sigma_suite(family: Family, states: usize) -> (PropertyOutcome, PropertyOutcome) {
    let mut rng = SplitMix64::with_stream(family.seed(), 200);
    let mut agree = PropertyOutcome::new(format!("sigma-forms/{}", family.name()));
    let mut lower = PropertyOutcome::new(format!("sigma-lower-bound/{}", family.name()));
    let mut attempts = 0;
    while agree.checked < states {
        attempts += 1;
        assert!(attempts < 100 * states, "too many fixed-point samples");
        let (ops, plan, x, _) = sample_state(family, &mut rng);
        let trace = evaluate(&ops, &plan, &x).unwrap();
        if trace.residual() <= 1e-12 {
            continue;
        }
        let a = alphas(&ops);
        let inner = step_size::sigma_max_inner(&trace, &plan, &a).unwrap();
        let sum = step_size::sigma_max_sum(&trace, &plan, &a).unwrap();
        let mut err = rel_err(inner, sum);
        if let Some(closed) = closed_form(family, &trace, &plan, &ops) {
            err = err.max(rel_err(inner, closed)).max(rel_err(sum, closed));
        }
        agree.worst_max(err);
        agree.record(err <= 1e-9);
        let bound = step_size::sigma_lower_bound(&a, &plan);
        lower.worst_min(inner - bound);
        lower.record(inner >= bound - 1e-12 && sum >= bound - 1e-12);
    }
    (agree, lower)
}

/// `E = 1, m = 1` gives `sigma_max = 1/alpha`.
pub fn single_operator_suite() -> PropertyOutcome {
    let mut out = PropertyOutcome::new("sigma-single-operator");
    let mut rng = SplitMix64::with_stream(9, 300);
    for family in Family::ALL {
        for alpha in [0.5, 1.0, 1.5] {
            let mut done = 0;
            while done < 5 {
                let n = 1 + (rng.next_u64() % 6) as usize;
                let z = random_vec(&mut rng, n, 5.0);
                let op = sample_operator(family, &mut rng, &z, alpha);
                let x = random_vec(&mut rng, n, 10.0);
                let ops = [op];
                let plan = StringPlan::sequential(1).unwrap();
                let trace = evaluate(&ops, &plan, &x).unwrap();
                if trace.residual() <= 1e-12 {
                    continue;
                }
                let s = StepSizeMode::sigma_max().sigma(&trace, &plan, &ops).unwrap();
                let err = (s - 1.0 / alpha).abs();
                out.worst_max(err);
                out.record(err <= 1e-12);
                done += 1;
            }
        }
    }
    out
}

/// Singleton-row blocks with weight `1/‖a‖²` equal hyperplane projections;
/// affine subgradient projections equal halfspace projections.
pub fn reduction_suite(points: usize) -> (PropertyOutcome, PropertyOutcome) {
    let mut rng = SplitMix64::with_stream(11, 400);
    let mut kaczmarz = PropertyOutcome::new("kaczmarz-reduction");
    let mut affine = PropertyOutcome::new("affine-reduction");
    for _ in 0..points {
        let n = 1 + (rng.next_u64() % 8) as usize;
        let a = random_vec(&mut rng, n, 1.0);
        let b = rng.uniform(-3.0, 3.0);
        let alpha = random_alpha(&mut rng);
        let x = random_vec(&mut rng, n, 10.0);

        let row = Matrix::new(1, n, a.to_vec()).unwrap();
        let weight = BlockWeight::Diagonal(vec![1.0 / linalg::norm_sq(&a)].into());
        let block = LinearBlock::new(row, weight, vec![b].into()).unwrap();
        let lin = RelaxedCutter::block_linear(block, alpha).unwrap();
        let hyp = RelaxedCutter::hyperplane(a.clone(), b, alpha).unwrap();
        let d = linalg::norm_inf(&linalg::sub(&lin.apply(&x).unwrap(), &hyp.apply(&x).unwrap()));
        kaczmarz.worst_max(d);
        kaczmarz.record(d <= 1e-12);

        let f: Arc<dyn ConvexFunction> = Arc::new(AffineFunction { normal: a.clone(), offset: b });
        let sub = RelaxedCutter::subgradient(f, alpha).unwrap();
        let half = RelaxedCutter::halfspace(a, b, alpha).unwrap();
        let d = linalg::norm_inf(&linalg::sub(&sub.apply(&x).unwrap(), &half.apply(&x).unwrap()));
        affine.worst_max(d);
        affine.record(d <= 1e-12);
    }
    (kaczmarz, affine)
}

/// Power iteration against a dense symmetric eigensolver on random `AᵀA`.
pub fn spectral_suite(matrices: usize, max_dim: usize) -> PropertyOutcome {
    let mut out = PropertyOutcome::new("spectral-radius-vs-eigensolver");
    let mut rng = SplitMix64::with_stream(13, 500);
    for i in 0..matrices {
        let n = 1 + (i * max_dim) / matrices.max(1);
        let n = n.min(max_dim);
        let rows = 1 + (rng.next_u64() % (2 * n as u64)) as usize;
        let a = random_matrix(&mut rng, rows, n);
        let b = a.transpose().mul(&a).unwrap();
        let b = symmetric(&b);
        let estimate = spectral_radius_psd(&b, linalg::SPECTRAL_TOL, linalg::SPECTRAL_MAX_ITER).unwrap();
        let exact = dense_max_eigenvalue(&b);
        let err = rel_err(estimate, exact);
        out.worst_max(err);
        out.record(err <= 1e-8);
    }
    out
}

fn symmetric(m: &Matrix) -> Matrix {
    let mut s = m.clone();
    for i in 0..m.rows() {
        for j in 0..i {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            s.set(i, j, v);
            s.set(j, i, v);
        }
    }
    s
}

/// Largest eigenvalue from a full symmetric eigendecomposition.
pub fn dense_max_eigenvalue(m: &Matrix) -> f64 {
    let d = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    d.symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Quantified Fejér decrease on seeded quadratic runs with `z = (1, …, 1)`.
pub fn fejer_suite() -> PropertyOutcome {
    let mut out = PropertyOutcome::new("fejer-decrease/quadratic");
    for seed in 0..3 {
        let q = gen_quadratic(seed, 20, 8, 0.0).unwrap();
        let x0 = gen_start(seed, 20).unwrap();
        for (alpha, lambda, strings, grt) in
            [(1.0, 1.0, 1, true), (1.5, 1.5, 1, true), (0.5, 0.5, 4, true), (1.0, 1.0, 4, false)]
        {
            let ops = q.build_operators(&[alpha; 8]).unwrap();
            let plan = StringPlan::contiguous(8, strings).unwrap();
            let mode = if grt { StepSizeMode::sigma_max() } else { StepSizeMode::unit() };
            let sched = RelaxationSchedule::constant(lambda).unwrap();
            let r = solver::solve(&ops, &plan, &sched, mode, StoppingRule::default(), &x0, Some(&q.anchor)).unwrap();
            out.record(solver::fejer_audit(&r).unwrap());
        }
    }
    out.worst = 0.0;
    out
}

/// An operator with `alpha = 2.5` must be refused at construction.
pub fn rejection_suite() -> PropertyOutcome {
    let mut out = PropertyOutcome::new("constructor-rejects-alpha-2.5");
    out.record(RelaxedCutter::hyperplane(vec![1.0].into(), 0.0, 2.5).is_err());
    out.record(operators::gamma_composition(&[1.0, 2.5]).is_err());
    out.worst = 0.0;
    out
}

/// Generators are pure functions of their seed.
pub fn determinism_suite() -> PropertyOutcome {
    let mut out = PropertyOutcome::new("generator-determinism");
    for seed in [0, 42, u64::MAX] {
        out.record(gen_quadratic(seed, 4, 3, 0.0).unwrap() == gen_quadratic(seed, 4, 3, 0.0).unwrap());
        out.record(gen_start(seed, 7).unwrap() == gen_start(seed, 7).unwrap());
        out.record(gen_consistent_linear(seed, 5, 3).unwrap() == gen_consistent_linear(seed, 5, 3).unwrap());
    }
    out.worst = 0.0;
    out
}

/// Every suite at the sizes used by the acceptance criteria.
pub fn run_all() -> Vec<PropertyOutcome> {
    let mut out = Vec::new();
    for family in Family::ALL {
        let (a, b) = cutter_suite(family, 1000);
        out.push(a);
        out.push(b);
    }
    for family in Family::ALL {
        let (a, b) = sigma_suite(family, 100);
        out.push(a);
        out.push(b);
    }
    out.push(single_operator_suite());
    let (k, a) = reduction_suite(100);
    out.push(k);
    out.push(a);
    out.push(spectral_suite(50, 50));
    out.push(fejer_suite());
    out.push(rejection_suite());
    out.push(determinism_suite());
    out
}
