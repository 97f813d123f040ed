//! Seeded problem instances: random convex quadratic inequality systems and
//! consistent linear systems split into row blocks.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq, Matrix, Vector};
use crate::operators::{BlockWeight, ConvexFunction, LinearBlock, RelaxedCutter};
use crate::rng::SplitMix64;
use crate::string_averaging::balanced_ranges;

const STREAM_QUADRATIC: u64 = 1;
const STREAM_START: u64 = 2;
const STREAM_LINEAR: u64 = 3;

/// `g(x) = xᵀGᵀGx + cᵀx + d`, convex because `GᵀG` is positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFunction {
    factor: Matrix,
    linear: Vector,
    constant: f64,
}

impl QuadraticFunction {
    pub fn new(factor: Matrix, linear: Vector, constant: f64) -> Result<Self> {
        if factor.cols() != linear.dim() {
            return Err(Error::invalid("G and c have mismatched dimensions"));
        }
        if !constant.is_finite() {
            return Err(Error::invalid("d must be finite"));
        }
        Ok(Self { factor, linear, constant })
    }

    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    pub fn linear(&self) -> &Vector {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }
}

impl ConvexFunction for QuadraticFunction {
    fn dim(&self) -> usize {
        self.linear.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        norm_sq(&self.factor.mul_vec(x)) + dot(&self.linear, x) + self.constant
    }

    /// The gradient `2GᵀGx + c`.
    fn subgradient(&self, x: &[f64]) -> Vector {
        let gx = self.factor.mul_vec(x);
        let mut g = self.factor.tr_mul_vec(&gx);
        for (gi, ci) in g.iter_mut().zip(self.linear.iter()) {
            *gi = 2.0 * *gi + ci;
        }
        g
    }
}

/// A system `gᵢ(x) ≤ 0` of random convex quadratics, all satisfied at the
/// anchor `y = (1, …, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSystem {
    pub seed: u64,
    pub margin: f64,
    pub functions: Vec<Arc<QuadraticFunction>>,
    pub anchor: Vector,
}

impl QuadraticSystem {
    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn build_operators(&self, alphas: &[f64]) -> Result<Vec<RelaxedCutter>> {
        check_alpha_count(alphas, self.len())?;
        self.functions
            .iter()
            .zip(alphas)
            .map(|(f, &a)| RelaxedCutter::subgradient(f.clone() as Arc<dyn ConvexFunction>, a))
            .collect()
    }
}

/// `count` quadratics on `R^n` with entries of `Gᵢ` and `cᵢ` uniform in
/// `[−1, 1]` and `dᵢ` chosen so that `gᵢ(y) = −margin` at `y = (1, …, 1)`.
///
/// Draw order per function: `Gᵢ` row-major, then `cᵢ`.
pub fn gen_quadratic(seed: u64, n: usize, count: usize, margin: f64) -> Result<QuadraticSystem> {
    if n == 0 || count == 0 {
        return Err(Error::invalid("n and count must be at least 1"));
    }
    if !(margin >= 0.0) || !margin.is_finite() {
        return Err(Error::invalid("margin must be a nonnegative number"));
    }
    let mut rng = SplitMix64::with_stream(seed, STREAM_QUADRATIC);
    let anchor = Vector::filled(n, 1.0);
    let mut functions = Vec::with_capacity(count);
    for _ in 0..count {
        let g: Vec<f64> = (0..n * n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let factor = Matrix::new(n, n, g)?;
        let linear = Vector::from(c);
        let at_anchor = norm_sq(&factor.mul_vec(&anchor)) + dot(&linear, &anchor);
        functions.push(Arc::new(QuadraticFunction::new(factor, linear, -at_anchor - margin)?));
    }
    Ok(QuadraticSystem { seed, margin, functions, anchor })
}

/// Start point with components uniform in `[−10, 10]`.
pub fn gen_start(seed: u64, n: usize) -> Result<Vector> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let mut rng = SplitMix64::with_stream(seed, STREAM_START);
    Ok(Vector::from((0..n).map(|_| rng.uniform(-10.0, 10.0)).collect::<Vec<_>>()))
}

/// Row weighting of a linear block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// `M = I` (Landweber).
    Identity,
    /// `M = diag(1/‖aⁱ‖²)` (Cimmino-type; Kaczmarz for singleton blocks).
    RowInverseNormSq,
}

/// `Ax = b` with the rows split into contiguous blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFeasibility {
    pub seed: Option<u64>,
    pub matrix: Matrix,
    pub rhs: Vector,
    pub blocks: Vec<Range<usize>>,
    pub weight_mode: WeightMode,
    /// Known solution, when the instance was built from one.
    pub solution: Option<Vector>,
}

impl LinearFeasibility {
    pub fn new(matrix: Matrix, rhs: Vector, blocks: Vec<Range<usize>>, weight_mode: WeightMode) -> Result<Self> {
        if rhs.dim() != matrix.rows() {
            return Err(Error::invalid("b must have one entry per row of A"));
        }
        let mut next = 0;
        for r in &blocks {
            if r.start != next || r.is_empty() {
                return Err(Error::invalid("blocks must be nonempty, contiguous and ordered"));
            }
            next = r.end;
        }
        if next != matrix.rows() {
            return Err(Error::invalid("blocks must cover every row"));
        }
        Ok(Self { seed: None, matrix, rhs, blocks, weight_mode, solution: None })
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    /// Re-split the rows into `p` balanced blocks.
    pub fn with_blocks(mut self, p: usize, weight_mode: WeightMode) -> Result<Self> {
        self.blocks = partition_rows(self.rows(), p)?;
        self.weight_mode = weight_mode;
        Ok(self)
    }

    /// `max_i |⟨aⁱ, x⟩ − bⁱ|`
    pub fn violation(&self, x: &[f64]) -> f64 {
        (0..self.rows())
            .map(|i| (dot(self.matrix.row(i), x) - self.rhs[i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn build_operators(&self, alphas: &[f64]) -> Result<Vec<RelaxedCutter>> {
        check_alpha_count(alphas, self.blocks.len())?;
        self.blocks
            .iter()
            .zip(alphas)
            .enumerate()
            .map(|(t, (range, &alpha))| {
                let a = self.matrix.row_block(range.clone());
                let b = Vector::from(&self.rhs[range.clone()]);
                let weight = match self.weight_mode {
                    WeightMode::Identity => BlockWeight::Identity,
                    WeightMode::RowInverseNormSq => {
                        let mut d = Vec::with_capacity(a.rows());
                        for i in 0..a.rows() {
                            let n2 = norm_sq(a.row(i));
                            if n2 == 0.0 {
                                return Err(Error::invalid(format!("block {t} contains a zero row")));
                            }
                            d.push(1.0 / n2);
                        }
                        BlockWeight::Diagonal(d.into())
                    }
                };
                let block = LinearBlock::new(a, weight, b)
                    .map_err(|e| Error::invalid(format!("block {t}: {e}")))?;
                RelaxedCutter::block_linear(block, alpha)
            })
            .collect()
    }
}

/// Random consistent `m × n` system: `A` and `x*` uniform in `[−1, 1]`,
/// `b = A x*`. Rows start as singleton blocks with Kaczmarz weights.
pub fn gen_consistent_linear(seed: u64, m: usize, n: usize) -> Result<LinearFeasibility> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("m and n must be at least 1"));
    }
    let mut rng = SplitMix64::with_stream(seed, STREAM_LINEAR);
    let a = Matrix::new(m, n, (0..m * n).map(|_| rng.uniform(-1.0, 1.0)).collect())?;
    let solution = Vector::from((0..n).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<_>>());
    let rhs = a.mul_vec(&solution);
    let mut lf = LinearFeasibility::new(a, rhs, partition_rows(m, m)?, WeightMode::RowInverseNormSq)?;
    lf.seed = Some(seed);
    lf.solution = Some(solution);
    Ok(lf)
}

/// `p` contiguous row blocks of `m` rows, sizes differing by at most one
/// (the first `m mod p` blocks take the extra row).
pub fn partition_rows(m: usize, p: usize) -> Result<Vec<Range<usize>>> {
    if p == 0 || p > m {
        return Err(Error::invalid(format!("cannot split {m} rows into {p} blocks")));
    }
    Ok(balanced_ranges(m, p))
}

fn check_alpha_count(alphas: &[f64], expected: usize) -> Result<()> {
    if alphas.len() != expected {
        return Err(Error::invalid(format!(
            "expected {expected} relaxations, got {}",
            alphas.len()
        )));
    }
    Ok(())
}

/// A problem the solver and harness know how to build operators for.
#[derive(Debug, Clone)]
pub enum Problem {
    Quadratic(QuadraticSystem),
    Linear(LinearFeasibility),
}

impl Problem {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Quadratic(q) => q.dim(),
            Problem::Linear(l) => l.dim(),
        }
    }

    /// Number of operators `build_operators` produces.
    pub fn operator_count(&self) -> usize {
        match self {
            Problem::Quadratic(q) => q.len(),
            Problem::Linear(l) => l.blocks.len(),
        }
    }

    pub fn build_operators(&self, alphas: &[f64]) -> Result<Vec<RelaxedCutter>> {
        match self {
            Problem::Quadratic(q) => q.build_operators(alphas),
            Problem::Linear(l) => l.build_operators(alphas),
        }
    }

    /// Same relaxation for every operator.
    pub fn build_uniform(&self, alpha: f64) -> Result<Vec<RelaxedCutter>> {
        self.build_operators(&alloc::vec![alpha; self.operator_count()])
    }

    /// A point known to be feasible, if any.
    pub fn known_feasible(&self) -> Option<&Vector> {
        match self {
            Problem::Quadratic(q) => Some(&q.anchor),
            Problem::Linear(l) => l.solution.as_ref(),
        }
    }
}
