//! Strictly relaxed cutter operators and the relaxation algebra of their
//! compositions and convex combinations.
//!
//! An operator `T` is an α-relaxed cutter when
//! `α⟨T(x) − x, z − x⟩ ≥ ‖T(x) − x‖²` for every `x` and every fixed point `z`.
//! Each [`RelaxedCutter`] here is `T = Id + α(C − Id)` for a cutter `C`
//! (an orthogonal or subgradient projection, or a normalized Landweber step).

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, axpy, dot, norm_sq, spectral_radius_psd, Matrix, Vector};

/// A convex function `g` together with a subgradient selection `ℓ`.
pub trait ConvexFunction: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn subgradient(&self, x: &[f64]) -> Vector;
}

/// `g(x) = ⟨a, x⟩ − b`.
#[derive(Debug, Clone)]
pub struct AffineFunction {
    pub normal: Vector,
    pub offset: f64,
}

impl ConvexFunction for AffineFunction {
    fn dim(&self) -> usize {
        self.normal.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    fn subgradient(&self, _x: &[f64]) -> Vector {
        self.normal.clone()
    }
}

/// Symmetric positive-definite weight `M_t` of a linear block.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockWeight {
    Identity,
    Diagonal(Vector),
    Dense(Matrix),
}

impl BlockWeight {
    fn apply(&self, r: &mut Vector) {
        match self {
            BlockWeight::Identity => {}
            BlockWeight::Diagonal(d) => {
                for (ri, di) in r.iter_mut().zip(d.iter()) {
                    *ri *= di;
                }
            }
            BlockWeight::Dense(m) => *r = m.mul_vec(r),
        }
    }

    fn validate(&self, rows: usize) -> Result<()> {
        match self {
            BlockWeight::Identity => Ok(()),
            BlockWeight::Diagonal(d) => {
                if d.dim() != rows {
                    return Err(Error::invalid("diagonal weight has wrong length"));
                }
                if d.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::invalid("diagonal weight must be positive"));
                }
                Ok(())
            }
            BlockWeight::Dense(m) => {
                if m.rows() != rows || m.cols() != rows {
                    return Err(Error::invalid("weight matrix has wrong shape"));
                }
                if m.relative_asymmetry() > 1e-12 {
                    return Err(Error::invalid("weight matrix must be symmetric"));
                }
                if !is_positive_definite(m) {
                    return Err(Error::invalid("weight matrix must be positive definite"));
                }
                Ok(())
            }
        }
    }
}

// Cholesky without storing the factor.
fn is_positive_definite(m: &Matrix) -> bool {
    let n = m.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > 0.0) {
            return false;
        }
        let d = libm::sqrt(d);
        l.set(j, j, d);
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    true
}

/// One row block `A_t x = b_t` with weight `M_t` and the cached spectral
/// radius `ρ(A_tᵀ M_t A_t)`.
#[derive(Debug, Clone)]
pub struct LinearBlock {
    matrix: Matrix,
    weight: BlockWeight,
    rhs: Vector,
    rho: f64,
}

impl LinearBlock {
    pub fn new(matrix: Matrix, weight: BlockWeight, rhs: Vector) -> Result<Self> {
        if rhs.dim() != matrix.rows() {
            return Err(Error::invalid("block right-hand side has wrong length"));
        }
        weight.validate(matrix.rows())?;
        let weighted = match &weight {
            BlockWeight::Identity => matrix.clone(),
            BlockWeight::Diagonal(d) => {
                let mut w = matrix.clone();
                for i in 0..w.rows() {
                    for j in 0..w.cols() {
                        w.set(i, j, w.get(i, j) * d[i]);
                    }
                }
                w
            }
            BlockWeight::Dense(m) => m.mul(&matrix)?,
        };
        let mut gram = matrix.transpose().mul(&weighted)?;
        symmetrize(&mut gram);
        let rho = spectral_radius_psd(&gram, linalg::SPECTRAL_TOL, linalg::SPECTRAL_MAX_ITER)?;
        if !(rho > 0.0) {
            return Err(Error::invalid("linear block is zero (spectral radius 0)"));
        }
        Ok(Self { matrix, weight, rhs, rho })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn weight(&self) -> &BlockWeight {
        &self.weight
    }

    pub fn rhs(&self) -> &Vector {
        &self.rhs
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `b − A x`
    pub fn residual(&self, x: &[f64]) -> Vector {
        let mut r = self.matrix.mul_vec(x);
        for (ri, bi) in r.iter_mut().zip(self.rhs.iter()) {
            *ri = bi - *ri;
        }
        r
    }

    /// `Aᵀ M (b − A x)`
    pub fn correction(&self, x: &[f64]) -> Vector {
        let mut r = self.residual(x);
        self.weight.apply(&mut r);
        self.matrix.tr_mul_vec(&r)
    }
}

fn symmetrize(m: &mut Matrix) {
    for i in 0..m.rows() {
        for j in (i + 1)..m.cols() {
            let avg = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, avg);
            m.set(j, i, avg);
        }
    }
}

#[derive(Debug, Clone)]
pub enum CutterKind {
    /// Relaxed projection onto `{x : ⟨a, x⟩ = b}`.
    Hyperplane { normal: Vector, offset: f64, normal_sq: f64 },
    /// Relaxed projection onto `{x : ⟨a, x⟩ ≤ b}`.
    Halfspace { normal: Vector, offset: f64, normal_sq: f64 },
    /// `x + (α/ρ) Aᵀ M (b − A x)`.
    BlockLinear(LinearBlock),
    /// `x − α g⁺(x) / ‖ℓ(x)‖² ℓ(x)`.
    Subgradient(Arc<dyn ConvexFunction>),
}

/// A strictly relaxed cutter `T = Id + α(C − Id)`, `α ∈ (0, 2)`.
#[derive(Debug, Clone)]
pub struct RelaxedCutter {
    kind: CutterKind,
    alpha: f64,
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::invalid(alloc::format!("relaxation {alpha} is outside (0, 2)")))
    }
}

impl RelaxedCutter {
    pub fn new(kind: CutterKind, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        match &kind {
            CutterKind::Hyperplane { normal_sq, .. } | CutterKind::Halfspace { normal_sq, .. }
                if !(*normal_sq > 0.0) =>
            {
                return Err(Error::invalid("hyperplane normal must be nonzero"));
            }
            _ => {}
        }
        Ok(Self { kind, alpha })
    }

    pub fn hyperplane(normal: Vector, offset: f64, alpha: f64) -> Result<Self> {
        let normal_sq = norm_sq(&normal);
        Self::new(CutterKind::Hyperplane { normal, offset, normal_sq }, alpha)
    }

    pub fn halfspace(normal: Vector, offset: f64, alpha: f64) -> Result<Self> {
        let normal_sq = norm_sq(&normal);
        Self::new(CutterKind::Halfspace { normal, offset, normal_sq }, alpha)
    }

    pub fn block_linear(block: LinearBlock, alpha: f64) -> Result<Self> {
        Self::new(CutterKind::BlockLinear(block), alpha)
    }

    pub fn subgradient(function: Arc<dyn ConvexFunction>, alpha: f64) -> Result<Self> {
        Self::new(CutterKind::Subgradient(function), alpha)
    }

    pub fn kind(&self) -> &CutterKind {
        &self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same operator with a different relaxation.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.kind.clone(), alpha)
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            CutterKind::Hyperplane { normal, .. } | CutterKind::Halfspace { normal, .. } => {
                normal.dim()
            }
            CutterKind::BlockLinear(b) => b.matrix.cols(),
            CutterKind::Subgradient(f) => f.dim(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::invalid(alloc::format!(
                "point has dimension {}, operator expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// The cutter step `C(x) − x`, before relaxation.
    pub fn cutter_step(&self, x: &[f64]) -> Result<Vector> {
        self.check_dim(x)?;
        let n = x.len();
        let step = match &self.kind {
            CutterKind::Hyperplane { normal, offset, normal_sq } => {
                let mut s = Vector::zeros(n);
                axpy((offset - dot(normal, x)) / normal_sq, normal, &mut s);
                s
            }
            CutterKind::Halfspace { normal, offset, normal_sq } => {
                let excess = dot(normal, x) - offset;
                let mut s = Vector::zeros(n);
                if excess > 0.0 {
                    axpy(-excess / normal_sq, normal, &mut s);
                }
                s
            }
            CutterKind::BlockLinear(block) => {
                let mut s = block.correction(x);
                for v in s.iter_mut() {
                    *v /= block.rho;
                }
                s
            }
            CutterKind::Subgradient(f) => {
                let value = f.value(x);
                let mut s = Vector::zeros(n);
                if value > 0.0 {
                    let l = f.subgradient(x);
                    let l_sq = norm_sq(&l);
                    if l_sq == 0.0 {
                        return Err(Error::Infeasible { value });
                    }
                    axpy(-value / l_sq, &l, &mut s);
                }
                s
            }
        };
        Ok(step)
    }

    /// `T(x) = x + α (C(x) − x)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vector> {
        let step = self.cutter_step(x)?;
        let mut out = Vector::from(x);
        axpy(self.alpha, &step, &mut out);
        Ok(out)
    }

    /// The unrelaxed image `C(x)`.
    pub fn cutter_image(&self, x: &[f64]) -> Result<Vector> {
        let step = self.cutter_step(x)?;
        let mut out = Vector::from(x);
        axpy(1.0, &step, &mut out);
        Ok(out)
    }

    /// Normalized step length at `x`: `‖AᵀM(b − Ax)‖ / ρ` for a block,
    /// `g⁺(x) / ‖ℓ(x)‖` for a subgradient projection, the distance to the
    /// set for hyperplanes and halfspaces. Equals `‖C(x) − x‖`.
    pub fn step_length(&self, x: &[f64]) -> Result<f64> {
        match &self.kind {
            CutterKind::BlockLinear(block) => Ok(linalg::norm(&block.correction(x)) / block.rho),
            CutterKind::Subgradient(f) => {
                let value = f.value(x).max(0.0);
                if value == 0.0 {
                    return Ok(0.0);
                }
                let l = libm::sqrt(norm_sq(&f.subgradient(x)));
                if l == 0.0 {
                    return Err(Error::Infeasible { value });
                }
                Ok(value / l)
            }
            _ => Ok(linalg::norm(&self.cutter_step(x)?)),
        }
    }

    /// Constraint violation at `x`: `|⟨a,x⟩ − b|`, `(⟨a,x⟩ − b)⁺`,
    /// `‖A x − b‖∞` or `g⁺(x)` depending on the kind.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match &self.kind {
            CutterKind::Hyperplane { normal, offset, .. } => (dot(normal, x) - offset).abs(),
            CutterKind::Halfspace { normal, offset, .. } => (dot(normal, x) - offset).max(0.0),
            CutterKind::BlockLinear(block) => linalg::norm_inf(&block.residual(x)),
            CutterKind::Subgradient(f) => f.value(x).max(0.0),
        }
    }
}

/// Relaxation `γ_m = 2 / ((Σ αᵢ/(2 − αᵢ))⁻¹ + 1)` of the composition
/// `T_m ⋯ T_1` of αᵢ-relaxed cutters.
pub fn gamma_composition(alphas: &[f64]) -> Result<f64> {
    if alphas.is_empty() {
        return Err(Error::invalid("gamma_composition needs at least one relaxation"));
    }
    let mut sum = 0.0;
    for &a in alphas {
        check_alpha(a)?;
        sum += a / (2.0 - a);
    }
    Ok(2.0 / (1.0 / sum + 1.0))
}

/// Relaxation `μ = Σ ωᵢ αᵢ` of the convex combination `Σ ωᵢ Tᵢ`.
pub fn mu_combination(alphas: &[f64], weights: &[f64]) -> Result<f64> {
    if alphas.len() != weights.len() || alphas.is_empty() {
        return Err(Error::invalid("alphas and weights must be nonempty with equal lengths"));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::invalid("weights must be nonnegative"));
    }
    if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("weights must sum to 1"));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    Ok(alphas.iter().zip(weights).map(|(a, w)| a * w).sum())
}

/// `α⟨T(x) − x, z − x⟩ − ‖T(x) − x‖²` for the relaxed image `T(x)`;
/// nonnegative whenever `z ∈ Fix T`. Equals `α²` times the cutter slack
/// `⟨C(x) − x, z − x⟩ − ‖C(x) − x‖²`.
pub fn cutter_inequality_slack(op: &RelaxedCutter, x: &[f64], z: &[f64]) -> Result<f64> {
    let tx = op.apply(x)?;
    let step = linalg::sub(&tx, x);
    let to_z = linalg::sub(z, x);
    Ok(op.alpha * dot(&step, &to_z) - norm_sq(&step))
}

/// `‖x − z‖² − ((2 − α)/α)‖T(x) − x‖² − ‖T(x) − z‖²`, nonnegative for a
/// strictly relaxed cutter and `z ∈ Fix T`.
pub fn sqne_slack(op: &RelaxedCutter, x: &[f64], z: &[f64]) -> Result<f64> {
    let tx = op.apply(x)?;
    let a = op.alpha;
    Ok(norm_sq(&linalg::sub(x, z))
        - (2.0 - a) / a * norm_sq(&linalg::sub(&tx, x))
        - norm_sq(&linalg::sub(&tx, z)))
}

/// Relaxations of `ops`, in order.
pub fn alphas(ops: &[RelaxedCutter]) -> Vec<f64> {
    ops.iter().map(RelaxedCutter::alpha).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::QuadraticFunction;
    use alloc::vec;

    fn x2_minus_1() -> Arc<dyn ConvexFunction> {
        Arc::new(QuadraticFunction::new(
            Matrix::identity(1),
            Vector::from(vec![0.0]),
            -1.0,
        ).unwrap())
    }

    #[test]
    fn hyperplane_projection() {
        let op = RelaxedCutter::hyperplane(vec![1.0, 0.0].into(), 1.0, 1.0).unwrap();
        assert_eq!(op.apply(&[3.0, 4.0]).unwrap().as_slice(), &[1.0, 4.0]);
        assert_eq!(op.apply(&[1.0, -7.0]).unwrap().as_slice(), &[1.0, -7.0]);
    }

    #[test]
    fn subgradient_projection_of_parabola() {
        let op = RelaxedCutter::subgradient(x2_minus_1(), 1.0).unwrap();
        assert!((op.apply(&[2.0]).unwrap()[0] - 1.25).abs() < 1e-15);
        // feasible point is fixed
        assert_eq!(op.apply(&[0.5]).unwrap().as_slice(), &[0.5]);
    }

    #[test]
    fn block_linear_one_by_one() {
        let block = LinearBlock::new(
            Matrix::from_rows(&[&[2.0]]).unwrap(),
            BlockWeight::Identity,
            vec![4.0].into(),
        )
        .unwrap();
        assert!((block.rho() - 4.0).abs() < 1e-12);
        let op = RelaxedCutter::block_linear(block, 1.0).unwrap();
        assert!((op.apply(&[0.0]).unwrap()[0] - 2.0).abs() < 1e-12);
        assert!((op.apply(&[2.0]).unwrap()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_subgradient_with_positive_value_is_infeasible() {
        // g(x) = x² + 1 is positive everywhere, gradient vanishes at 0
        let f = Arc::new(QuadraticFunction::new(Matrix::identity(1), vec![0.0].into(), 1.0).unwrap());
        let op = RelaxedCutter::subgradient(f, 1.0).unwrap();
        assert!(matches!(op.apply(&[0.0]), Err(Error::Infeasible { .. })));
        assert!(op.apply(&[1.0]).is_ok());
    }

    #[test]
    fn constructor_rejects_bad_relaxation_and_zero_normal() {
        assert!(RelaxedCutter::hyperplane(vec![1.0].into(), 0.0, 2.5).is_err());
        assert!(RelaxedCutter::hyperplane(vec![1.0].into(), 0.0, 0.0).is_err());
        assert!(RelaxedCutter::hyperplane(vec![1.0].into(), 0.0, 2.0).is_err());
        assert!(RelaxedCutter::halfspace(vec![0.0, 0.0].into(), 0.0, 1.0).is_err());
        let zero_block = LinearBlock::new(Matrix::zeros(2, 3), BlockWeight::Identity, vec![0.0, 0.0].into());
        assert!(matches!(zero_block, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let op = RelaxedCutter::hyperplane(vec![1.0, 0.0].into(), 1.0, 1.0).unwrap();
        assert!(matches!(op.apply(&[1.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn weights_are_validated() {
        let a = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let not_pd = BlockWeight::Dense(Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap());
        assert!(LinearBlock::new(a.clone(), not_pd, vec![0.0, 0.0].into()).is_err());
        let neg = BlockWeight::Diagonal(vec![1.0, -1.0].into());
        assert!(LinearBlock::new(a.clone(), neg, vec![0.0, 0.0].into()).is_err());
        let pd = BlockWeight::Dense(Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap());
        let block = LinearBlock::new(a, pd, vec![0.0, 0.0].into()).unwrap();
        assert!((block.rho() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_examples() {
        for a in [0.1, 0.5, 1.0, 1.5, 1.9] {
            assert!((gamma_composition(&[a]).unwrap() - a).abs() < 1e-15);
        }
        assert!((gamma_composition(&[1.0, 1.0]).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((gamma_composition(&[0.5, 1.5]).unwrap() - 20.0 / 13.0).abs() < 1e-15);
        assert!(gamma_composition(&[]).is_err());
        assert!(gamma_composition(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_combination(&[1.5], &[1.0]).unwrap(), 1.5);
        assert_eq!(mu_combination(&[1.0, 1.0], &[0.5, 0.5]).unwrap(), 1.0);
        assert!((mu_combination(&[0.5, 1.5], &[0.25, 0.75]).unwrap() - 1.25).abs() < 1e-15);
        assert!(mu_combination(&[1.0], &[0.5, 0.5]).is_err());
        assert!(mu_combination(&[1.0, 1.0], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn slack_examples() {
        let op = RelaxedCutter::hyperplane(vec![1.0, 0.0].into(), 0.0, 1.5).unwrap();
        assert_eq!(cutter_inequality_slack(&op, &[0.0, 3.0], &[0.0, 3.0]).unwrap(), 0.0);
        let s = cutter_inequality_slack(&op, &[2.0, 0.0], &[0.0, 5.0]).unwrap();
        assert!(s.abs() < 1e-12, "{s}");
        let sub = RelaxedCutter::subgradient(x2_minus_1(), 1.0).unwrap();
        assert!(cutter_inequality_slack(&sub, &[2.0], &[0.0]).unwrap() >= 0.0);
    }

    #[test]
    fn kaczmarz_reduction() {
        let a = vec![3.0, -1.0, 2.0];
        let b = 0.7;
        let block = LinearBlock::new(
            Matrix::new(1, 3, a.clone()).unwrap(),
            BlockWeight::Diagonal(vec![1.0 / norm_sq(&a)].into()),
            vec![b].into(),
        )
        .unwrap();
        let lin = RelaxedCutter::block_linear(block, 1.3).unwrap();
        let hyp = RelaxedCutter::hyperplane(a.into(), b, 1.3).unwrap();
        let x = [0.4, -2.0, 5.0];
        let d = linalg::distance(&lin.apply(&x).unwrap(), &hyp.apply(&x).unwrap());
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn step_length_matches_cutter_step() {
        let sub = RelaxedCutter::subgradient(x2_minus_1(), 0.7).unwrap();
        let x = [2.0];
        let direct = linalg::norm(&sub.cutter_step(&x).unwrap());
        assert!((sub.step_length(&x).unwrap() - direct).abs() < 1e-15);
        assert!((direct - 0.75).abs() < 1e-15);
    }
}
