//! Extrapolation step sizes for the averaged string operator.
//!
//! With `ζᵢ = uⁱ − uⁱ⁻¹` the increments along string `t`,
//!
//! ```text
//! σ_max(x) = Σ_t ω_t Σ_i ⟨U_t(x) − uⁱ + ζᵢ/αᵢ, ζᵢ⟩ / ‖T(x) − x‖²
//! ```
//!
//! off the fixed-point set and `1` on it. Expanding the inner products gives
//! the sum form `Σ_t ω_t [Σ_i (1/αᵢ − ½)‖ζᵢ‖² + ½‖U_t(x) − x‖²]` over the
//! same denominator, and substituting the operator formulas gives the closed
//! forms for linear blocks and subgradient projections. All forms consume a
//! [`StringTrace`]; none of them re-applies an operator.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq, Vector};
use crate::operators::{gamma_composition, CutterKind, RelaxedCutter};
use crate::string_averaging::{StringPlan, StringTrace};

/// Default threshold below which `‖T(x) − x‖` counts as a fixed point.
pub const DEFAULT_FIX_TOL: f64 = 1e-16;

/// How `σ(x)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaForm {
    /// `σ ≡ 1`: plain relaxation, no extrapolation.
    Unit,
    SigmaInner,
    SigmaSum,
    SigmaClosedLinear,
    SigmaClosedSubgrad,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeMode {
    pub form: SigmaForm,
    pub fix_tol: f64,
}

impl StepSizeMode {
    pub fn new(form: SigmaForm, fix_tol: f64) -> Result<Self> {
        if !(fix_tol > 0.0) {
            return Err(Error::invalid("fix_tol must be positive"));
        }
        Ok(Self { form, fix_tol })
    }

    pub fn unit() -> Self {
        Self { form: SigmaForm::Unit, fix_tol: DEFAULT_FIX_TOL }
    }

    pub fn sigma_max() -> Self {
        Self { form: SigmaForm::SigmaInner, fix_tol: DEFAULT_FIX_TOL }
    }

    pub fn is_extrapolated(&self) -> bool {
        self.form != SigmaForm::Unit
    }

    /// `σ(x)` for the trace, with `σ = 1` on the fixed-point branch.
    pub fn sigma(&self, trace: &StringTrace, plan: &StringPlan, ops: &[RelaxedCutter]) -> Result<f64> {
        if self.form == SigmaForm::Unit || trace.residual() <= self.fix_tol {
            return Ok(1.0);
        }
        let alphas = crate::operators::alphas(ops);
        match self.form {
            SigmaForm::Unit => Ok(1.0),
            SigmaForm::SigmaInner => sigma_max_inner(trace, plan, &alphas),
            SigmaForm::SigmaSum => sigma_max_sum(trace, plan, &alphas),
            SigmaForm::SigmaClosedLinear => sigma_max_closed_linear(trace, plan, ops),
            SigmaForm::SigmaClosedSubgrad => sigma_max_closed_subgrad(trace, plan, ops),
        }
    }
}

fn denominator(trace: &StringTrace) -> Result<f64> {
    let d = norm_sq(&trace.step());
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::Contract("sigma_max evaluated at a fixed point of T"))
    }
}

fn check_shapes(trace: &StringTrace, plan: &StringPlan) -> Result<()> {
    if trace.paths.len() != plan.len()
        || trace.paths.iter().zip(plan.strings()).any(|(p, s)| p.indices != *s)
    {
        return Err(Error::invalid("trace was not produced by this plan"));
    }
    Ok(())
}

fn alpha_at(alphas: &[f64], i: usize) -> Result<f64> {
    alphas
        .get(i)
        .copied()
        .ok_or_else(|| Error::invalid("alphas do not cover every operator of the plan"))
}

/// The defining form, `Σ_t ω_t Σ_i ⟨U_t(x) − uⁱ + ζᵢ/αᵢ, ζᵢ⟩ / ‖T(x) − x‖²`.
pub fn sigma_max_inner(trace: &StringTrace, plan: &StringPlan, alphas: &[f64]) -> Result<f64> {
    check_shapes(trace, plan)?;
    let den = denominator(trace)?;
    let mut num = 0.0;
    for (path, w) in trace.paths.iter().zip(plan.weights()) {
        let end = path.endpoint();
        let mut inner = 0.0;
        for (i, (&op, zeta)) in path.indices.iter().zip(&path.increments).enumerate() {
            let alpha = alpha_at(alphas, op)?;
            let mut v: Vector = crate::linalg::sub(end, &path.points[i + 1]);
            axpy(1.0 / alpha, zeta, &mut v);
            inner += dot(&v, zeta);
        }
        num += w * inner;
    }
    Ok(num / den)
}

/// `Σ_t ω_t [Σ_i (1/αᵢ − ½)‖yⁱ‖² + ½‖Σ_i yⁱ‖²] / ‖T(x) − x‖²`.
pub fn sigma_max_sum(trace: &StringTrace, plan: &StringPlan, alphas: &[f64]) -> Result<f64> {
    check_shapes(trace, plan)?;
    let den = denominator(trace)?;
    let mut num = 0.0;
    for (path, w) in trace.paths.iter().zip(plan.weights()) {
        let mut s = 0.0;
        for (&op, y) in path.indices.iter().zip(&path.increments) {
            let alpha = alpha_at(alphas, op)?;
            s += (1.0 / alpha - 0.5) * norm_sq(y);
        }
        let mut total = Vector::zeros(trace.x.dim());
        for y in &path.increments {
            axpy(1.0, y, &mut total);
        }
        num += w * (s + 0.5 * norm_sq(&total));
    }
    Ok(num / den)
}

/// Closed form for linear blocks:
/// `Σ_t ω_t [Σ_i αᵢ(2 − αᵢ)/ρᵢ² ‖AᵢᵀMᵢ(bᵢ − Aᵢuⁱ⁻¹)‖² + ‖U_t(x) − x‖²] / (2‖T(x) − x‖²)`.
pub fn sigma_max_closed_linear(
    trace: &StringTrace,
    plan: &StringPlan,
    ops: &[RelaxedCutter],
) -> Result<f64> {
    closed_form(trace, plan, ops, |op| matches!(op.kind(), CutterKind::BlockLinear(_)), "linear block")
}

/// Closed form for subgradient projections:
/// `Σ_t ω_t [Σ_i αᵢ(2 − αᵢ)(gᵢ⁺(uⁱ⁻¹)/‖ℓᵢ(uⁱ⁻¹)‖)² + ‖U_t(x) − x‖²] / (2‖T(x) − x‖²)`.
pub fn sigma_max_closed_subgrad(
    trace: &StringTrace,
    plan: &StringPlan,
    ops: &[RelaxedCutter],
) -> Result<f64> {
    closed_form(
        trace,
        plan,
        ops,
        |op| matches!(op.kind(), CutterKind::Subgradient(_)),
        "subgradient projection",
    )
}

// Both closed forms share the shape α(2 − α)·‖C(uⁱ⁻¹) − uⁱ⁻¹‖²; only the
// admissible operator kind differs.
fn closed_form(
    trace: &StringTrace,
    plan: &StringPlan,
    ops: &[RelaxedCutter],
    admissible: impl Fn(&RelaxedCutter) -> bool,
    kind: &str,
) -> Result<f64> {
    check_shapes(trace, plan)?;
    let den = denominator(trace)?;
    let mut num = 0.0;
    for (path, w) in trace.paths.iter().zip(plan.weights()) {
        let mut s = 0.0;
        for (i, &idx) in path.indices.iter().enumerate() {
            let op = ops.get(idx).ok_or_else(|| Error::invalid("plan references a missing operator"))?;
            if !admissible(op) {
                return Err(Error::invalid(alloc::format!(
                    "operator {idx} is not a {kind}; closed form does not apply"
                )));
            }
            let a = op.alpha();
            let len = op.step_length(&path.points[i])?;
            s += a * (2.0 - a) * len * len;
        }
        num += w * (s + norm_sq(&path.displacement()));
    }
    Ok(num / (2.0 * den))
}

/// `(1/γ − ½)/m̄` with `γ` the largest relaxation used by the plan and `m̄`
/// the longest string.
pub fn sigma_lower_bound(alphas: &[f64], plan: &StringPlan) -> f64 {
    let gamma = plan
        .strings()
        .iter()
        .flatten()
        .map(|&i| alphas[i])
        .fold(0.0, f64::max);
    (1.0 / gamma - 0.5) / plan.max_length() as f64
}

/// `Σ_t ω_t/γ_{m_t} ‖U_t(x) − x‖² / ‖T(x) − x‖²`, where `γ_{m_t}` is the
/// relaxation of the composed string. A smaller admissible step than
/// `σ_max`, reported as a diagnostic only.
pub fn sigma_string_relaxation(trace: &StringTrace, plan: &StringPlan, alphas: &[f64]) -> Result<f64> {
    check_shapes(trace, plan)?;
    let den = denominator(trace)?;
    let mut num = 0.0;
    for (path, w) in trace.paths.iter().zip(plan.weights()) {
        let string_alphas: Vec<f64> =
            path.indices.iter().map(|&i| alpha_at(alphas, i)).collect::<Result<_>>()?;
        let gamma = gamma_composition(&string_alphas)?;
        num += w / gamma * norm_sq(&path.displacement());
    }
    Ok(num / den)
}
