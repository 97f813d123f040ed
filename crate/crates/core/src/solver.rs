//! The extrapolated iteration `x^{k+1} = x^k + λ_k σ(x^k)(T(x^k) − x^k)`
//! and its projected variant `x^{k+1} = P_Ω(x^k + λ σ(x^k)(T(x^k) − x^k))`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, axpy, dot, norm_sq, Vector};
use crate::operators::RelaxedCutter;
use crate::step_size::StepSizeMode;
use crate::string_averaging::{evaluate, StringPlan};

pub const DEFAULT_EPSILON: f64 = 0.001;

#[derive(Debug, Clone, PartialEq)]
pub enum Lambdas {
    Constant(f64),
    /// `λ_k` for `k < len`; the last value is held afterwards.
    Sequence(Vec<f64>),
}

/// Relaxation parameters `λ_k ∈ [ε, 2 − ε]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationSchedule {
    lambdas: Lambdas,
    epsilon: f64,
}

impl RelaxationSchedule {
    pub fn new(lambdas: Lambdas, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("epsilon must lie in (0, 1)"));
        }
        let values: &[f64] = match &lambdas {
            Lambdas::Constant(l) => core::slice::from_ref(l),
            Lambdas::Sequence(v) if v.is_empty() => {
                return Err(Error::invalid("lambda sequence is empty"));
            }
            Lambdas::Sequence(v) => v,
        };
        // 1e-15 slack so that ε itself and 2 − ε (rounded) are admissible.
        if let Some(bad) = values
            .iter()
            .find(|l| !(**l >= epsilon - 1e-15 && **l <= 2.0 - epsilon + 1e-15))
        {
            return Err(Error::invalid(alloc::format!(
                "lambda {bad} is outside [{epsilon}, {}]",
                2.0 - epsilon
            )));
        }
        Ok(Self { lambdas, epsilon })
    }

    pub fn constant(lambda: f64) -> Result<Self> {
        Self::new(Lambdas::Constant(lambda), DEFAULT_EPSILON)
    }

    pub fn sequence(lambdas: Vec<f64>) -> Result<Self> {
        Self::new(Lambdas::Sequence(lambdas), DEFAULT_EPSILON)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda(&self, k: usize) -> f64 {
        match &self.lambdas {
            Lambdas::Constant(l) => *l,
            Lambdas::Sequence(v) => v[k.min(v.len() - 1)],
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match &self.lambdas {
            Lambdas::Constant(l) => Some(*l),
            Lambdas::Sequence(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    /// Stop once every constraint violation is at most this.
    pub feas_tol: f64,
    /// Stop once `‖T(x) − x‖` is at most this.
    pub fix_tol: f64,
    pub max_iter: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { feas_tol: 1e-6, fix_tol: 1e-16, max_iter: 1000 }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.feas_tol > 0.0) || !(self.fix_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::invalid("stopping tolerances and max_iter must be positive"));
        }
        Ok(())
    }
}

/// A closed convex set `Ω` with a closed-form projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    None,
    Box { lo: Vector, hi: Vector },
    Ball { center: Vector, radius: f64 },
    Halfspace { normal: Vector, offset: f64 },
    NonnegativeOrthant,
}

impl ConstraintSet {
    pub fn boxed(lo: Vector, hi: Vector) -> Result<Self> {
        if lo.dim() != hi.dim() || lo.iter().zip(hi.iter()).any(|(l, h)| !(l <= h)) {
            return Err(Error::invalid("box needs lo <= hi componentwise"));
        }
        Ok(ConstraintSet::Box { lo, hi })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("ball radius must be positive"));
        }
        Ok(ConstraintSet::Ball { center, radius })
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        if !(norm_sq(&normal) > 0.0) {
            return Err(Error::invalid("halfspace normal must be nonzero"));
        }
        Ok(ConstraintSet::Halfspace { normal, offset })
    }

    fn dim(&self) -> Option<usize> {
        match self {
            ConstraintSet::Box { lo, .. } => Some(lo.dim()),
            ConstraintSet::Ball { center, .. } => Some(center.dim()),
            ConstraintSet::Halfspace { normal, .. } => Some(normal.dim()),
            ConstraintSet::None | ConstraintSet::NonnegativeOrthant => None,
        }
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        linalg::distance(&project_onto(self, x), x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ConstraintSet::None => true,
            ConstraintSet::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi.iter())).all(|(v, (l, h))| l <= v && v <= h)
            }
            ConstraintSet::Ball { center, radius } => linalg::distance(x, center) <= *radius,
            ConstraintSet::Halfspace { normal, offset } => dot(normal, x) <= *offset,
            ConstraintSet::NonnegativeOrthant => x.iter().all(|v| *v >= 0.0),
        }
    }
}

/// Orthogonal projection onto `omega`.
pub fn project_onto(omega: &ConstraintSet, x: &[f64]) -> Vector {
    match omega {
        ConstraintSet::None => Vector::from(x),
        ConstraintSet::Box { lo, hi } => Vector::from(
            x.iter()
                .zip(lo.iter().zip(hi.iter()))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect::<Vec<_>>(),
        ),
        ConstraintSet::NonnegativeOrthant => {
            Vector::from(x.iter().map(|v| v.max(0.0)).collect::<Vec<_>>())
        }
        ConstraintSet::Ball { center, radius } => {
            let d = linalg::distance(x, center);
            if d <= *radius {
                return Vector::from(x);
            }
            let s = radius / d;
            Vector::from(
                x.iter().zip(center.iter()).map(|(v, c)| c + s * (v - c)).collect::<Vec<_>>(),
            )
        }
        ConstraintSet::Halfspace { normal, offset } => {
            let excess = dot(normal, x) - offset;
            let mut p = Vector::from(x);
            if excess > 0.0 {
                axpy(-excess / norm_sq(normal), normal, &mut p);
            }
            p
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Feasible,
    FixedPoint,
    MaxIterations,
    Infeasible,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::FixedPoint => "fixed_point",
            Status::MaxIterations => "max_iterations",
            Status::Infeasible => "infeasible",
        }
    }
}

/// Diagnostics of the step taken from `x^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRow {
    pub k: usize,
    pub sigma: f64,
    pub lambda: f64,
    /// `‖T(x^k) − x^k‖`
    pub residual: f64,
    /// Largest constraint violation at `x^k`.
    pub violation: f64,
    /// `e_k = ‖x^k − z‖` for the reference point, when one was supplied.
    pub distance: Option<f64>,
    /// Guaranteed decrease `λ_k(2 − λ_k)σ_k²‖T(x^k) − x^k‖²` of `e_k²`.
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct IterationReport {
    pub status: Status,
    /// Number of updates performed.
    pub iterations: usize,
    pub final_point: Vector,
    pub final_violation: f64,
    pub final_distance: Option<f64>,
    pub rows: Vec<IterationRow>,
    /// Full sweeps over the constraint functions made by the stopping test.
    pub constraint_sweeps: usize,
    /// The operator error behind an `Infeasible` status.
    pub error: Option<Error>,
}

impl IterationReport {
    /// `e_k` for `k = 0..=iterations`, if distances were recorded.
    pub fn distances(&self) -> Option<Vec<f64>> {
        let mut d: Vec<f64> = self.rows.iter().map(|r| r.distance).collect::<Option<_>>()?;
        d.push(self.final_distance?);
        Some(d)
    }
}

fn check_setup(ops: &[RelaxedCutter], plan: &StringPlan, x0: &[f64], z: Option<&[f64]>) -> Result<()> {
    if ops.is_empty() {
        return Err(Error::invalid("no operators"));
    }
    plan.validate_against(ops)?;
    let n = ops[0].dim();
    if x0.len() != n || x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("start point has the wrong dimension or is not finite"));
    }
    if z.is_some_and(|z| z.len() != n) {
        return Err(Error::invalid("reference point has the wrong dimension"));
    }
    Ok(())
}

fn violation(ops: &[RelaxedCutter], x: &[f64]) -> f64 {
    ops.iter().map(|op| op.violation(x)).fold(0.0, f64::max)
}

/// Runs `x^{k+1} = x^k + λ_k σ(x^k)(T(x^k) − x^k)` from `x0`.
///
/// Stopping is checked in the order feasible, iteration budget, fixed
/// point. An infeasibility raised by an operator ends the run with status
/// [`Status::Infeasible`] rather than an error.
pub fn solve(
    ops: &[RelaxedCutter],
    plan: &StringPlan,
    schedule: &RelaxationSchedule,
    mode: StepSizeMode,
    stop: StoppingRule,
    x0: &[f64],
    reference_z: Option<&[f64]>,
) -> Result<IterationReport> {
    check_setup(ops, plan, x0, reference_z)?;
    iterate(ops, plan, schedule, mode, stop, x0, reference_z, None)
}

/// Runs `x^{k+1} = P_Ω(x^k + λ σ(x^k)(T(x^k) − x^k))` with constant `λ`.
///
/// A point counts as feasible only if it also lies in `Ω`.
#[allow(clippy::too_many_arguments)]
pub fn solve_projected(
    ops: &[RelaxedCutter],
    plan: &StringPlan,
    lambda: f64,
    mode: StepSizeMode,
    stop: StoppingRule,
    x0: &[f64],
    omega: &ConstraintSet,
    reference_z: Option<&[f64]>,
) -> Result<IterationReport> {
    check_setup(ops, plan, x0, reference_z)?;
    if omega.dim().is_some_and(|d| d != x0.len()) {
        return Err(Error::invalid("constraint set has the wrong dimension"));
    }
    let schedule = RelaxationSchedule::constant(lambda)?;
    iterate(ops, plan, &schedule, mode, stop, x0, reference_z, Some(omega))
}

#[allow(clippy::too_many_arguments)]
fn iterate(
    ops: &[RelaxedCutter],
    plan: &StringPlan,
    schedule: &RelaxationSchedule,
    mode: StepSizeMode,
    stop: StoppingRule,
    x0: &[f64],
    reference_z: Option<&[f64]>,
    omega: Option<&ConstraintSet>,
) -> Result<IterationReport> {
    stop.validate()?;
    let mut x = Vector::from(x0);
    let mut rows = Vec::new();
    let mut sweeps = 0;
    let mut error = None;

    let status = loop {
        let k = rows.len();
        sweeps += 1;
        let mut viol = violation(ops, &x);
        if let Some(omega) = omega {
            viol = viol.max(omega.distance(&x));
        }
        if viol <= stop.feas_tol {
            break Status::Feasible;
        }
        if k >= stop.max_iter {
            break Status::MaxIterations;
        }
        let trace = match evaluate(ops, plan, &x) {
            Ok(t) => t,
            Err(e) if e.is_infeasible() => {
                error = Some(e);
                break Status::Infeasible;
            }
            Err(e) => return Err(e),
        };
        let residual = trace.residual();
        if residual <= stop.fix_tol {
            break Status::FixedPoint;
        }
        let sigma = mode.sigma(&trace, plan, ops)?;
        let lambda = schedule.lambda(k);
        let mut next = x.clone();
        axpy(lambda * sigma, &trace.step(), &mut next);
        if let Some(omega) = omega {
            next = project_onto(omega, &next);
        }
        rows.push(IterationRow {
            k,
            sigma,
            lambda,
            residual,
            violation: viol,
            distance: reference_z.map(|z| linalg::distance(&x, z)),
            bound: lambda * (2.0 - lambda) * sigma * sigma * residual * residual,
        });
        x = next;
    };

    let mut final_violation = violation(ops, &x);
    if let Some(omega) = omega {
        final_violation = final_violation.max(omega.distance(&x));
    }
    Ok(IterationReport {
        status,
        iterations: rows.len(),
        final_distance: reference_z.map(|z| linalg::distance(&x, z)),
        final_point: x,
        final_violation,
        rows,
        constraint_sweeps: sweeps,
        error,
    })
}

/// Checks the quantified Fejér decrease
/// `e_{k+1}² ≤ e_k² − λ_k(2 − λ_k)σ_k²‖T(x^k) − x^k‖² + 1e-9·max(1, e_k²)`
/// on every recorded step. The reference point is the one the run was
/// started with; it must be feasible for the audit to be meaningful.
pub fn fejer_audit(report: &IterationReport) -> Result<bool> {
    let e = report
        .distances()
        .ok_or_else(|| Error::invalid("report has no distances to a reference point"))?;
    Ok(report.rows.iter().enumerate().all(|(k, row)| {
        let (ek, ek1) = (e[k], e[k + 1]);
        ek1 * ek1 <= ek * ek - row.bound + 1e-9 * f64::max(1.0, ek * ek)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn axes() -> Vec<RelaxedCutter> {
        vec![
            RelaxedCutter::hyperplane(vec![1.0, 0.0].into(), 0.0, 1.0).unwrap(),
            RelaxedCutter::hyperplane(vec![0.0, 1.0].into(), 0.0, 1.0).unwrap(),
        ]
    }

    #[test]
    fn starting_at_a_solution_takes_no_steps() {
        let ops = axes();
        let plan = StringPlan::sequential(2).unwrap();
        let sched = RelaxationSchedule::constant(1.0).unwrap();
        let r = solve(&ops, &plan, &sched, StepSizeMode::sigma_max(), StoppingRule::default(), &[0.0, 0.0], None)
            .unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.status, Status::Feasible);
        assert_eq!(r.final_point.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn two_axis_hyperplanes() {
        let ops = axes();
        let plan = StringPlan::sequential(2).unwrap();
        let sched = RelaxationSchedule::constant(1.0).unwrap();
        let r = solve(&ops, &plan, &sched, StepSizeMode::sigma_max(), StoppingRule::default(), &[2.0, 3.0], Some(&[0.0, 0.0]))
            .unwrap();
        assert_eq!(r.status, Status::Feasible);
        assert!(r.iterations <= 3);
        assert!(linalg::norm(&r.final_point) < 1e-6);
        assert!(fejer_audit(&r).unwrap());
    }

    #[test]
    fn projected_box() {
        let ops = axes();
        let plan = StringPlan::sequential(2).unwrap();
        let omega = ConstraintSet::boxed(vec![0.0, 0.0].into(), vec![2.0, 2.0].into()).unwrap();
        let r = solve_projected(&ops, &plan, 1.0, StepSizeMode::sigma_max(), StoppingRule::default(), &[5.0, -3.0], &omega, Some(&[0.0, 0.0]))
            .unwrap();
        assert_eq!(r.status, Status::Feasible);
        assert!(omega.contains(&r.final_point));
        assert!(linalg::norm(&r.final_point) < 1e-6);
        assert!(fejer_audit(&r).unwrap());
    }

    #[test]
    fn projections() {
        let ball = ConstraintSet::ball(vec![0.0, 0.0].into(), 1.0).unwrap();
        let p = project_onto(&ball, &[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert_eq!(project_onto(&ball, &[0.1, 0.2]).as_slice(), &[0.1, 0.2]);
        let bx = ConstraintSet::boxed(vec![0.0].into(), vec![1.0].into()).unwrap();
        assert_eq!(project_onto(&bx, &[-2.0]).as_slice(), &[0.0]);
        let hs = ConstraintSet::halfspace(vec![1.0, 1.0].into(), 1.0).unwrap();
        assert_eq!(project_onto(&hs, &[2.0, 2.0]).as_slice(), &[0.5, 0.5]);
        assert_eq!(project_onto(&ConstraintSet::NonnegativeOrthant, &[-1.0, 2.0]).as_slice(), &[0.0, 2.0]);
        assert_eq!(project_onto(&ConstraintSet::None, &[-1.0, 2.0]).as_slice(), &[-1.0, 2.0]);
    }

    #[test]
    fn constraint_set_validation() {
        assert!(ConstraintSet::boxed(vec![1.0].into(), vec![0.0].into()).is_err());
        assert!(ConstraintSet::ball(vec![0.0].into(), 0.0).is_err());
        assert!(ConstraintSet::halfspace(vec![0.0].into(), 1.0).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(RelaxationSchedule::constant(0.001).is_ok());
        assert!(RelaxationSchedule::constant(2.0 - 0.001).is_ok());
        assert!(RelaxationSchedule::constant(2.0).is_err());
        assert!(RelaxationSchedule::constant(0.0).is_err());
        assert!(RelaxationSchedule::sequence(vec![]).is_err());
        let s = RelaxationSchedule::sequence(vec![0.5, 1.5]).unwrap();
        assert_eq!((s.lambda(0), s.lambda(1), s.lambda(7)), (0.5, 1.5, 1.5));
        assert!(RelaxationSchedule::new(Lambdas::Constant(1.0), 1.0).is_err());
    }

    #[test]
    fn audit_needs_distances() {
        let ops = axes();
        let plan = StringPlan::sequential(2).unwrap();
        let sched = RelaxationSchedule::constant(1.0).unwrap();
        let r = solve(&ops, &plan, &sched, StepSizeMode::unit(), StoppingRule::default(), &[2.0, 3.0], None).unwrap();
        assert!(matches!(fejer_audit(&r), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn infeasible_status() {
        use crate::problems::QuadraticFunction;
        let f = alloc::sync::Arc::new(
            QuadraticFunction::new(crate::linalg::Matrix::identity(1), vec![0.0].into(), 1.0).unwrap(),
        );
        let ops = vec![RelaxedCutter::subgradient(f, 1.0).unwrap()];
        let plan = StringPlan::sequential(1).unwrap();
        let sched = RelaxationSchedule::constant(1.0).unwrap();
        let r = solve(&ops, &plan, &sched, StepSizeMode::unit(), StoppingRule::default(), &[0.0], None).unwrap();
        assert_eq!(r.status, Status::Infeasible);
        assert!(r.error.as_ref().is_some_and(Error::is_infeasible));
    }

    #[test]
    fn max_iterations() {
        let ops = axes();
        let plan = StringPlan::contiguous(2, 2).unwrap();
        let sched = RelaxationSchedule::constant(0.001).unwrap();
        let stop = StoppingRule { max_iter: 5, ..StoppingRule::default() };
        let r = solve(&ops, &plan, &sched, StepSizeMode::unit(), stop, &[2.0, 3.0], None).unwrap();
        assert_eq!(r.status, Status::MaxIterations);
        assert_eq!(r.iterations, 5);
    }
}
