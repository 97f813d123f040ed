//! String averaging: each string composes its operators in order and the
//! string endpoints are averaged, `T(x) = Σ_t ω_t U_t(x)`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, axpy, Vector};
use crate::operators::RelaxedCutter;

/// Ordered index lists over the operators plus positive weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StringPlan {
    strings: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl StringPlan {
    /// `operator_count` is the number of operators the plan must cover.
    /// Repeated indices inside one string are allowed.
    pub fn new(strings: Vec<Vec<usize>>, weights: Vec<f64>, operator_count: usize) -> Result<Self> {
        if strings.is_empty() {
            return Err(Error::invalid("plan needs at least one string"));
        }
        if strings.len() != weights.len() {
            return Err(Error::invalid("one weight per string is required"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("string weights must be positive"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("string weights must sum to 1"));
        }
        let mut covered = alloc::vec![false; operator_count];
        for s in &strings {
            if s.is_empty() {
                return Err(Error::invalid("strings must be nonempty"));
            }
            for &i in s {
                if i >= operator_count {
                    return Err(Error::invalid(format!("operator index {i} out of range")));
                }
                covered[i] = true;
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(Error::invalid("strings must cover every operator"));
        }
        Ok(Self { strings, weights })
    }

    /// Splits `0..operator_count` into `count` contiguous strings whose
    /// lengths differ by at most one, with equal weights.
    pub fn contiguous(operator_count: usize, count: usize) -> Result<Self> {
        if count == 0 || count > operator_count {
            return Err(Error::invalid(format!(
                "cannot split {operator_count} operators into {count} strings"
            )));
        }
        let strings = balanced_ranges(operator_count, count)
            .into_iter()
            .map(|r| r.collect())
            .collect();
        let weights = alloc::vec![1.0 / count as f64; count];
        // Equal weights 1/E can miss 1 by an ulp or two; that is well inside
        // the validation tolerance.
        Self::new(strings, weights, operator_count)
    }

    /// One string visiting every operator in index order.
    pub fn sequential(operator_count: usize) -> Result<Self> {
        Self::contiguous(operator_count, 1)
    }

    pub fn strings(&self) -> &[Vec<usize>] {
        &self.strings
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    /// Longest string length `m̄`.
    pub fn max_length(&self) -> usize {
        self.strings.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn validate_against(&self, ops: &[RelaxedCutter]) -> Result<()> {
        let covered = self.strings.iter().flatten().all(|&i| i < ops.len());
        if !covered {
            return Err(Error::invalid("plan references a missing operator"));
        }
        let mut seen = alloc::vec![false; ops.len()];
        self.strings.iter().flatten().for_each(|&i| seen[i] = true);
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("plan does not cover every operator"));
        }
        if let Some(first) = ops.first() {
            if ops.iter().any(|op| op.dim() != first.dim()) {
                return Err(Error::invalid("operators have different dimensions"));
            }
        }
        Ok(())
    }
}

/// Contiguous ranges covering `0..len`, sizes differing by at most one,
/// longer ranges first.
pub fn balanced_ranges(len: usize, parts: usize) -> Vec<core::ops::Range<usize>> {
    let base = len / parts;
    let extra = len % parts;
    let mut start = 0;
    (0..parts)
        .map(|p| {
            let size = base + usize::from(p < extra);
            let r = start..start + size;
            start += size;
            r
        })
        .collect()
}

/// The trajectory of one string: `u⁰ = x`, `uⁱ = T_{iᵢ}(uⁱ⁻¹)`.
#[derive(Debug, Clone)]
pub struct StringPath {
    pub indices: Vec<usize>,
    pub points: Vec<Vector>,
    pub increments: Vec<Vector>,
}

impl StringPath {
    /// `U_t(x)`
    pub fn endpoint(&self) -> &Vector {
        self.points.last().expect("a path always holds u⁰")
    }

    pub fn start(&self) -> &Vector {
        &self.points[0]
    }

    /// `U_t(x) − x`
    pub fn displacement(&self) -> Vector {
        linalg::sub(self.endpoint(), self.start())
    }
}

/// All string trajectories at one point together with the averaged image.
#[derive(Debug, Clone)]
pub struct StringTrace {
    pub x: Vector,
    pub paths: Vec<StringPath>,
    pub weights: Vec<f64>,
    /// `T(x) = Σ_t ω_t U_t(x)`
    pub image: Vector,
}

impl StringTrace {
    /// `T(x) − x`
    pub fn step(&self) -> Vector {
        linalg::sub(&self.image, &self.x)
    }

    /// `‖T(x) − x‖`
    pub fn residual(&self) -> f64 {
        linalg::distance(&self.image, &self.x)
    }
}

/// Walks every string of `plan` from `x`. The first index of a string is
/// applied first.
pub fn evaluate(ops: &[RelaxedCutter], plan: &StringPlan, x: &[f64]) -> Result<StringTrace> {
    plan.validate_against(ops)?;
    if let Some(op) = ops.first() {
        if op.dim() != x.len() {
            return Err(Error::invalid(format!(
                "point has dimension {}, operators expect {}",
                x.len(),
                op.dim()
            )));
        }
    }
    let x = Vector::from(x);
    let mut paths = Vec::with_capacity(plan.len());
    for (t, string) in plan.strings().iter().enumerate() {
        let mut points = Vec::with_capacity(string.len() + 1);
        let mut increments = Vec::with_capacity(string.len());
        points.push(x.clone());
        for (step, &i) in string.iter().enumerate() {
            let prev = points.last().expect("nonempty");
            let next = ops[i].apply(prev).map_err(|e| Error::InString {
                string: t,
                step,
                operator: i,
                source: Box::new(e),
            })?;
            increments.push(linalg::sub(&next, prev));
            points.push(next);
        }
        paths.push(StringPath { indices: string.clone(), points, increments });
    }
    let mut image = Vector::zeros(x.len());
    for (path, w) in paths.iter().zip(plan.weights()) {
        axpy(*w, path.endpoint(), &mut image);
    }
    Ok(StringTrace { x, paths, weights: plan.weights().to_vec(), image })
}

/// `‖T(x) − x‖`
pub fn residual(trace: &StringTrace) -> f64 {
    trace.residual()
}
