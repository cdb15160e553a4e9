//! Trust-region Newton solve of the smoothed sub-problem inside the region
//! of interest.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{compose, symmetric_eigen};
use crate::smoothing::AnchoredEstimator;
use crate::space::DesignSpace;

/// Ranges below this are treated as a collapsed region.
const DEGENERATE_RANGE: f64 = 1e-14;
/// Coordinate-descent sweeps for the box-constrained model.
const QP_SWEEPS: usize = 500;

/// Box of half-widths `ranges` around `center`, clipped to the feasible box
/// on bounded axes. All coordinates are internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOfInterest {
    center: Vec<f64>,
    ranges: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    periodic: Vec<bool>,
    widths: Vec<f64>,
}

impl RegionOfInterest {
    pub fn new(space: &DesignSpace, center: &[f64], ranges: &[f64]) -> Result<Self> {
        let d = space.dim();
        for len in [center.len(), ranges.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, got: len });
            }
        }
        if let Some(&r) = ranges.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::invalid(alloc::format!("range {r} must be non-negative")));
        }
        let mut lower = Vec::with_capacity(d);
        let mut upper = Vec::with_capacity(d);
        for i in 0..d {
            let (c, r) = (center[i], ranges[i]);
            if space.is_periodic(i) {
                lower.push(c - r);
                upper.push(c + r);
            } else {
                let w = space.internal_width(i);
                if !(0.0..=w).contains(&c) {
                    return Err(Error::invalid(alloc::format!("center {c} outside axis {i}")));
                }
                lower.push((c - r).max(0.0));
                upper.push((c + r).min(w));
            }
        }
        Ok(Self {
            center: center.to_vec(),
            ranges: ranges.to_vec(),
            lower,
            upper,
            periodic: space.periodic().to_vec(),
            widths: (0..d).map(|i| space.internal_width(i)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges
    }

    /// Effective `(lower, upper)` on `axis`. Periodic axes are expressed in
    /// the unwrapped frame around the center.
    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        (self.lower[axis], self.upper[axis])
    }

    pub fn is_degenerate(&self) -> bool {
        self.ranges.iter().all(|&r| r < DEGENERATE_RANGE)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| self.lower[i] <= v && v <= self.upper[i])
    }

    /// Wraps periodic coordinates to the image nearest the center, then clips
    /// every coordinate to the effective bounds.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut v = v;
                if self.periodic[i] {
                    let p = self.widths[i];
                    let k = libm::round((v - self.center[i]) / p);
                    v -= k * p;
                }
                v.clamp(self.lower[i], self.upper[i])
            })
            .collect()
    }
}

/// Free-function form of [`RegionOfInterest::project`].
pub fn project_to_roi(x: &[f64], roi: &RegionOfInterest) -> Vec<f64> {
    roi.project(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemSettings {
    pub budget: usize,
    pub gradient_tol: f64,
    pub step_tol: f64,
}

impl Default for SubproblemSettings {
    fn default() -> Self {
        Self { budget: 5, gradient_tol: 1e-8, step_tol: 1e-10 }
    }
}

impl SubproblemSettings {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid("sub-problem budget must be at least 1"));
        }
        if !(self.gradient_tol >= 0.0 && self.step_tol >= 0.0) {
            return Err(Error::invalid("sub-problem tolerances must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxIters,
    GradientSmall,
    StepSmall,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::MaxIters => "max-iters",
            Termination::GradientSmall => "gradient-small",
            Termination::StepSmall => "step-small",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub minimizer: Vec<f64>,
    pub objective: f64,
    /// Smoothed objective at the region center.
    pub center_objective: f64,
    pub iterations: usize,
    pub termination: Termination,
}

/// Minimizes the estimator's smoothed objective over `roi`, starting from
/// the region center.
pub fn solve(roi: &RegionOfInterest, estimator: &AnchoredEstimator<'_>, settings: &SubproblemSettings) -> Result<SubproblemResult> {
    settings.validate()?;
    let d = roi.dim();
    if estimator.anchor().len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: estimator.anchor().len() });
    }
    let mut x = roi.center.clone();
    let mut current = estimator.derivatives(&x)?;
    let center_objective = current.value;
    if roi.is_degenerate() {
        return Ok(SubproblemResult {
            minimizer: x,
            objective: center_objective,
            center_objective,
            iterations: 0,
            termination: Termination::StepSmall,
        });
    }
    let max_range = roi.ranges.iter().cloned().fold(0.0, f64::max);
    let mut radius = 0.5 * roi.ranges.iter().cloned().filter(|&r| r >= DEGENERATE_RANGE).fold(f64::INFINITY, f64::min);
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;
    while iterations < settings.budget {
        if current.gradient.iter().all(|g| g.abs() <= settings.gradient_tol) {
            termination = Termination::GradientSmall;
            break;
        }
        iterations += 1;
        let h = floored_hessian(&current.hessian, d);
        let lo: Vec<f64> = (0..d).map(|i| (roi.lower[i] - x[i]).max(-radius)).collect();
        let hi: Vec<f64> = (0..d).map(|i| (roi.upper[i] - x[i]).min(radius)).collect();
        let p = box_qp(&current.gradient, &h, &lo, &hi);
        let step = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let predicted = -model_change(&current.gradient, &h, &p);
        if step <= settings.step_tol || !(predicted > 0.0) {
            termination = Termination::StepSmall;
            break;
        }
        let trial: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let trial_x = roi.project(&trial);
        let next = estimator.derivatives(&trial_x)?;
        let ratio = (current.value - next.value) / predicted;
        if next.value < current.value {
            x = trial_x;
            current = next;
        }
        if !(ratio >= 0.25) {
            radius *= 0.25;
        } else if ratio > 0.75 && step >= 0.99 * radius {
            radius = (2.0 * radius).min(max_range);
        }
        if radius <= settings.step_tol {
            termination = Termination::StepSmall;
            break;
        }
    }
    Ok(SubproblemResult {
        minimizer: x,
        objective: current.value,
        center_objective,
        iterations,
        termination,
    })
}

/// Symmetrizes and raises every eigenvalue to at least `1e-8·‖H‖`.
fn floored_hessian(h: &[f64], d: usize) -> Vec<f64> {
    let mut sym = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            sym[i * d + j] = 0.5 * (h[i * d + j] + h[j * d + i]);
        }
    }
    let (mut values, vectors) = symmetric_eigen(&sym, d);
    let norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-8 * norm).max(f64::MIN_POSITIVE);
    for v in values.iter_mut() {
        *v = v.max(floor);
    }
    compose(&values, &vectors, d)
}

fn model_change(g: &[f64], h: &[f64], p: &[f64]) -> f64 {
    let d = g.len();
    let mut lin = 0.0;
    let mut quad = 0.0;
    for i in 0..d {
        lin += g[i] * p[i];
        let mut hp = 0.0;
        for j in 0..d {
            hp += h[i * d + j] * p[j];
        }
        quad += p[i] * hp;
    }
    lin + 0.5 * quad
}

/// Minimizes `gᵀp + ½pᵀHp` over `lo ≤ p ≤ hi` for positive definite `H` by
/// cyclic exact coordinate minimization.
fn box_qp(g: &[f64], h: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let d = g.len();
    let mut p = vec![0.0; d];
    // grad = g + H p, kept up to date
    let mut grad = g.to_vec();
    for _ in 0..QP_SWEEPS {
        let mut moved = 0.0f64;
        for i in 0..d {
            let hii = h[i * d + i];
            let target = (p[i] - grad[i] / hii).clamp(lo[i], hi[i]);
            let delta = target - p[i];
            if delta != 0.0 {
                p[i] = target;
                for j in 0..d {
                    grad[j] += h[j * d + i] * delta;
                }
                moved = moved.max(delta.abs());
            }
        }
        let scale = p.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        if moved <= 1e-15 * scale {
            break;
        }
    }
    polish(g, h, lo, hi, p)
}

/// Re-solves the free coordinates of `p` exactly, keeping bound-active ones
/// fixed. Falls back to `p` if the result leaves the box or breaks the
/// optimality conditions of the active set.
fn polish(g: &[f64], h: &[f64], lo: &[f64], hi: &[f64], p: Vec<f64>) -> Vec<f64> {
    let d = g.len();
    let free: Vec<usize> = (0..d).filter(|&i| p[i] > lo[i] && p[i] < hi[i]).collect();
    if free.is_empty() {
        return p;
    }
    let n = free.len();
    let mut a = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for (r, &i) in free.iter().enumerate() {
        rhs[r] = -g[i];
        for j in 0..d {
            if !free.contains(&j) {
                rhs[r] -= h[i * d + j] * p[j];
            }
        }
        for (c, &j) in free.iter().enumerate() {
            a[r * n + c] = h[i * d + j];
        }
    }
    let Some(x) = solve_dense(a, rhs, n) else {
        return p;
    };
    let mut q = p.clone();
    for (r, &i) in free.iter().enumerate() {
        if !(lo[i] <= x[r] && x[r] <= hi[i]) {
            return p;
        }
        q[i] = x[r];
    }
    for i in 0..d {
        if free.contains(&i) {
            continue;
        }
        let grad: f64 = g[i] + (0..d).map(|j| h[i * d + j] * q[j]).sum::<f64>();
        let ok = (q[i] <= lo[i] && grad >= 0.0) || (q[i] >= hi[i] && grad <= 0.0);
        if !ok {
            return p;
        }
    }
    if model_change(g, h, &q) <= model_change(g, h, &p) {
        q
    } else {
        p
    }
}

/// Gaussian elimination with partial pivoting on a row-major `n × n` system.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
        if a[pivot * n + col] == 0.0 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    Some(x)
}
