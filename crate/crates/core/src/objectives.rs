//! Scalar fields and quantity-of-interest providers.

use alloc::vec::Vec;

use crate::dataset::NnIndex;
use crate::error::{Error, Result};

/// A real-valued function on internal-unit space, as consumed by the
/// smoothing estimators.
pub trait ScalarField {
    fn value(&self, y: &[f64]) -> Result<f64>;
}

impl<F: Fn(&[f64]) -> f64> ScalarField for F {
    fn value(&self, y: &[f64]) -> Result<f64> {
        Ok(self(y))
    }
}

impl ScalarField for NnIndex {
    fn value(&self, y: &[f64]) -> Result<f64> {
        self.nn_predict(y)
    }
}

/// A deterministic quantity of interest over physical design vectors.
///
/// `evaluate_batch` is the hook for parallel evaluation; results must come
/// back in input order.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> Result<f64>;

    fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Vec<Result<f64>> {
        xs.iter().map(|x| self.evaluate(x)).collect()
    }
}

/// What to do when an evaluation fails or returns a non-finite value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FailurePolicy {
    #[default]
    Abort,
    Penalty(f64),
}

/// Herbie benchmark terms times a product over axes, plus one additive step
/// on the first axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HerbieStep {
    pub c_step: f64,
    pub x_step: f64,
}

impl Default for HerbieStep {
    fn default() -> Self {
        Self { c_step: 0.5, x_step: 0.0 }
    }
}

impl HerbieStep {
    pub fn smooth_part(x: &[f64]) -> f64 {
        -x.iter()
            .map(|&v| {
                libm::exp(-(v - 1.0) * (v - 1.0)) + libm::exp(-0.8 * (v + 1.0) * (v + 1.0))
                    - 0.05 * libm::sin(8.0 * (v + 0.1))
            })
            .product::<f64>()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let step = if x[0] > self.x_step { self.c_step } else { 0.0 };
        Self::smooth_part(x) + step
    }
}

impl Objective for HerbieStep {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        Ok(self.value(x))
    }
}

/// `xᵀAx + bᵀx + c` with symmetric row-major `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        let d = b.len();
        if a.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: a.len() });
        }
        for i in 0..d {
            for j in 0..i {
                if a[i * d + j] != a[j * d + i] {
                    return Err(Error::invalid("quadratic matrix must be symmetric"));
                }
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        let mut v = self.c;
        for i in 0..d {
            let row: f64 = (0..d).map(|j| self.a[i * d + j] * x[j]).sum();
            v += x[i] * row + self.b[i] * x[i];
        }
        Ok(v)
    }

    /// `2Ax + b`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| 2.0 * (0..d).map(|j| self.a[i * d + j] * x[j]).sum::<f64>() + self.b[i]).collect()
    }

    /// Exact Gaussian smoothing: `f(x) + Σ A_ii σ_i²`.
    pub fn smoothed(&self, x: &[f64], sigmas: &[f64]) -> Result<f64> {
        let d = self.dim();
        Ok(self.value(x)? + (0..d).map(|i| self.a[i * d + i] * sigmas[i] * sigmas[i]).sum::<f64>())
    }
}

impl Objective for Quadratic {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.value(x)
    }
}

/// `height · 1[x_axis > location]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub axis: usize,
    pub location: f64,
    pub height: f64,
}

impl Objective for Step {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let v = *x.get(self.axis).ok_or(Error::DimensionMismatch { expected: self.axis + 1, got: x.len() })?;
        Ok(if v > self.location { self.height } else { 0.0 })
    }
}
