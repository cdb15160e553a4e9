//! Monte Carlo estimates of the Gaussian-smoothed objective
//! `F(x) = E[f(Y)]`, `Y ~ N(x, diag(σ²))`, and of its gradient and Hessian
//! through the score function of the normal density.
//!
//! An [`AnchoredEstimator`] fixes one set of samples `z_i = a + σ ⊙ w_i`
//! around an anchor `a` (the `w_i` are quasi-normal points from a Sobol
//! set) and evaluates the field there once. At any other mean `x` the
//! same samples are reused with likelihood ratios
//! `ρ_i(x) = p(z_i; x, Σ) / p(z_i; a, Σ)`:
//!
//! ```text
//! F(x)   ≈ 1/M Σ f(z_i) ρ_i(x)
//! ∇F(x)  ≈ 1/M Σ f(z_i) ρ_i(x) Σ⁻¹ (z_i - x)
//! ∇²F(x) ≈ 1/M Σ f(z_i) ρ_i(x) [Σ⁻¹ (z_i - x)(z_i - x)ᵀ Σ⁻¹ - Σ⁻¹]
//! ```
//!
//! At `x = a` every ratio is exactly one and the plain sample averages are
//! recovered. The three estimates are exact derivatives of each other, so
//! the estimate is a smooth deterministic function of `x` even when `f` is
//! piecewise constant. [`Weighting::SelfNormalized`] divides by `Σ ρ_i`
//! instead of `M` and differentiates that ratio.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::objectives::ScalarField;
use crate::sampling::{standard_normal_quantile, SobolSet};

/// Samples per partial sum before partial sums are combined pairwise.
const BLOCK: usize = 256;

/// Density of `N(x, diag(sigmas²))` at `y`.
pub fn gaussian_pdf(y: &[f64], x: &[f64], sigmas: &[f64]) -> f64 {
    let d = x.len();
    let mut quad = 0.0;
    let mut norm = libm::pow(2.0 * core::f64::consts::PI, -0.5 * d as f64);
    for i in 0..d {
        let t = (y[i] - x[i]) / sigmas[i];
        quad += t * t;
        norm /= sigmas[i];
    }
    norm * libm::exp(-0.5 * quad)
}

/// Per-axis standard deviations and truncation width used for smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingConfig {
    pub sigmas: Vec<f64>,
    pub delta: f64,
}

impl SmoothingConfig {
    pub fn new(sigmas: Vec<f64>, delta: f64) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::invalid("smoothing needs at least one axis"));
        }
        if let Some(&s) = sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid(alloc::format!("smoothing sigma {s} must be positive")));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid("truncation delta must be positive"));
        }
        Ok(Self { sigmas, delta })
    }
}

/// Standard-normal points `Φ⁻¹(u_i)` for a block of a Sobol sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalPointSet {
    dim: usize,
    count: usize,
    w: Vec<f64>,
}

impl NormalPointSet {
    pub fn from_sobol(set: &SobolSet) -> Result<Self> {
        if set.count < 2 {
            return Err(Error::invalid("need at least two Monte Carlo samples"));
        }
        let w = set
            .points_flat()
            .into_iter()
            .map(standard_normal_quantile)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: set.dim, count: set.count, w })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.w[i * self.dim..(i + 1) * self.dim]
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Value, gradient and row-major Hessian of the smoothed objective at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

/// How reweighted samples are combined away from the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// `1/M Σ f(z_i) ρ_i(x)`; the plain sample averages at the anchor.
    LikelihoodRatio,
    /// `Σ f(z_i) ρ_i(x) / Σ ρ_i(x)`; equivariant under `a·f + b` and exact
    /// for constant fields at every `x`.
    #[default]
    SelfNormalized,
}

#[derive(Debug, Clone)]
pub struct AnchoredEstimator<'a> {
    anchor: Vec<f64>,
    sigmas: Vec<f64>,
    points: &'a NormalPointSet,
    values: Vec<f64>,
    weighting: Weighting,
}

impl<'a> AnchoredEstimator<'a> {
    /// Evaluates `field` once at every sample around `anchor`.
    pub fn new<F: ScalarField + ?Sized>(
        anchor: &[f64],
        sigmas: &[f64],
        points: &'a NormalPointSet,
        field: &F,
    ) -> Result<Self> {
        check_shapes(anchor, sigmas, points)?;
        let mut z = vec![0.0; anchor.len()];
        let values = (0..points.count)
            .map(|i| {
                sample_into(anchor, sigmas, points.point(i), &mut z);
                field.value(&z)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(anchor, sigmas, points, values)
    }

    /// Uses field values computed elsewhere, one per sample, in sample order.
    pub fn from_values(anchor: &[f64], sigmas: &[f64], points: &'a NormalPointSet, values: Vec<f64>) -> Result<Self> {
        check_shapes(anchor, sigmas, points)?;
        if values.len() != points.count {
            return Err(Error::DimensionMismatch { expected: points.count, got: values.len() });
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "field value", value: v });
        }
        Ok(Self {
            anchor: anchor.to_vec(),
            sigmas: sigmas.to_vec(),
            points,
            values,
            weighting: Weighting::LikelihoodRatio,
        })
    }

    pub fn with_weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn sample_count(&self) -> usize {
        self.points.count
    }

    /// The `i`-th sample site `a + σ ⊙ w_i`.
    pub fn sample(&self, i: usize) -> Vec<f64> {
        let mut z = vec![0.0; self.anchor.len()];
        sample_into(&self.anchor, &self.sigmas, self.points.point(i), &mut z);
        z
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn offsets(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.anchor.len() {
            return Err(Error::DimensionMismatch { expected: self.anchor.len(), got: x.len() });
        }
        Ok(x.iter().zip(&self.anchor).zip(&self.sigmas).map(|((xi, ai), s)| (xi - ai) / s).collect())
    }

    /// Likelihood ratio `ρ_i` for standardized offset `t`; fills `e = w_i - t`.
    #[inline]
    fn ratio(&self, i: usize, t: &[f64], tt: f64, e: &mut [f64]) -> f64 {
        let w = self.points.point(i);
        let mut log_ratio = -0.5 * tt;
        for k in 0..t.len() {
            log_ratio += w[k] * t[k];
            e[k] = w[k] - t[k];
        }
        if log_ratio == 0.0 {
            1.0
        } else {
            libm::exp(log_ratio)
        }
    }

    /// Per-sample ratios with their sum and the weighted field sum.
    fn ratios(&self, t: &[f64]) -> (Vec<f64>, f64, f64) {
        let tt: f64 = t.iter().map(|v| v * v).sum();
        let mut e = vec![0.0; t.len()];
        let mut rho = vec![0.0; self.points.count];
        let sums = block_sum(self.points.count, 2, |i, acc| {
            let r = self.ratio(i, t, tt, &mut e);
            rho[i] = r;
            acc[0] += r;
            acc[1] += r * self.values[i];
        });
        (rho, sums[0], sums[1])
    }

    pub fn objective(&self, x: &[f64]) -> Result<Estimate> {
        let t = self.offsets(x)?;
        let (rho, total, weighted) = self.ratios(&t);
        let m = self.points.count as f64;
        Ok(match self.weighting {
            Weighting::LikelihoodRatio => {
                let mean = weighted / m;
                let sq = block_sum(self.points.count, 1, |i, acc| {
                    let dv = rho[i] * self.values[i] - mean;
                    acc[0] += dv * dv;
                });
                Estimate { mean, std_error: libm::sqrt(sq[0] / (m - 1.0) / m) }
            }
            Weighting::SelfNormalized => {
                let mean = self.normalized_mean(weighted, total);
                let sq = block_sum(self.points.count, 1, |i, acc| {
                    let dv = rho[i] * (self.values[i] - mean);
                    acc[0] += dv * dv;
                });
                Estimate { mean, std_error: libm::sqrt(sq[0]) / total }
            }
        })
    }

    fn normalized_mean(&self, weighted: f64, total: f64) -> f64 {
        let mean = weighted / total;
        // a constant field must reproduce its value exactly
        let first = self.values[0];
        if self.values.iter().all(|&v| v == first) {
            first
        } else {
            mean
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.derivatives(x)?.gradient)
    }

    /// Symmetric row-major `d × d` Hessian estimate.
    pub fn hessian(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.derivatives(x)?.hessian)
    }

    /// Value, gradient and Hessian, sharing the ratio computation.
    pub fn derivatives(&self, x: &[f64]) -> Result<Derivatives> {
        let t = self.offsets(x)?;
        let d = t.len();
        let (rho, total, weighted) = self.ratios(&t);
        let m = self.points.count as f64;
        let s = &self.sigmas;
        let (value, center, scale) = match self.weighting {
            Weighting::LikelihoodRatio => (weighted / m, 0.0, m),
            Weighting::SelfNormalized => {
                let v = self.normalized_mean(weighted, total);
                (v, v, total)
            }
        };
        let upper = d * (d + 1) / 2;
        let normalized = self.weighting == Weighting::SelfNormalized;
        // layout: [Σu, Σu e_k (d), Σu e_j e_k for j <= k (upper), Σρ e_k (d)]
        // with u = ρ (f - center)
        let mut e = vec![0.0; d];
        let width = 1 + d + upper + if normalized { d } else { 0 };
        let sums = block_sum(self.points.count, width, |i, acc| {
            let w = self.points.point(i);
            for k in 0..d {
                e[k] = w[k] - t[k];
            }
            let u = rho[i] * (self.values[i] - center);
            acc[0] += u;
            let mut p = 1 + d;
            for j in 0..d {
                let ue = u * e[j];
                acc[1 + j] += ue;
                for k in j..d {
                    acc[p] += ue * e[k];
                    p += 1;
                }
            }
            if normalized {
                for k in 0..d {
                    acc[p + k] += rho[i] * e[k];
                }
            }
        });
        let gradient: Vec<f64> = (0..d).map(|k| sums[1 + k] / (scale * s[k])).collect();
        let mut hessian = vec![0.0; d * d];
        let mut p = 1 + d;
        for j in 0..d {
            for k in j..d {
                let mut h = sums[p];
                if j == k && !normalized {
                    h -= sums[0];
                }
                h /= scale * s[j] * s[k];
                hessian[j * d + k] = h;
                hessian[k * d + j] = h;
                p += 1;
            }
        }
        if normalized {
            // H = C - g mᵀ - m gᵀ with m_k = Σρ e_k / (σ_k Σρ)
            let mean_score: Vec<f64> = (0..d).map(|k| sums[p + k] / (total * s[k])).collect();
            for j in 0..d {
                for k in 0..d {
                    hessian[j * d + k] -= gradient[j] * mean_score[k] + mean_score[j] * gradient[k];
                }
            }
        }
        Ok(Derivatives { value, gradient, hessian })
    }
}

fn check_shapes(anchor: &[f64], sigmas: &[f64], points: &NormalPointSet) -> Result<()> {
    let d = anchor.len();
    if sigmas.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: sigmas.len() });
    }
    if points.dim != d {
        return Err(Error::DimensionMismatch { expected: d, got: points.dim });
    }
    if let Some(&s) = sigmas.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::invalid(alloc::format!("smoothing sigma {s} must be positive")));
    }
    Ok(())
}

#[inline]
fn sample_into(anchor: &[f64], sigmas: &[f64], w: &[f64], z: &mut [f64]) {
    for k in 0..anchor.len() {
        z[k] = anchor[k] + sigmas[k] * w[k];
    }
}

/// Sums `width`-wide per-sample contributions in fixed blocks, then
/// combines block partials pairwise. The order is independent of how the
/// caller might parallelize, so results are bit-stable.
fn block_sum(count: usize, width: usize, mut add: impl FnMut(usize, &mut [f64])) -> Vec<f64> {
    let mut partials: Vec<Vec<f64>> = Vec::with_capacity(count.div_ceil(BLOCK));
    let mut start = 0;
    while start < count {
        let end = (start + BLOCK).min(count);
        let mut acc = vec![0.0; width];
        for i in start..end {
            add(i, &mut acc);
        }
        partials.push(acc);
        start = end;
    }
    while partials.len() > 1 {
        let mut next = Vec::with_capacity(partials.len().div_ceil(2));
        let mut it = partials.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        partials = next;
    }
    partials.pop().unwrap_or_else(|| vec![0.0; width])
}

/// Smoothed objective at `x` with samples centred on `x`.
pub fn estimate_objective<F: ScalarField + ?Sized>(
    x: &[f64],
    config: &SmoothingConfig,
    points: &NormalPointSet,
    field: &F,
) -> Result<Estimate> {
    AnchoredEstimator::new(x, &config.sigmas, points, field)?.objective(x)
}

/// Score-function gradient at `x` with samples centred on `x`.
pub fn estimate_gradient<F: ScalarField + ?Sized>(
    x: &[f64],
    config: &SmoothingConfig,
    points: &NormalPointSet,
    field: &F,
) -> Result<Vec<f64>> {
    AnchoredEstimator::new(x, &config.sigmas, points, field)?.gradient(x)
}

/// Score-function Hessian at `x` with samples centred on `x`.
pub fn estimate_hessian<F: ScalarField + ?Sized>(
    x: &[f64],
    config: &SmoothingConfig,
    points: &NormalPointSet,
    field: &F,
) -> Result<Vec<f64>> {
    AnchoredEstimator::new(x, &config.sigmas, points, field)?.hessian(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(d: usize, log2m: u32) -> NormalPointSet {
        let m = 1usize << log2m;
        NormalPointSet::from_sobol(&SobolSet::new(d, m, m as u64 - 1).unwrap()).unwrap()
    }

    fn cfg(sigmas: &[f64]) -> SmoothingConfig {
        SmoothingConfig::new(sigmas.to_vec(), 3.0).unwrap()
    }

    #[test]
    fn pdf_reference_values() {
        assert!((gaussian_pdf(&[0.0], &[0.0], &[1.0]) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((gaussian_pdf(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 1.0]) - 0.159_154_943_091_895_35).abs() < 1e-15);
        assert!((gaussian_pdf(&[1.0], &[0.0], &[1.0]) - 0.241_970_724_519_143_37).abs() < 1e-15);
    }

    #[test]
    fn constant_field_is_exact() {
        let p = points(2, 12);
        let field = |_: &[f64]| 2.5;
        let est = estimate_objective(&[0.3, -0.1], &cfg(&[0.5, 0.2]), &p, &field).unwrap();
        assert_eq!(est.mean, 2.5);
        assert_eq!(est.std_error, 0.0);
        let g = estimate_gradient(&[0.3, -0.1], &cfg(&[0.5, 0.2]), &p, &field).unwrap();
        let bound = 4.0 * 2.5 / (0.2 * (p.count() as f64).sqrt());
        assert!(g.iter().all(|v| v.abs() <= bound), "{g:?}");
        let h = estimate_hessian(&[0.3, -0.1], &cfg(&[0.5, 0.2]), &p, &field).unwrap();
        let bound = 4.0 * 2.5 / (0.2 * 0.2 * (p.count() as f64).sqrt());
        assert!(h.iter().all(|v| v.abs() <= bound), "{h:?}");
    }

    #[test]
    fn second_moment_of_square() {
        let p = points(1, 16);
        let field = |y: &[f64]| y[0] * y[0];
        let est = estimate_objective(&[0.0], &cfg(&[1.0]), &p, &field).unwrap();
        assert!((est.mean - 1.0).abs() <= 3.0 * est.std_error, "{est:?}");
        let h = estimate_hessian(&[0.0], &cfg(&[1.0]), &p, &field).unwrap();
        assert!((h[0] - 2.0).abs() < 2e-2, "{h:?}");
    }

    #[test]
    fn linear_field_gradient() {
        let p = points(1, 16);
        let g = estimate_gradient(&[0.0], &cfg(&[1.0]), &p, &|y: &[f64]| y[0]).unwrap();
        assert!((g[0] - 1.0).abs() < 3e-3, "{g:?}");
    }

    #[test]
    fn step_smooths_to_half() {
        let p = points(1, 16);
        for sigma in [0.05, 0.7, 3.0] {
            let est = estimate_objective(&[0.0], &cfg(&[sigma]), &p, &|y: &[f64]| if y[0] > 0.0 { 1.0 } else { 0.0 }).unwrap();
            assert!((est.mean - 0.5).abs() <= 3.0 * est.std_error + 1e-12, "{est:?}");
        }
    }

    #[test]
    fn anchor_reproduces_plain_sample_average() {
        let p = points(3, 10);
        let field = |y: &[f64]| (3.0 * y[0]).sin() + y[1] * y[2];
        let a = [0.1, 0.2, -0.3];
        let s = [0.3, 0.1, 0.2];
        let est = AnchoredEstimator::new(&a, &s, &p, &field).unwrap();
        let plain: f64 = (0..p.count()).map(|i| field(&est.sample(i))).sum::<f64>() / p.count() as f64;
        assert!((est.objective(&a).unwrap().mean - plain).abs() < 1e-14);
        let d = est.derivatives(&a).unwrap();
        let g = est.gradient(&a).unwrap();
        for k in 0..3 {
            assert!((d.gradient[k] - g[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn reweighted_derivatives_match_finite_differences() {
        let p = points(2, 12);
        let field = |y: &[f64]| if y[0] + 0.5 * y[1] > 0.1 { 1.0 } else { -0.5 };
        let est = AnchoredEstimator::new(&[0.0, 0.0], &[0.4, 0.3], &p, &field).unwrap();
        let x = [0.12, -0.07];
        let d = est.derivatives(&x).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (est.objective(&xp).unwrap().mean - est.objective(&xm).unwrap().mean) / (2.0 * h);
            assert!((fd - d.gradient[k]).abs() < 1e-6 * d.gradient[k].abs().max(1.0));
            let gp = est.gradient(&xp).unwrap();
            let gm = est.gradient(&xm).unwrap();
            for j in 0..2 {
                let fdh = (gp[j] - gm[j]) / (2.0 * h);
                assert!((fdh - d.hessian[j * 2 + k]).abs() < 1e-5 * d.hessian[j * 2 + k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn shape_errors() {
        let p = points(2, 4);
        assert!(AnchoredEstimator::new(&[0.0], &[1.0], &p, &|_: &[f64]| 0.0).is_err());
        assert!(AnchoredEstimator::new(&[0.0, 0.0], &[1.0, 0.0], &p, &|_: &[f64]| 0.0).is_err());
        assert!(AnchoredEstimator::from_values(&[0.0, 0.0], &[1.0, 1.0], &p, vec![0.0; 3]).is_err());
        assert!(SmoothingConfig::new(vec![1.0, -1.0], 3.0).is_err());
    }

    #[test]
    fn block_sum_is_order_fixed() {
        let a = block_sum(1000, 1, |i, acc| acc[0] += 1.0 / (i as f64 + 1.0));
        let b = block_sum(1000, 1, |i, acc| acc[0] += 1.0 / (i as f64 + 1.0));
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn self_normalized_derivatives_match_finite_differences() {
        let p = points(2, 12);
        let field = |y: &[f64]| if y[0] - y[1] > 0.05 { 2.0 } else { -1.0 } + y[0] * y[0];
        let est = AnchoredEstimator::new(&[0.1, 0.0], &[0.3, 0.5], &p, &field)
            .unwrap()
            .with_weighting(Weighting::SelfNormalized);
        let x = [0.25, -0.2];
        let d = est.derivatives(&x).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (est.objective(&xp).unwrap().mean - est.objective(&xm).unwrap().mean) / (2.0 * h);
            assert!((fd - d.gradient[k]).abs() < 1e-6 * d.gradient[k].abs().max(1.0));
            let gp = est.gradient(&xp).unwrap();
            let gm = est.gradient(&xm).unwrap();
            for j in 0..2 {
                let fdh = (gp[j] - gm[j]) / (2.0 * h);
                assert!((fdh - d.hessian[j * 2 + k]).abs() < 1e-5 * d.hessian[j * 2 + k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn self_normalized_is_affine_equivariant() {
        let p = points(2, 10);
        let field = |y: &[f64]| (2.0 * y[0]).sin() * y[1];
        let shifted = |y: &[f64]| 3.0 * field(y) + 100.0;
        let a = [0.0, 0.5];
        let s = [0.4, 0.4];
        let e1 = AnchoredEstimator::new(&a, &s, &p, &field).unwrap().with_weighting(Weighting::SelfNormalized);
        let e2 = AnchoredEstimator::new(&a, &s, &p, &shifted).unwrap().with_weighting(Weighting::SelfNormalized);
        let x = [0.3, 0.2];
        let d1 = e1.derivatives(&x).unwrap();
        let d2 = e2.derivatives(&x).unwrap();
        assert!((d2.value - (3.0 * d1.value + 100.0)).abs() < 1e-11);
        for k in 0..2 {
            assert!((d2.gradient[k] - 3.0 * d1.gradient[k]).abs() < 1e-9);
        }
        for k in 0..4 {
            assert!((d2.hessian[k] - 3.0 * d1.hessian[k]).abs() < 1e-8);
        }
        let c = AnchoredEstimator::new(&a, &s, &p, &|_: &[f64]| 7.0).unwrap().with_weighting(Weighting::SelfNormalized);
        let dc = c.derivatives(&x).unwrap();
        assert_eq!(dc.value, 7.0);
        assert!(dc.gradient.iter().chain(&dc.hessian).all(|v| *v == 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn mean_within_sampled_range(c in -3.0..3.0f64, amp in 0.1..5.0f64, x in -1.0..1.0f64, sigma in 0.01..2.0f64) {
                let p = points(1, 10);
                let field = |y: &[f64]| c + amp * (5.0 * y[0]).sin().signum();
                let est = AnchoredEstimator::new(&[x], &[sigma], &p, &field).unwrap();
                let lo = est.values().iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = est.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let m = est.objective(&[x]).unwrap().mean;
                prop_assert!(lo - 1e-12 <= m && m <= hi + 1e-12);
            }

            #[test]
            fn shrinking_sigma_recovers_field(x in -1.0..1.0f64) {
                let p = points(1, 12);
                let field = |y: &[f64]| (2.0 * y[0]).cos();
                let err = |s: f64| (estimate_objective(&[x], &cfg(&[s]), &p, &field).unwrap().mean - field(&[x])).abs();
                prop_assert!(err(1e-4) < 1e-7);
                prop_assert!(err(1e-4) <= err(0.1) + 1e-12);
            }
        }
    }
}
