//! Xu–Needleman exponential cohesive potential and its tractions.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohesiveParams {
    /// Work of normal separation per unit area.
    pub phi_n: f64,
    /// Work of tangential separation per unit area.
    pub phi_s: f64,
    pub r: f64,
    pub delta_n_star: f64,
    pub delta_s_star: f64,
}

impl Default for CohesiveParams {
    fn default() -> Self {
        Self { phi_n: 2.718e-5, phi_s: 1.166e-5, r: 0.0, delta_n_star: 1e-4, delta_s_star: 1e-4 }
    }
}

impl CohesiveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi_n > 0.0 && self.phi_n.is_finite()) {
            return Err(Error::invalid("phi_n must be positive"));
        }
        if !(self.phi_s >= 0.0 && self.phi_s.is_finite()) {
            return Err(Error::invalid("phi_s must be non-negative"));
        }
        if !(self.delta_n_star > 0.0 && self.delta_s_star > 0.0) {
            return Err(Error::invalid("critical openings must be positive"));
        }
        if self.r == 1.0 || !self.r.is_finite() {
            return Err(Error::invalid("coupling parameter r must differ from 1"));
        }
        Ok(())
    }

    /// `q = φ_s / φ_n`.
    pub fn q(&self) -> f64 {
        self.phi_s / self.phi_n
    }

    /// Peak of the pure normal traction, reached at `δ_n = δ_n*`.
    pub fn peak_normal_traction(&self) -> f64 {
        self.phi_n / (core::f64::consts::E * self.delta_n_star)
    }

    fn coefficients(&self) -> (f64, f64) {
        let q = self.q();
        ((1.0 - q) / (self.r - 1.0), (self.r - q) / (self.r - 1.0))
    }
}

/// Interface energy density at normal opening `delta_n` and tangential
/// opening `delta_s`.
pub fn cohesive_potential(delta_n: f64, delta_s: f64, p: &CohesiveParams) -> Result<f64> {
    p.validate()?;
    Ok(potential_unchecked(delta_n, delta_s, p))
}

/// `(∂φ/∂δ_n, ∂φ/∂δ_s)`.
pub fn cohesive_traction(delta_n: f64, delta_s: f64, p: &CohesiveParams) -> Result<(f64, f64)> {
    p.validate()?;
    Ok(traction_unchecked(delta_n, delta_s, p))
}

/// `exp(-(δ_s/δ_s*)²)`; exactly 1 without tangential opening.
fn shear_decay(delta_s: f64, p: &CohesiveParams) -> f64 {
    if delta_s == 0.0 {
        1.0
    } else {
        libm::exp(-(delta_s * delta_s) / (p.delta_s_star * p.delta_s_star))
    }
}

pub(crate) fn potential_unchecked(delta_n: f64, delta_s: f64, p: &CohesiveParams) -> f64 {
    let (a, b) = p.coefficients();
    let big = delta_n / p.delta_n_star;
    let es = shear_decay(delta_s, p);
    let q = p.q();
    p.phi_n + p.phi_n * libm::exp(-big) * ((1.0 - p.r + big) * a - (q + b * big) * es)
}

pub(crate) fn traction_unchecked(delta_n: f64, delta_s: f64, p: &CohesiveParams) -> (f64, f64) {
    let (a, b) = p.coefficients();
    let big = delta_n / p.delta_n_star;
    let es = shear_decay(delta_s, p);
    let q = p.q();
    let e = libm::exp(-big);
    let tn = p.phi_n / p.delta_n_star * e * (a * (p.r - big) + es * (q - b + b * big));
    let ts = 2.0 * p.phi_n * delta_s / (p.delta_s_star * p.delta_s_star) * (q + b * big) * e * es;
    (tn, ts)
}

/// `∂²φ/∂δ_n²`.
pub(crate) fn normal_stiffness_unchecked(delta_n: f64, delta_s: f64, p: &CohesiveParams) -> f64 {
    let (a, b) = p.coefficients();
    let big = delta_n / p.delta_n_star;
    let es = shear_decay(delta_s, p);
    let q = p.q();
    p.phi_n / (p.delta_n_star * p.delta_n_star)
        * libm::exp(-big)
        * (a * (big - p.r - 1.0) + es * (2.0 * b - q - b * big))
}
