//! Feasible design box, its δσ-extension, and the per-axis affine scaling
//! between physical and internal units.
//!
//! All algorithm state lives in internal units: axis `i` maps
//! `[lower_i, upper_i]` onto `[0, width_i * scale_i]`. Periodic axes
//! (orientations) are reduced modulo the scaled period and never clipped.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
    periodic: Vec<bool>,
    scale: Vec<f64>,
}

/// Which box a membership test refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoxKind {
    /// The feasible box `B`.
    Feasible,
    /// The extended sampling box `B_δ`, half-width `delta * sigma` (internal units).
    Extended { delta: f64, sigma: f64 },
}

impl DesignSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, periodic: Vec<bool>, scale: Vec<f64>) -> Result<Self> {
        let d = lower.len();
        if d == 0 {
            return Err(Error::invalid("design space must have at least one axis"));
        }
        for len in [upper.len(), periodic.len(), scale.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, got: len });
            }
        }
        for i in 0..d {
            if !(lower[i].is_finite() && upper[i].is_finite() && lower[i] < upper[i]) {
                return Err(Error::invalid(alloc::format!(
                    "axis {i}: lower bound {} must be below upper bound {}",
                    lower[i],
                    upper[i]
                )));
            }
            if !(scale[i].is_finite() && scale[i] > 0.0) {
                return Err(Error::invalid(alloc::format!("axis {i}: scale {} must be positive", scale[i])));
            }
        }
        Ok(Self { lower, upper, periodic, scale })
    }

    /// Unit scaling on every axis, no periodic axes.
    pub fn unscaled(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let d = lower.len();
        Self::new(lower, upper, alloc::vec![false; d], alloc::vec![1.0; d])
    }

    /// Chooses `scale_i = internal_sigma / physical_sigma_i`, so every
    /// axis shares one standard deviation `internal_sigma` internally.
    pub fn with_common_sigma(
        lower: Vec<f64>,
        upper: Vec<f64>,
        periodic: Vec<bool>,
        physical_sigmas: &[f64],
        internal_sigma: f64,
    ) -> Result<Self> {
        if physical_sigmas.len() != lower.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: physical_sigmas.len() });
        }
        if !(internal_sigma > 0.0) {
            return Err(Error::invalid("internal sigma must be positive"));
        }
        let scale = physical_sigmas
            .iter()
            .map(|&s| if s > 0.0 { internal_sigma / s } else { f64::NAN })
            .collect();
        Self::new(lower, upper, periodic, scale)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    /// Width of axis `i` in internal units; also the period of a periodic axis.
    pub fn internal_width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) * self.scale[axis]
    }

    /// Reduces a periodic internal coordinate into `[0, period)`; identity otherwise.
    pub fn wrap(&self, axis: usize, v: f64) -> f64 {
        if !self.periodic[axis] {
            return v;
        }
        let p = self.internal_width(axis);
        let r = v - p * libm::floor(v / p);
        // guards against r == p from rounding when v is a tiny negative number
        if r >= p {
            0.0
        } else {
            r
        }
    }

    /// Signed difference `a - b` along `axis`, taken as the shortest way
    /// around on periodic axes.
    pub fn axis_diff(&self, axis: usize, a: f64, b: f64) -> f64 {
        let diff = a - b;
        if !self.periodic[axis] {
            return diff;
        }
        let p = self.internal_width(axis);
        diff - p * libm::round(diff / p)
    }

    /// Squared Euclidean distance in internal units, wrapped on periodic axes.
    pub fn distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (&x, &y))| {
                let t = self.axis_diff(i, x, y);
                t * t
            })
            .sum()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: len });
        }
        Ok(())
    }

    pub fn to_internal(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok((0..self.dim())
            .map(|i| self.wrap(i, (x[i] - self.lower[i]) * self.scale[i]))
            .collect())
    }

    pub fn to_physical(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y.len())?;
        Ok((0..self.dim())
            .map(|i| self.lower[i] + self.wrap(i, y[i]) / self.scale[i])
            .collect())
    }

    /// Internal-unit bounds of the selected box on axis `i`;
    /// periodic axes are unbounded.
    pub fn bounds(&self, axis: usize, kind: BoxKind) -> (f64, f64) {
        if self.periodic[axis] {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let w = self.internal_width(axis);
        match kind {
            BoxKind::Feasible => (0.0, w),
            BoxKind::Extended { delta, sigma } => (-delta * sigma, w + delta * sigma),
        }
    }

    /// Membership of an internal-unit vector in `B` or `B_δ`.
    pub fn contains(&self, y: &[f64], kind: BoxKind) -> Result<bool> {
        self.check_dim(y.len())?;
        Ok(y.iter().enumerate().all(|(i, &v)| {
            let (lo, hi) = self.bounds(i, kind);
            lo <= v && v <= hi
        }))
    }

    /// Projection onto `B` in internal units; periodic axes are wrapped.
    pub fn clamp(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(i, &v)| {
                if self.periodic[i] {
                    self.wrap(i, v)
                } else {
                    v.clamp(0.0, self.internal_width(i))
                }
            })
            .collect()
    }
}

/// `B_δ` for a given smoothing scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedBox {
    pub base: DesignSpace,
    pub delta: f64,
    pub sigma: f64,
}

impl ExtendedBox {
    pub fn new(base: DesignSpace, delta: f64, sigma: f64) -> Result<Self> {
        if !(delta > 0.0 && sigma > 0.0) {
            return Err(Error::invalid("extended box needs positive delta and sigma"));
        }
        Ok(Self { base, delta, sigma })
    }

    pub fn kind(&self) -> BoxKind {
        BoxKind::Extended { delta: self.delta, sigma: self.sigma }
    }

    /// Internal-unit bounds of axis `i`.
    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        self.base.bounds(axis, self.kind())
    }

    /// Physical bounds `[lower_i - δσ/scale_i, upper_i + δσ/scale_i]`.
    pub fn physical_bounds(&self, axis: usize) -> (f64, f64) {
        if self.base.is_periodic(axis) {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let ext = self.delta * self.sigma / self.base.scale[axis];
        (self.base.lower[axis] - ext, self.base.upper[axis] + ext)
    }

    pub fn contains(&self, y: &[f64]) -> Result<bool> {
        self.base.contains(y, self.kind())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn angle() -> DesignSpace {
        DesignSpace::new(vec![0.0], vec![180.0], vec![true], vec![1.0 / 180.0]).unwrap()
    }

    #[test]
    fn midpoint_maps_to_half() {
        let s = DesignSpace::new(vec![0.0], vec![180.0], vec![false], vec![1.0 / 180.0]).unwrap();
        assert_eq!(s.to_internal(&[90.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn periodic_axis_reduces_modulo_period() {
        let y = angle().to_internal(&[270.0]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn common_sigma_ratio() {
        let s = DesignSpace::with_common_sigma(
            vec![0.0, 0.156],
            vec![180.0, 0.244],
            vec![true, false],
            &[3.6, 1.76e-3],
            1.0,
        )
        .unwrap();
        let ratio = s.scale()[1] / s.scale()[0];
        assert!((ratio - 3.6 / 1.76e-3).abs() < 1e-9 * ratio);
        assert!((ratio - 2045.4545).abs() < 1e-3);
    }

    #[test]
    fn membership_in_extended_box() {
        let s = DesignSpace::unscaled(vec![0.0], vec![1.0]).unwrap();
        assert!(s.contains(&[0.5], BoxKind::Feasible).unwrap());
        let ext = BoxKind::Extended { delta: 3.0, sigma: 0.1 };
        assert!(s.contains(&[1.2], ext).unwrap());
        assert!(!s.contains(&[1.31], ext).unwrap());
        assert!(!s.contains(&[1.2], BoxKind::Feasible).unwrap());
    }

    #[test]
    fn clamp_projects_and_wraps() {
        let s = DesignSpace::unscaled(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(s.clamp(&[1.4]), vec![1.0]);
        assert_eq!(s.clamp(&[0.5]), vec![0.5]);
        let p = DesignSpace::new(vec![0.0], vec![180.0], vec![true], vec![1.0]).unwrap();
        assert!((p.clamp(&[190.0])[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_bounds_and_dimensions() {
        assert!(DesignSpace::unscaled(vec![1.0], vec![1.0]).is_err());
        assert!(DesignSpace::new(vec![0.0], vec![1.0], vec![false], vec![0.0]).is_err());
        let s = DesignSpace::unscaled(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(
            s.to_internal(&[0.5]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn wrapped_difference_takes_short_way() {
        let p = angle();
        assert!((p.axis_diff(0, 0.95, 0.05) + 0.1).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn space() -> DesignSpace {
            DesignSpace::new(
                vec![-2.0, 0.156, 0.0],
                vec![3.0, 0.244, 180.0],
                vec![false, false, true],
                vec![0.7, 1136.36, 1.0 / 3.6],
            )
            .unwrap()
        }

        proptest! {
            #[test]
            fn scale_roundtrip(a in -2.0..3.0f64, b in 0.156..0.244f64, c in 0.0..180.0f64) {
                let s = space();
                let x = [a, b, c];
                let back = s.to_physical(&s.to_internal(&x).unwrap()).unwrap();
                for i in 0..3 {
                    prop_assert!((back[i] - x[i]).abs() <= 1e-12 * x[i].abs().max(1.0));
                }
            }

            #[test]
            fn internal_inside_scaled_box(a in -2.0..3.0f64, b in 0.156..0.244f64, c in 0.0..180.0f64) {
                let s = space();
                let y = s.to_internal(&[a, b, c]).unwrap();
                for i in 0..3 {
                    prop_assert!(y[i] >= 0.0 && y[i] <= s.internal_width(i) * (1.0 + 1e-12));
                }
            }

            #[test]
            fn clamp_idempotent(y in proptest::collection::vec(-1e3..1e3f64, 3)) {
                let s = space();
                let once = s.clamp(&y);
                prop_assert_eq!(s.clamp(&once), once);
            }

            #[test]
            fn feasible_implies_extended(y in proptest::collection::vec(-10.0..200.0f64, 3), delta in 0.01..5.0f64, sigma in 0.01..2.0f64) {
                let s = space();
                if s.contains(&y, BoxKind::Feasible).unwrap() {
                    let ext = BoxKind::Extended { delta, sigma };
                    prop_assert!(s.contains(&y, ext).unwrap());
                }
            }
        }
    }
}
