use alloc::vec::Vec;

use super::{open_unit, SeededStream};
use crate::error::{Error, Result};
use crate::space::ExtendedBox;

/// Redraws allowed per coordinate before truncated sampling gives up.
pub const REJECTION_BUDGET: usize = 1000;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

// Acklam's rational approximation (relative error ~1e-9), used as the
// starting point for one Halley correction.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_690e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.02425;

/// Lower half (`p <= 0.5`) of the quantile.
fn lower_quantile(p: f64) -> f64 {
    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = standard_normal_cdf(x) - p;
    let u = e * SQRT_2PI * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Inverse of the standard normal CDF on the open unit interval.
pub fn standard_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfUnitInterval(p));
    }
    Ok(if p > 0.5 { -lower_quantile(1.0 - p) } else { lower_quantile(p) })
}

/// Maps unit-cube points to `mean + sigmas ⊙ Φ⁻¹(point)` coordinate-wise.
pub fn unit_to_normal(points: &[Vec<f64>], mean: &[f64], sigmas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = mean.len();
    if sigmas.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: sigmas.len() });
    }
    points
        .iter()
        .map(|p| {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            p.iter()
                .zip(mean.iter().zip(sigmas))
                .map(|(&u, (&m, &s))| Ok(m + s * standard_normal_quantile(u)?))
                .collect()
        })
        .collect()
}

/// `n` draws from `N(mean, diag(sigmas²))` conditioned on `B_δ`, by
/// per-coordinate rejection. Periodic axes are drawn unconditionally and
/// wrapped. All vectors are in internal units.
pub fn sample_truncated_normal(
    mean: &[f64],
    sigmas: &[f64],
    n: usize,
    ext: &ExtendedBox,
    stream: SeededStream,
) -> Result<Vec<Vec<f64>>> {
    let d = ext.base.dim();
    for len in [mean.len(), sigmas.len()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, got: len });
        }
    }
    if let Some(&s) = sigmas.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::invalid(alloc::format!("standard deviation {s} must be positive")));
    }
    let mut rng = stream.rng();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut y = Vec::with_capacity(d);
        for axis in 0..d {
            let draw = |rng: &mut _| mean[axis] + sigmas[axis] * lower_or_upper(open_unit(rng));
            if ext.base.is_periodic(axis) {
                y.push(ext.base.wrap(axis, draw(&mut rng)));
                continue;
            }
            let (lo, hi) = ext.bounds(axis);
            let mut accepted = None;
            for _ in 0..REJECTION_BUDGET {
                let v = draw(&mut rng);
                if lo <= v && v <= hi {
                    accepted = Some(v);
                    break;
                }
            }
            y.push(accepted.ok_or(Error::RejectionFailed { axis, tries: REJECTION_BUDGET })?);
        }
        out.push(y);
    }
    Ok(out)
}

fn lower_or_upper(u: f64) -> f64 {
    if u > 0.5 {
        -lower_quantile(1.0 - u)
    } else {
        lower_quantile(u)
    }
}
