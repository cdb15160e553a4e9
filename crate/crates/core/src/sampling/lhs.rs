use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{open_unit, SeededStream};
use crate::error::{Error, Result};
use crate::space::DesignSpace;

/// `n` Latin hypercube points in internal units: on every axis each of the
/// `n` equal-width strata of the feasible box holds exactly one point,
/// placed uniformly inside its stratum.
pub fn latin_hypercube(n: usize, space: &DesignSpace, stream: SeededStream) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::invalid("latin hypercube needs at least one point"));
    }
    let d = space.dim();
    let mut rng = stream.rng();
    let mut points = alloc::vec![alloc::vec![0.0; d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for axis in 0..d {
        perm.shuffle(&mut rng);
        let width = space.internal_width(axis);
        for (point, &stratum) in points.iter_mut().zip(&perm) {
            let offset = open_unit(&mut rng);
            point[axis] = width * (stratum as f64 + offset) / n as f64;
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn strata_occupied(points: &[Vec<f64>], axis: usize, width: f64) -> Vec<usize> {
        let n = points.len();
        let mut counts = vec![0usize; n];
        for p in points {
            let k = ((p[axis] / width) * n as f64).floor() as usize;
            counts[k.min(n - 1)] += 1;
        }
        counts
    }

    #[test]
    fn one_point_per_stratum_1d() {
        let s = DesignSpace::unscaled(vec![0.0], vec![1.0]).unwrap();
        let pts = latin_hypercube(4, &s, SeededStream::new(3, 0)).unwrap();
        assert_eq!(strata_occupied(&pts, 0, 1.0), vec![1, 1, 1, 1]);
    }

    #[test]
    fn marginal_strata_2d() {
        let s = DesignSpace::unscaled(vec![-1.0, 5.0], vec![1.0, 9.0]).unwrap();
        let pts = latin_hypercube(3, &s, SeededStream::new(11, 4)).unwrap();
        assert_eq!(strata_occupied(&pts, 0, 2.0), vec![1, 1, 1]);
        assert_eq!(strata_occupied(&pts, 1, 4.0), vec![1, 1, 1]);
    }

    #[test]
    fn single_point_inside_box() {
        let s = DesignSpace::unscaled(vec![0.0, 0.0], vec![2.0, 3.0]).unwrap();
        let pts = latin_hypercube(1, &s, SeededStream::new(0, 0)).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0][0] > 0.0 && pts[0][0] < 2.0 && pts[0][1] > 0.0 && pts[0][1] < 3.0);
        assert!(latin_hypercube(0, &s, SeededStream::new(0, 0)).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let s = DesignSpace::unscaled(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let a = latin_hypercube(17, &s, SeededStream::new(5, 2)).unwrap();
        let b = latin_hypercube(17, &s, SeededStream::new(5, 2)).unwrap();
        assert_eq!(a, b);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn stratification_holds(n in 1usize..60, d in 1usize..6, seed in any::<u64>()) {
                let s = DesignSpace::unscaled(vec![0.0; d], vec![1.0; d]).unwrap();
                let pts = latin_hypercube(n, &s, SeededStream::new(seed, 0)).unwrap();
                for axis in 0..d {
                    prop_assert!(strata_occupied(&pts, axis, 1.0).iter().all(|&c| c == 1));
                }
            }
        }
    }
}
