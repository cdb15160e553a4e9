//! Small dense and banded kernels.

use alloc::vec;
use alloc::vec::Vec;

/// Eigen-decomposition of a symmetric row-major `n × n` matrix by cyclic
/// Jacobi rotations. Returns eigenvalues and column eigenvectors
/// (row-major, column `k` pairs with eigenvalue `k`).
pub(crate) fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i * n + j] * m[i * n + j]).sum();
        let total: f64 = m.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i * n + i]).collect(), v)
}

/// Rebuilds `V diag(values) Vᵀ`.
pub(crate) fn compose(values: &[f64], vectors: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n).map(|k| vectors[i * n + k] * values[k] * vectors[j * n + k]).sum();
        }
    }
    out
}

/// Symmetric positive-definite banded matrix stored as lower bands:
/// `bands[k][i] = A[i][i - k]` for `k = 0..=bw`.
#[derive(Debug, Clone)]
pub(crate) struct BandedSpd {
    pub n: usize,
    pub bands: Vec<Vec<f64>>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bands: vec![vec![0.0; n]; bandwidth + 1] }
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    /// Adds `v` at `(i, j)` with `|i - j| <= bandwidth`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.bands[r - c][r] += v;
    }

    /// In-place banded Cholesky `A = L Lᵀ`; `None` if not positive definite.
    pub fn cholesky(&self, shift: f64) -> Option<BandedSpd> {
        let bw = self.bandwidth();
        let mut l = self.clone();
        for i in 0..self.n {
            l.bands[0][i] += shift;
        }
        for i in 0..self.n {
            for k in (0..=bw.min(i)).rev() {
                let j = i - k;
                // L[i][j] = (A[i][j] - Σ_{m<j} L[i][m] L[j][m]) / L[j][j]
                let mut sum = l.bands[k][i];
                let lo = i.saturating_sub(bw);
                for m in lo..j {
                    sum -= l.bands[i - m][i] * l.bands[j - m][j];
                }
                if k == 0 {
                    if !(sum > 0.0) {
                        return None;
                    }
                    l.bands[0][i] = libm::sqrt(sum);
                } else {
                    l.bands[k][i] = sum / l.bands[0][j];
                }
            }
        }
        Some(l)
    }

    /// Solves `L Lᵀ x = b` for a factor produced by [`BandedSpd::cholesky`].
    pub fn solve_factored(&self, b: &[f64]) -> Vec<f64> {
        let bw = self.bandwidth();
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 1..=bw.min(i) {
                y[i] -= self.bands[k][i] * y[i - k];
            }
            y[i] /= self.bands[0][i];
        }
        for i in (0..n).rev() {
            for k in 1..=bw.min(n - 1 - i) {
                y[i] -= self.bands[k][i + k] * y[i + k];
            }
            y[i] /= self.bands[0][i];
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.bands.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_reconstructs() {
        let a = [4.0, 1.0, -2.0, 1.0, 3.0, 0.5, -2.0, 0.5, -1.0];
        let (vals, vecs) = symmetric_eigen(&a, 3);
        let back = compose(&vals, &vecs, 3);
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(vals.iter().any(|&v| v < 0.0));
    }

    #[test]
    fn banded_cholesky_solves_pentadiagonal() {
        let n = 7;
        let mut m = BandedSpd::zeros(n, 2);
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            m.add(i, i, 6.0);
            dense[i * n + i] = 6.0;
            if i >= 1 {
                m.add(i, i - 1, -4.0 * 0.5);
                dense[i * n + i - 1] = -2.0;
                dense[(i - 1) * n + i] = -2.0;
            }
            if i >= 2 {
                m.add(i - 2, i, 1.0);
                dense[i * n + i - 2] = 1.0;
                dense[(i - 2) * n + i] = 1.0;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let x = m.cholesky(0.0).unwrap().solve_factored(&b);
        for i in 0..n {
            let r: f64 = (0..n).map(|j| dense[i * n + j] * x[j]).sum();
            assert!((r - b[i]).abs() < 1e-12);
        }
        let mut neg = BandedSpd::zeros(2, 1);
        neg.add(0, 0, 1.0);
        neg.add(1, 1, -1.0);
        assert!(neg.cholesky(0.0).is_none());
        assert!(neg.cholesky(2.0).is_some());
    }
}
