use alloc::vec::Vec;

use super::sobol_table::JOE_KUO;
use crate::error::{Error, Result};

/// Highest supported dimension (van der Corput plus the tabulated entries).
pub const MAX_SOBOL_DIM: usize = JOE_KUO.len() + 1;

const BITS: usize = 32;

/// A block of an unscrambled Sobol sequence: `count` points after dropping
/// the origin and then `skip` further points, in Gray-code order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SobolSet {
    pub dim: usize,
    pub count: usize,
    pub skip: u64,
}

impl SobolSet {
    pub fn new(dim: usize, count: usize, skip: u64) -> Result<Self> {
        if dim == 0 || dim > MAX_SOBOL_DIM {
            return Err(Error::SobolDimension(dim));
        }
        if count == 0 || count as u64 > 1 << 31 || skip + count as u64 >= 1 << BITS {
            return Err(Error::SobolCount(count as u64));
        }
        Ok(Self { dim, count, skip })
    }

    /// Row-major `count × dim` points, all strictly inside the unit cube.
    pub fn points_flat(&self) -> Vec<f64> {
        let dirs: Vec<[u32; BITS]> = (0..self.dim).map(direction_numbers).collect();
        let first = self.skip + 1;
        // state for index `first` from its Gray code, then incremental updates
        let gray = first ^ (first >> 1);
        let mut state: Vec<u32> = dirs
            .iter()
            .map(|v| (0..BITS).filter(|&b| gray >> b & 1 == 1).fold(0, |acc, b| acc ^ v[b]))
            .collect();
        let norm = 1.0 / (1u64 << BITS) as f64;
        let mut out = Vec::with_capacity(self.count * self.dim);
        let mut index = first;
        for n in 0..self.count {
            if n > 0 {
                let bit = (index.trailing_ones()) as usize;
                for (s, v) in state.iter_mut().zip(&dirs) {
                    *s ^= v[bit];
                }
                index += 1;
            }
            out.extend(state.iter().map(|&s| s as f64 * norm));
        }
        out
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.points_flat().chunks(self.dim).map(|c| c.to_vec()).collect()
    }
}

fn direction_numbers(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim_index - 1];
    let s = s as usize;
    for k in 0..s.min(BITS) {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for l in 1..s {
            if (a >> (s - 1 - l)) & 1 == 1 {
                x ^= v[k - l];
            }
        }
        v[k] = x;
    }
    v
}
