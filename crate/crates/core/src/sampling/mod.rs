//! Point generators: Latin hypercube designs, truncated normal design
//! perturbations, and Sobol low-discrepancy points for expectation
//! estimates.

mod lhs;
mod normal;
mod sobol;
mod sobol_table;

pub use lhs::latin_hypercube;
pub use normal::{
    sample_truncated_normal, standard_normal_cdf, standard_normal_quantile, unit_to_normal,
    REJECTION_BUDGET,
};
pub use sobol::{SobolSet, MAX_SOBOL_DIM};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reproducible random source: identical `(seed, stream_id)` pairs give
/// bit-identical sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Independent substream; `salt` distinguishes siblings.
    pub fn substream(&self, salt: u64) -> Self {
        // splitmix-style mixing keeps nearby (stream, salt) pairs far apart
        let mut z = self.stream_id ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Self { seed: self.seed, stream_id: z ^ (z >> 31) }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Uniform draw in the open interval (0, 1) with 53 random bits.
pub(crate) fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    let bits = rng.next_u64() >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
