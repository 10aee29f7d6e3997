//! Counter-keyed random streams and Fubini–Study distributed sections.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Independent stream for `(seed, p, index, sub)`; no generator is shared.
pub fn stream(seed: u64, p: u64, index: u64, sub: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    for (i, word) in [seed, p, index, sub].iter().enumerate() {
        key[8 * i..8 * (i + 1)].copy_from_slice(&word.to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionSample {
    /// Unit vector of coefficients in the orthonormal basis.
    pub coefficients: Vec<Complex64>,
    pub seed: u64,
    pub p: u64,
    pub index: u64,
    pub sub: u64,
}

/// Normalized standard complex Gaussian vector, i.e. a point of
/// `ℙ^{d_p−1}` distributed by the Fubini–Study volume.
pub fn sample_section(dim: usize, seed: u64, p: u64, index: u64, sub: u64) -> SectionSample {
    let mut rng = stream(seed, p, index, sub);
    let mut c: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in &mut c {
        *v /= norm;
    }
    SectionSample { coefficients: c, seed, p, index, sub }
}
