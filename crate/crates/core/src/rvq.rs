//! Random vector quantization for limited feedback.
//!
//! The UE feeds back a vector's direction as the index of the best-matching
//! codeword in a codebook of 2^B random unit-norm vectors shared with the BS;
//! the vector's magnitude is fed back losslessly alongside the index.

use crate::numerics::{CMat, CVec};
use crate::rng::RandomSource;
use num_complex::Complex64;
use thiserror::Error;

/// Practical cap on codebook size: quantization scans all 2^B codewords.
pub const MAX_BITS: u32 = 24;

#[derive(Debug, Error)]
pub enum RvqError {
    #[error("codebook bits must be in 1..={MAX_BITS}, got {0}")]
    BitsOutOfRange(u32),
    #[error("cannot quantize: {0}")]
    BadInput(String),
}

/// Shared random codebook: `words` holds 2^bits unit-norm columns.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub dim: usize,
    pub bits: u32,
    pub seed: u64,
    words: CMat,
}

impl Codebook {
    /// Generate a codebook of 2^bits isotropic unit-norm codewords,
    /// deterministic in `seed`.
    pub fn generate(dim: usize, bits: u32, seed: u64) -> Result<Self, RvqError> {
        if bits == 0 || bits > MAX_BITS {
            return Err(RvqError::BitsOutOfRange(bits));
        }
        if dim == 0 {
            return Err(RvqError::BadInput("codeword dimension is zero".into()));
        }
        let count = 1usize << bits;
        let mut rng = RandomSource::from_seed(seed);
        let mut words = CMat::zeros(dim, count);
        for b in 0..count {
            let mut w = CVec::from_fn(dim, |_, _| rng.complex_normal());
            w /= Complex64::new(w.norm(), 0.0);
            words.set_column(b, &w);
        }
        Ok(Self {
            dim,
            bits,
            seed,
            words,
        })
    }

    /// Codeword `b` as an owned vector.
    pub fn word(&self, b: usize) -> CVec {
        self.words.column(b).into_owned()
    }

    #[cfg(test)]
    fn from_words(words: CMat) -> Self {
        let bits = (words.ncols() as f64).log2().round() as u32;
        Self {
            dim: words.nrows(),
            bits,
            seed: 0,
            words,
        }
    }

    /// Number of codewords, 2^bits.
    pub fn len(&self) -> usize {
        self.words.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.words.ncols() == 0
    }

    /// Quantize `z`: pick the codeword maximizing |z̄ᴴc_b|² (z̄ = z/‖z‖, ties →
    /// lowest index) and reconstruct as ‖z‖·c_b. The reconstruction carries the
    /// codeword's own phase: only the direction survives quantization.
    pub fn quantize(&self, z: &CVec) -> Result<(usize, CVec), RvqError> {
        if z.len() != self.dim {
            return Err(RvqError::BadInput(format!(
                "vector length {} != codebook dimension {}",
                z.len(),
                self.dim
            )));
        }
        let norm = z.norm();
        if norm == 0.0 {
            return Err(RvqError::BadInput("zero vector".into()));
        }
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for b in 0..self.len() {
            let score = self.words.column(b).dotc(z).norm_sqr();
            if score > best_score {
                best_score = score;
                best = b;
            }
        }
        Ok((best, self.word(best) * Complex64::new(norm, 0.0)))
    }
}
