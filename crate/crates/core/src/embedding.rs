//! Appearance embeddings and the similarity primitives built on them.
//!
//! Embeddings carry f64 components in memory so that normalization and the
//! similarity math hold to tight tolerances; file payloads are 32-bit, and
//! the IO layer quantizes through f32 at the boundary. All comparisons within
//! one session must use a single dimension (default 1024) — mixing dimensions
//! is a hard error, never a truncation.

use crate::error::{Error, Result};
use crate::kernel;

pub const DEFAULT_DIM: usize = 1024;

/// Fixed-dimension appearance vector. Components are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    /// Builds an embedding, rejecting empty and non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "embedding must have at least one component".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding"));
        }
        Ok(Embedding { values })
    }

    /// Widens a 32-bit payload (the file representation) into an embedding.
    pub fn from_f32(values: &[f32]) -> Result<Self> {
        Self::new(values.iter().map(|&v| v as f64).collect())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 32-bit payload view used by the store cache and the file formats.
    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().map(|&v| v as f32).collect()
    }

    /// Rounds every component through f32, making the embedding bit-exactly
    /// representable in the file payload format.
    pub fn quantized(&self) -> Embedding {
        Embedding {
            values: self.values.iter().map(|&v| v as f32 as f64).collect(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        kernel::dot_f64(&self.values, &self.values).sqrt()
    }
}

fn check_dims(x: &Embedding, y: &Embedding) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(())
}

/// Cosine similarity between two embeddings, clamped to [-1, 1] against
/// rounding overshoot. Zero-norm inputs are an explicit error, never a
/// silent zero.
pub fn cosine_similarity(x: &Embedding, y: &Embedding) -> Result<f64> {
    check_dims(x, y)?;
    let nx = kernel::dot_f64(x.values(), x.values());
    let ny = kernel::dot_f64(y.values(), y.values());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot = kernel::dot_f64(x.values(), y.values());
    // sqrt(nx * ny) rather than sqrt(nx) * sqrt(ny): for x == y the
    // denominator then equals the numerator bit-exactly and self-similarity
    // is 1.0, not 1.0 minus an ULP.
    Ok((dot / (nx * ny).sqrt()).clamp(-1.0, 1.0))
}

/// Squared Euclidean distance; zero exactly when the inputs are
/// componentwise equal.
pub fn squared_l2_distance(x: &Embedding, y: &Embedding) -> Result<f64> {
    check_dims(x, y)?;
    let mut acc = 0.0;
    for (a, b) in x.values().iter().zip(y.values()) {
        let d = a - b;
        acc += d * d;
    }
    Ok(acc)
}

/// Scales an embedding to unit norm. Rejects zero-norm input.
pub fn l2_normalize(x: &Embedding) -> Result<Embedding> {
    let norm = x.l2_norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Embedding::new(x.values().iter().map(|v| v / norm).collect())
}
