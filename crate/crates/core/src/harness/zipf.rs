use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{Error, Result};

/// Rank-frequency law `theta_i ∝ i^-s` over ranks `1..=k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfSpec {
    pub k: usize,
    pub s: f64,
}

/// Normalized Zipf weights; `s = 0` is uniform. Entries are non-increasing.
pub fn zipf_distribution(spec: ZipfSpec) -> Result<Distribution> {
    if spec.k < 2 {
        return Err(Error::BadLength(spec.k));
    }
    if !(spec.s >= 0.0 && spec.s.is_finite()) {
        return Err(Error::Config(format!(
            "zipf exponent must be >= 0, got {}",
            spec.s
        )));
    }
    let weights: Vec<f64> = (1..=spec.k).map(|i| (i as f64).powf(-spec.s)).collect();
    let total = crate::numeric::sum(&weights);
    Distribution::from_internal(weights.into_iter().map(|w| w / total).collect())
}
