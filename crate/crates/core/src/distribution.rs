//! Points on the probability simplex.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

/// Sum tolerance for vectors coming from outside the crate (files, CLI).
pub const USER_SUM_TOL: f64 = 1e-9;
/// Sum tolerance for vectors built by estimators and samplers.
pub const INTERNAL_SUM_TOL: f64 = 1e-12;
/// Negative entries at or above `-CLAMP_TOL` are floating-point noise and clamp to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// A probability vector over `k >= 2` categories.
///
/// Used for the true input distribution, the empirical output histogram and
/// every valid estimate. Entries are nonnegative and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates user-supplied probabilities (sum tolerance 1e-9).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, USER_SUM_TOL)
    }

    /// Validates an internally computed vector (sum tolerance 1e-12).
    pub fn from_internal(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, INTERNAL_SUM_TOL)
    }

    /// Clamps tiny negatives, checks the sum against `tol` and renormalizes.
    pub fn with_tolerance(mut probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::BadLength(probs.len()));
        }
        for (index, v) in probs.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if *v < 0.0 {
                if *v < -CLAMP_TOL {
                    return Err(Error::NegativeEntry { index, value: *v });
                }
                *v = 0.0;
            }
        }
        let sum = numeric::sum(&probs);
        if !((sum - 1.0).abs() <= tol) {
            return Err(Error::BadSum { sum });
        }
        if sum != 1.0 {
            probs.iter_mut().for_each(|v| *v /= sum);
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::BadLength(k));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    /// Point mass on `index`.
    pub fn point_mass(k: usize, index: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::BadLength(k));
        }
        if index >= k {
            return Err(Error::CategoryOutOfRange { value: index, k });
        }
        let mut probs = vec![0.0; k];
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    /// Normalizes nonnegative counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::BadLength(counts.len()));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::ZeroTotal);
        }
        let total = total as f64;
        Self::from_internal(counts.iter().map(|&c| c as f64 / total).collect())
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.probs.iter()
    }

    /// Applies `out[perm[i]] = self[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                actual: perm.len(),
            });
        }
        let mut out = vec![0.0; self.k()];
        for (i, &j) in perm.iter().enumerate() {
            out[j] = self.probs[i];
        }
        Ok(Self { probs: out })
    }
}

/// Checks a user vector and returns it as a [`Distribution`].
pub fn validate_distribution(v: &[f64]) -> Result<Distribution> {
    Distribution::new(v.to_vec())
}

impl Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}
