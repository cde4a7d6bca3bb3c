//! Randomized-response channel parameters.

use serde::Serialize;

use crate::error::{Error, Result};

/// Parameters of k-ary randomized response.
///
/// A report equals the true category with probability `p` and each of the
/// other `k - 1` categories with probability `q = (1 - p) / (k - 1)`. The
/// privacy budget is `epsilon = ln(p / q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RRParams {
    k: usize,
    epsilon: f64,
    p: f64,
    q: f64,
    gap: f64,
}

impl RRParams {
    /// Derives `p` and `q` from the privacy budget.
    pub fn from_epsilon(k: usize, epsilon: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::BadLength(k));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::BadEpsilon(epsilon));
        }
        // p = e^eps / (e^eps + k - 1), written in terms of e^-eps so large
        // budgets neither overflow nor lose q to cancellation.
        let damp = (-epsilon).exp();
        let denom = 1.0 + (k - 1) as f64 * damp;
        let p = 1.0 / denom;
        let q = damp / denom;
        let gap = -(-epsilon).exp_m1() / denom;
        Ok(Self {
            k,
            epsilon,
            p,
            q,
            gap,
        })
    }

    /// Direct parameterization by the truth probability. `p = 1` is the
    /// noiseless channel (`q = 0`, infinite epsilon).
    pub fn from_p(k: usize, p: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::BadLength(k));
        }
        let q = (1.0 - p) / (k - 1) as f64;
        if !(p.is_finite() && p <= 1.0 && p > q) {
            return Err(Error::BadTruthProbability { p, k });
        }
        Ok(Self {
            k,
            epsilon: (p / q).ln(),
            p,
            q,
            gap: p - q,
        })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    /// `p - q`, computed without cancellation for small epsilon.
    #[inline]
    pub fn p_minus_q(&self) -> f64 {
        self.gap
    }

    pub(crate) fn check_dim(&self, actual: usize) -> Result<()> {
        if actual != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                actual,
            });
        }
        Ok(())
    }
}

/// Channel parameters for budget `epsilon` over `k` categories.
pub fn params_from_epsilon(k: usize, epsilon: f64) -> Result<RRParams> {
    RRParams::from_epsilon(k, epsilon)
}
