//! Error and fit measures.

use serde::Serialize;

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::params::RRParams;

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            actual: a.len(),
        });
    }
    Ok(())
}

/// Squared L2 error `sum_i (estimate_i - truth_i)^2`. Accepts signed estimates.
pub fn mse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    check_len(estimate, truth)?;
    let mut acc = CompensatedSum::default();
    for (a, b) in estimate.iter().zip(truth) {
        acc.add((a - b) * (a - b));
    }
    Ok(acc.value())
}

/// Total variation distance, half the L1 distance.
pub fn total_variation(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    let mut acc = CompensatedSum::default();
    for (x, y) in a.iter().zip(b) {
        acc.add((x - y).abs());
    }
    Ok(0.5 * acc.value())
}

/// `KL(phi || model)` in nats, with `0 log 0 = 0`.
pub fn kl_divergence(phi: &Distribution, model: &Distribution) -> Result<f64> {
    check_len(phi.probs(), model.probs())?;
    let mut acc = CompensatedSum::default();
    for (index, (&f, &m)) in phi.iter().zip(model.iter()).enumerate() {
        if f > 0.0 {
            if m <= 0.0 {
                return Err(Error::InfiniteDivergence { index });
            }
            acc.add(f * (f / m).ln());
        }
    }
    Ok(acc.value().max(0.0))
}

/// Per-sample negative log-likelihood `-sum_y phi_y ln(q + (p - q) theta_y)`.
///
/// Multiply by the number of reports for the total. Terms with `phi_y = 0`
/// contribute nothing; a nonpositive model probability where `phi_y > 0`
/// gives `+inf` (only possible for signed estimates).
pub fn neg_log_likelihood(theta: &[f64], phi: &Distribution, params: &RRParams) -> Result<f64> {
    params.check_dim(theta.len())?;
    params.check_dim(phi.k())?;
    let (q, d) = (params.q(), params.p_minus_q());
    let mut acc = CompensatedSum::default();
    for (&t, &f) in theta.iter().zip(phi.iter()) {
        if f > 0.0 {
            let m = q + d * t;
            if m <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc.add(-f * m.ln());
        }
    }
    Ok(acc.value())
}

/// Total negative log-likelihood of `n` reports with histogram `phi`.
pub fn total_neg_log_likelihood(
    theta: &[f64],
    phi: &Distribution,
    n: u64,
    params: &RRParams,
) -> Result<f64> {
    Ok(n as f64 * neg_log_likelihood(theta, phi, params)?)
}

/// Per-entry variance of linear inversion in the published closed form:
/// `q(1-q)/(N(p-q)) + theta_i (p-q)(1-2q-(p-q)) / (N(p-q))`.
pub fn inv_variance_theoretical(theta_i: f64, n: u64, params: &RRParams) -> f64 {
    let (q, d) = (params.q(), params.p_minus_q());
    let n = n as f64;
    q * (1.0 - q) / (n * d) + theta_i * d * (1.0 - 2.0 * q - d) / (n * d)
}

/// Exact per-entry variance of linear inversion from the multinomial law of
/// the histogram: `m (1 - m) / (N (p - q)^2)` with `m = q + (p - q) theta_i`.
pub fn inv_variance_multinomial(theta_i: f64, n: u64, params: &RRParams) -> f64 {
    let (q, d) = (params.q(), params.p_minus_q());
    let m = q + d * theta_i;
    m * (1.0 - m) / (n as f64 * d * d)
}

/// Metrics of one estimate against the truth and the observed histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricRow {
    pub mse: f64,
    pub tv: f64,
    pub nll_per_sample: f64,
    /// `KL(phi || M(estimate))`; infinite when the estimate's model has a zero where `phi` does not.
    pub kl_phi_vs_model: f64,
}

impl MetricRow {
    pub fn compute(
        estimate: &[f64],
        truth: &Distribution,
        phi: &Distribution,
        params: &RRParams,
    ) -> Result<Self> {
        let nll = neg_log_likelihood(estimate, phi, params)?;
        let entropy: f64 = phi.iter().filter(|&&f| f > 0.0).map(|&f| -f * f.ln()).sum();
        Ok(Self {
            mse: mse(estimate, truth.probs())?,
            tv: total_variation(estimate, truth.probs())?,
            nll_per_sample: nll,
            kl_phi_vs_model: (nll - entropy).max(0.0),
        })
    }
}
