//! Closed-form maximum-likelihood estimator for randomized response.
//!
//! The likelihood maximizer zeroes the `n` smallest entries of the observed
//! histogram and rescales the rest affinely:
//!
//! ```text
//! theta_i = phi_i / lambda - q / (p - q),   lambda = (p - q) * S / (1 - n q)
//! ```
//!
//! where `S` is the mass of the kept entries. `n` is the smallest count for
//! which the boundary value
//!
//! ```text
//! g(n) = (1 - n q) * e_{n+1} - q * sum_{i > n} e_i
//! ```
//!
//! is nonnegative (`e` is `phi` sorted ascending, one-based). A single scan
//! over the sorted entries finds it, so the whole estimator is `O(k log k)`.

use serde::Serialize;

use crate::distribution::Distribution;
use crate::error::Result;
use crate::estimators::inversion::finish;
use crate::numeric::CompensatedSum;
use crate::params::RRParams;

/// Diagnostics of one [`estimate_mle`] run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleTrace {
    /// Zero-based argsort of `phi`, ascending and stable.
    #[serde(skip)]
    pub sigma: Vec<usize>,
    /// Number of categories set to zero.
    pub n_zeros: usize,
    /// Smallest kept value of `phi`; entries below it are zeroed.
    pub tau_star: f64,
    /// Scale applied to the kept entries, `(1 - n q) / S`.
    pub c_tau: f64,
    /// Lagrange multiplier `(p - q) S / (1 - n q)`.
    pub lambda: f64,
    /// `g(n_zeros)`, nonnegative.
    pub g_at_n: f64,
}

/// Stable ascending argsort.
pub(crate) fn argsort(values: &[f64]) -> Vec<usize> {
    let mut sigma: Vec<usize> = (0..values.len()).collect();
    // Index tie-break gives the stable order with an unstable sort.
    sigma.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    sigma
}

/// Computes the unique maximum-likelihood estimate and its trace.
pub fn estimate_mle(phi: &Distribution, params: &RRParams) -> Result<(Distribution, MleTrace)> {
    params.check_dim(phi.k())?;
    let k = phi.k();
    let (q, d) = (params.q(), params.p_minus_q());
    let f = phi.probs();
    let sigma = argsort(f);

    // s is the mass of sigma[i..].
    let mut s = CompensatedSum::default();
    for &j in &sigma {
        s.add(f[j]);
    }
    let mut i = 0;
    while i < k && q * s.value() > f[sigma[i]] * (1.0 - i as f64 * q) {
        s.add(-f[sigma[i]]);
        i += 1;
    }
    // g(k-1) = (p - q) * max(phi) > 0, so the scan stops before k.
    debug_assert!(i < k);
    let n = i.min(k - 1);
    let s = s.value();
    let keep = 1.0 - n as f64 * q;

    let mut theta = vec![0.0; k];
    for &j in &sigma[n..] {
        theta[j] = (f[j] * keep - s * q) / (s * d);
    }
    let trace = MleTrace {
        n_zeros: n,
        tau_star: f[sigma[n]],
        c_tau: keep / s,
        lambda: d * s / keep,
        g_at_n: keep * f[sigma[n]] - q * s,
        sigma,
    };
    Ok((finish(theta)?, trace))
}

/// `g(n)` over the ascending-sorted entries of `phi`, for `n < k`.
pub fn boundary_g(phi: &Distribution, params: &RRParams, n: usize) -> f64 {
    let mut sorted = phi.probs().to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let tail = crate::numeric::sum(&sorted[n..]);
    (1.0 - n as f64 * params.q()) * sorted[n] - params.q() * tail
}

/// Candidate with zeros forced at the `n` smallest entries of `phi`.
///
/// Kept entries follow the Lagrange form and may be negative when `n` is
/// smaller than the maximum-likelihood zero count.
pub fn zero_count_candidate(phi: &Distribution, params: &RRParams, n: usize) -> Vec<f64> {
    let (q, d) = (params.q(), params.p_minus_q());
    let f = phi.probs();
    let sigma = argsort(f);
    let s: f64 = crate::numeric::sum(&sigma[n..].iter().map(|&j| f[j]).collect::<Vec<_>>());
    let lambda = d * s / (1.0 - n as f64 * q);
    let mut theta = vec![0.0; f.len()];
    for &j in &sigma[n..] {
        theta[j] = f[j] / lambda - q / d;
    }
    theta
}
