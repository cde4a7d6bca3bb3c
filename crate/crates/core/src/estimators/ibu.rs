//! Iterative Bayesian update (EM for the input distribution).

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::mechanism::ChannelMatrix;
use crate::numeric::{self, CompensatedSum};
use crate::params::RRParams;

/// Iteration budget used when none is given.
pub const DEFAULT_IBU_ITERS: usize = 40_000;

/// State of the RR-specialized iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IbuState {
    /// Completed iterations.
    pub t: usize,
    pub theta: Distribution,
    /// `sum_i phi_i / (q + (p - q) theta_i)` from the last step; zero before the first.
    pub s: f64,
    pub n_iters: usize,
}

impl IbuState {
    /// Starts from the uniform prior.
    pub fn new(k: usize, n_iters: usize) -> Result<Self> {
        Ok(Self {
            t: 0,
            theta: Distribution::uniform(k)?,
            s: 0.0,
            n_iters,
        })
    }

    /// One `O(k)` update. Returns the L-infinity size of the move.
    pub fn step(&mut self, phi: &Distribution, params: &RRParams) -> Result<f64> {
        params.check_dim(phi.k())?;
        let (q, d) = (params.q(), params.p_minus_q());
        let theta = self.theta.probs();
        let ratios: Vec<f64> = phi
            .iter()
            .zip(theta)
            .map(|(&f, &t)| if f == 0.0 { 0.0 } else { f / (q + d * t) })
            .collect();
        let mut s = CompensatedSum::default();
        for &z in &ratios {
            s.add(z);
        }
        let s = s.value();
        let next: Vec<f64> = theta
            .iter()
            .zip(&ratios)
            .map(|(&t, &z)| t * (q * s + d * z))
            .collect();
        let mass = numeric::sum(&next);
        let next = Distribution::from_internal(next.into_iter().map(|v| v / mass).collect())?;
        let moved = numeric::linf(next.probs(), theta);
        self.theta = next;
        self.s = s;
        self.t += 1;
        Ok(moved)
    }
}

/// Runs `n_iters` RR-specialized updates from the uniform prior.
///
/// With `early_stop_tol`, stops once an update moves no entry by more than
/// the tolerance.
pub fn estimate_ibu_rr(
    phi: &Distribution,
    params: &RRParams,
    n_iters: usize,
    early_stop_tol: Option<f64>,
) -> Result<(Distribution, IbuState)> {
    params.check_dim(phi.k())?;
    let mut state = IbuState::new(phi.k(), n_iters)?;
    while state.t < n_iters {
        let moved = state.step(phi, params)?;
        if early_stop_tol.is_some_and(|tol| moved < tol) {
            break;
        }
    }
    Ok((state.theta.clone(), state))
}

/// One update with an arbitrary channel:
/// `theta'_i = sum_j phi_j theta_i C_ij / sum_k theta_k C_kj`.
pub fn ibu_generic_step(
    theta: &[f64],
    phi: &Distribution,
    channel: &ChannelMatrix,
) -> Result<Vec<f64>> {
    if phi.k() != channel.k_out() {
        return Err(Error::DimensionMismatch {
            expected: channel.k_out(),
            actual: phi.k(),
        });
    }
    let denom = channel.push_forward(theta)?;
    let mut next = vec![0.0; channel.k_in()];
    for (i, (out, &t)) in next.iter_mut().zip(theta).enumerate() {
        let row = channel.row(i);
        let mut acc = CompensatedSum::default();
        for j in 0..channel.k_out() {
            if phi[j] > 0.0 {
                acc.add(phi[j] * t * row[j] / denom[j]);
            }
        }
        *out = acc.value();
    }
    Ok(next)
}

/// Runs `n_iters` generic updates from the uniform prior over `k_in` inputs.
pub fn estimate_ibu_generic(
    phi: &Distribution,
    channel: &ChannelMatrix,
    n_iters: usize,
) -> Result<Distribution> {
    let mut theta = Distribution::uniform(channel.k_in())?;
    for _ in 0..n_iters {
        let next = ibu_generic_step(theta.probs(), phi, channel)?;
        let mass = numeric::sum(&next);
        theta = Distribution::from_internal(next.into_iter().map(|v| v / mass).collect())?;
    }
    Ok(theta)
}
