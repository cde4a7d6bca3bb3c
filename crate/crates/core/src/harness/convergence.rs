use serde::Serialize;

use crate::distribution::Distribution;
use crate::error::Result;
use crate::estimators::{estimate_mle, IbuState};
use crate::mechanism::{empirical_histogram, sample_dataset};
use crate::params::RRParams;
use crate::seed::Seed;

/// Slack allowed on increases of the recorded error after [`BURN_IN`].
pub const MONOTONE_SLACK: f64 = 1e-12;
pub const BURN_IN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub t: usize,
    /// `||theta_ibu(t) - theta_mle||_2^2`
    pub sq_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSeries {
    pub points: Vec<ConvergencePoint>,
    /// Checkpoints after burn-in where the error rose by more than the slack.
    pub monotone_violations: Vec<usize>,
}

impl ConvergenceSeries {
    /// Recorded error at iteration `t`, if `t` is a checkpoint.
    pub fn at(&self, t: usize) -> Option<f64> {
        self.points.iter().find(|p| p.t == t).map(|p| p.sq_error)
    }

    /// First checkpoint with error below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.points
            .iter()
            .find(|p| p.sq_error < threshold)
            .map(|p| p.t)
    }
}

/// Tracks the squared distance between IBU iterates and the exact MLE.
///
/// Records `t = 0`, every multiple of `checkpoint_stride`, and `max_iters`.
pub fn run_ibu_convergence(
    phi: &Distribution,
    params: &RRParams,
    max_iters: usize,
    checkpoint_stride: usize,
) -> Result<ConvergenceSeries> {
    let max_iters = max_iters.max(1);
    let stride = checkpoint_stride.max(1);
    let (mle, _) = estimate_mle(phi, params)?;
    let sq_error = |theta: &Distribution| -> f64 {
        theta
            .iter()
            .zip(mle.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };
    let mut state = IbuState::new(phi.k(), max_iters)?;
    let mut points = vec![ConvergencePoint {
        t: 0,
        sq_error: sq_error(&state.theta),
    }];
    while state.t < max_iters {
        state.step(phi, params)?;
        if state.t % stride == 0 || state.t == max_iters {
            points.push(ConvergencePoint {
                t: state.t,
                sq_error: sq_error(&state.theta),
            });
        }
    }
    let monotone_violations = points
        .windows(2)
        .filter(|w| w[0].t >= BURN_IN && w[1].sq_error > w[0].sq_error + MONOTONE_SLACK)
        .map(|w| w[1].t)
        .collect();
    Ok(ConvergenceSeries {
        points,
        monotone_violations,
    })
}

/// Samples `n` reports from `theta` and returns their histogram.
pub fn sampled_histogram(
    theta: &Distribution,
    n: usize,
    params: &RRParams,
    seed: Seed,
) -> Result<Distribution> {
    let (_, reports) = sample_dataset(theta, n, params, seed)?;
    empirical_histogram(&reports, theta.k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::compound_distribution;
    use crate::params::params_from_epsilon;

    #[test]
    fn uniform_compound_has_zero_error() {
        let rr = params_from_epsilon(6, 1.0).unwrap();
        let phi = compound_distribution(&Distribution::uniform(6).unwrap(), &rr).unwrap();
        let series = run_ibu_convergence(&phi, &rr, 20, 5).unwrap();
        assert!(series.at(0).unwrap() < 1e-30);
        let ts: Vec<usize> = series.points.iter().map(|p| p.t).collect();
        assert_eq!(ts, vec![0, 5, 10, 15, 20]);
    }

    #[test]
    fn error_shrinks() {
        let rr = params_from_epsilon(20, 1.0).unwrap();
        let theta =
            crate::harness::zipf_distribution(crate::harness::ZipfSpec { k: 20, s: 1.3 }).unwrap();
        let phi = sampled_histogram(&theta, 2000, &rr, Seed::new(1, 1)).unwrap();
        let series = run_ibu_convergence(&phi, &rr, 5000, 100).unwrap();
        assert!(series.at(5000).unwrap() < series.at(100).unwrap());
        assert!(series.first_below(1.0).is_some());
    }
}
