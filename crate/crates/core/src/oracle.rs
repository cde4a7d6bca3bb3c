//! Brute-force ground truth for small domains (`k <= 6`).
//!
//! Nothing here calls the estimators' internals. The likelihood is evaluated
//! through an explicit channel matrix, a lattice over the simplex is scanned
//! exhaustively and the best lattice point is polished by pairwise coordinate
//! moves with exact line search. The polish stops on a Frank-Wolfe duality
//! gap, which bounds the distance of the objective from its optimum.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::estimators::estimate_mle;
use crate::params::RRParams;
use crate::seed::Seed;

pub const ORACLE_MAX_K: usize = 6;
pub const LATTICE_GUARD: u128 = 10_000_000;
/// Duality-gap target of the likelihood polish.
pub const GAP_TOL: f64 = 1e-13;

/// Simplex lattice `{a / resolution : a in N^k, sum a = resolution}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub k: usize,
    pub resolution: usize,
}

fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

impl GridSpec {
    pub fn new(k: usize, resolution: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::BadLength(k));
        }
        if k > ORACLE_MAX_K {
            return Err(Error::OracleDimension {
                k,
                max: ORACLE_MAX_K,
            });
        }
        let grid = Self { k, resolution };
        let points = grid.points();
        if resolution == 0 || points > LATTICE_GUARD {
            return Err(Error::GridTooLarge {
                k,
                resolution,
                points,
                limit: LATTICE_GUARD,
            });
        }
        Ok(grid)
    }

    /// Finest grid with at most `budget` points.
    pub fn with_budget(k: usize, budget: u128) -> Result<Self> {
        let mut resolution = 1;
        while (Self {
            k,
            resolution: resolution + 1,
        })
        .points()
            <= budget.min(LATTICE_GUARD)
        {
            resolution += 1;
        }
        Self::new(k, resolution)
    }

    /// `C(resolution + k - 1, k - 1)`.
    pub fn points(&self) -> u128 {
        binomial((self.resolution + self.k - 1) as u128, (self.k - 1) as u128)
    }
}

/// Calls `visit` on every vector of `parts` nonnegative integers summing to `total`,
/// in decreasing lexicographic order.
fn for_each_composition(parts: usize, total: usize, mut visit: impl FnMut(&[usize])) {
    let mut a = vec![0; parts];
    a[0] = total;
    loop {
        visit(&a);
        let tail = a[parts - 1];
        a[parts - 1] = 0;
        let Some(i) = (0..parts - 1).rev().find(|&i| a[i] > 0) else {
            break;
        };
        a[i] -= 1;
        a[i + 1] = tail + 1;
    }
}

/// Scans the lattice in parallel and returns the minimizer of `cost` with
/// deterministic tie-breaking (cost, then lexicographic point).
fn lattice_argmin<F>(grid: &GridSpec, cost: F) -> (Vec<usize>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let r = grid.resolution;
    let h = 1.0 / r as f64;
    (0..=r)
        .into_par_iter()
        .map(|first| {
            let mut best: Option<(Vec<usize>, f64)> = None;
            let mut point = vec![0.0; grid.k];
            let mut full = vec![0; grid.k];
            full[0] = first;
            for_each_composition(grid.k - 1, r - first, |rest| {
                full[1..].copy_from_slice(rest);
                for (x, &a) in point.iter_mut().zip(&full) {
                    *x = a as f64 * h;
                }
                let c = cost(&point);
                if best
                    .as_ref()
                    .map_or(true, |(b, bc)| better(c, &full, *bc, b))
                {
                    best = Some((full.clone(), c));
                }
            });
            best.expect("every slice has at least one point")
        })
        .reduce_with(|x, y| if better(y.1, &y.0, x.1, &x.0) { y } else { x })
        .expect("lattice is non-empty")
}

fn better(c: f64, a: &[usize], best_c: f64, best: &[usize]) -> bool {
    match c.total_cmp(&best_c) {
        Ordering::Less => true,
        Ordering::Equal => a < best,
        Ordering::Greater => false,
    }
}

/// RR channel as an explicit `k x k` table.
fn channel_rows(params: &RRParams) -> Vec<Vec<f64>> {
    let k = params.k();
    (0..k)
        .map(|x| {
            (0..k)
                .map(|y| if x == y { params.p() } else { params.q() })
                .collect()
        })
        .collect()
}

/// Per-sample log-likelihood `sum_y phi_y ln (theta^T C)_y`.
fn log_likelihood(theta: &[f64], phi: &[f64], channel: &[Vec<f64>]) -> f64 {
    let out = push_forward(theta, channel);
    phi.iter()
        .zip(&out)
        .filter(|(f, _)| **f > 0.0)
        .map(|(f, m)| f * m.ln())
        .sum()
}

fn push_forward(theta: &[f64], channel: &[Vec<f64>]) -> Vec<f64> {
    let k_out = channel[0].len();
    let mut out = vec![0.0; k_out];
    for (t, row) in theta.iter().zip(channel) {
        for (o, c) in out.iter_mut().zip(row) {
            *o += t * c;
        }
    }
    out
}

fn gradient(theta: &[f64], phi: &[f64], channel: &[Vec<f64>]) -> Vec<f64> {
    let out = push_forward(theta, channel);
    channel
        .iter()
        .map(|row| {
            row.iter()
                .zip(phi)
                .zip(&out)
                .filter(|((_, f), _)| **f > 0.0)
                .map(|((c, f), m)| f * c / m)
                .sum()
        })
        .collect()
}

/// Certified brute-force solution.
#[derive(Debug, Clone, Serialize)]
pub struct OracleSolution {
    pub theta: Distribution,
    /// Objective at `theta` (per-sample NLL for the likelihood oracle,
    /// squared distance for the projection oracle).
    pub objective: f64,
    /// Frank-Wolfe gap at `theta`; the optimum is at most this much better.
    pub gap: f64,
    pub lattice_point: Vec<usize>,
    pub steps: usize,
}

fn check_oracle_dims(k: usize, grid: &GridSpec) -> Result<()> {
    if k > ORACLE_MAX_K {
        return Err(Error::OracleDimension {
            k,
            max: ORACLE_MAX_K,
        });
    }
    if grid.k != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: grid.k,
        });
    }
    Ok(())
}

/// Maximizes the RR likelihood by lattice scan plus pairwise ascent.
pub fn mle_bruteforce(
    phi: &Distribution,
    params: &RRParams,
    grid: &GridSpec,
    refine_steps: usize,
) -> Result<OracleSolution> {
    check_oracle_dims(phi.k(), grid)?;
    params.check_dim(phi.k())?;
    let channel = channel_rows(params);
    let f = phi.probs();
    let (lattice_point, _) = lattice_argmin(grid, |t| -log_likelihood(t, f, &channel));
    let r = grid.resolution as f64;
    let mut theta: Vec<f64> = lattice_point.iter().map(|&a| a as f64 / r).collect();

    let mut steps = 0;
    let mut gap = f64::INFINITY;
    while steps < refine_steps {
        let grad = gradient(&theta, f, &channel);
        let dot: f64 = theta.iter().zip(&grad).map(|(t, g)| t * g).sum();
        let (up, &gmax) = grad
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        gap = (gmax - dot).max(0.0);
        if gap <= GAP_TOL {
            break;
        }
        let Some((down, _)) = grad
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != up && theta[*j] > 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
        else {
            break;
        };
        let delta = pair_line_search(&theta, f, &channel, up, down);
        if delta <= 0.0 {
            break;
        }
        theta[up] += delta;
        theta[down] -= delta;
        if theta[down] < 1e-300 {
            theta[down] = 0.0;
        }
        steps += 1;
    }
    let objective = -log_likelihood(&theta, f, &channel);
    Ok(OracleSolution {
        theta: Distribution::new(theta)?,
        objective,
        gap,
        lattice_point,
        steps,
    })
}

/// Exact maximizer over `delta in [0, theta[down]]` of the likelihood after
/// moving `delta` mass from `down` to `up`. The derivative is decreasing, so
/// bisection on its sign is exact to machine precision.
fn pair_line_search(
    theta: &[f64],
    phi: &[f64],
    channel: &[Vec<f64>],
    up: usize,
    down: usize,
) -> f64 {
    let out = push_forward(theta, channel);
    let diff: Vec<f64> = channel[up]
        .iter()
        .zip(&channel[down])
        .map(|(a, b)| a - b)
        .collect();
    let slope = |delta: f64| -> f64 {
        phi.iter()
            .zip(&out)
            .zip(&diff)
            .filter(|((f, _), _)| **f > 0.0)
            .map(|((f, m), d)| f * d / (m + delta * d))
            .sum()
    };
    let hi_bound = theta[down];
    if slope(hi_bound) >= 0.0 {
        return hi_bound;
    }
    let (mut lo, mut hi) = (0.0, hi_bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Lattice points whose NLL is within `tol` of the best lattice NLL.
pub fn near_optimal_lattice_points(
    phi: &Distribution,
    params: &RRParams,
    grid: &GridSpec,
    tol: f64,
) -> Result<Vec<Vec<usize>>> {
    check_oracle_dims(phi.k(), grid)?;
    let channel = channel_rows(params);
    let f = phi.probs();
    let nll = |t: &[f64]| -log_likelihood(t, f, &channel);
    let (_, best) = lattice_argmin(grid, nll);
    let r = grid.resolution;
    let h = 1.0 / r as f64;
    let mut found: Vec<Vec<usize>> = (0..=r)
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut hits = Vec::new();
            let mut full = vec![0; grid.k];
            let mut point = vec![0.0; grid.k];
            full[0] = first;
            for_each_composition(grid.k - 1, r - first, |rest| {
                full[1..].copy_from_slice(rest);
                for (x, &a) in point.iter_mut().zip(&full) {
                    *x = a as f64 * h;
                }
                if nll(&point) <= best + tol {
                    hits.push(full.clone());
                }
            });
            hits
        })
        .collect();
    found.sort();
    Ok(found)
}

/// Largest L-infinity distance (in lattice steps) between two points of the set.
pub fn lattice_diameter(points: &[Vec<usize>]) -> usize {
    let mut diameter = 0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = a
                .iter()
                .zip(b)
                .map(|(x, y)| x.abs_diff(*y))
                .max()
                .unwrap_or(0);
            diameter = diameter.max(d);
        }
    }
    diameter
}

/// Euclidean projection onto the simplex by lattice scan plus pairwise descent.
pub fn projection_bruteforce(v: &[f64], grid: &GridSpec) -> Result<OracleSolution> {
    check_oracle_dims(v.len(), grid)?;
    let dist2 = |t: &[f64]| -> f64 { t.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum() };
    let (lattice_point, _) = lattice_argmin(grid, dist2);
    let r = grid.resolution as f64;
    let mut theta: Vec<f64> = lattice_point.iter().map(|&a| a as f64 / r).collect();
    let mut steps = 0;
    let mut gap = f64::INFINITY;
    for _ in 0..100_000 {
        let grad: Vec<f64> = theta.iter().zip(v).map(|(t, x)| 2.0 * (t - x)).collect();
        let dot: f64 = theta.iter().zip(&grad).map(|(t, g)| t * g).sum();
        let (up, &gmin) = grad
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        gap = (dot - gmin).max(0.0);
        if gap <= 1e-15 {
            break;
        }
        let Some((down, &gdown)) = grad
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != up && theta[*j] > 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1))
        else {
            break;
        };
        let delta = ((gdown - gmin) / 4.0).min(theta[down]);
        if delta <= 0.0 {
            break;
        }
        theta[up] += delta;
        theta[down] -= delta;
        steps += 1;
    }
    let objective = dist2(&theta);
    Ok(OracleSolution {
        theta: Distribution::new(theta)?,
        objective,
        gap,
        lattice_point,
        steps,
    })
}

/// One oracle-agreement instance.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementCase {
    pub k: usize,
    pub epsilon: f64,
    pub phi: Vec<f64>,
    pub linf: f64,
    /// `NLL(estimate_mle) - NLL(oracle)`; should not exceed 1e-9.
    pub nll_excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub trials: usize,
    pub max_linf: f64,
    pub max_nll_excess: f64,
    pub failures: Vec<AgreementCase>,
}

impl AgreementReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub const AGREEMENT_LINF_TOL: f64 = 1e-4;
pub const AGREEMENT_NLL_TOL: f64 = 1e-9;

/// Draws a random observed histogram for the agreement check. Half of the
/// draws are sparse, small-sample histograms that push the likelihood
/// maximizer onto the simplex boundary.
pub fn random_instance(seed: Seed, max_k: usize) -> Result<(Distribution, RRParams)> {
    let mut rng = seed.rng();
    let k = rng.random_range(2..=max_k.clamp(2, ORACLE_MAX_K));
    let epsilon = rng.random_range(0.5..=6.0);
    let params = RRParams::from_epsilon(k, epsilon)?;
    let phi = if rng.random_bool(0.5) {
        let mut w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        for x in w.iter_mut() {
            if rng.random_bool(0.3) {
                *x = 0.0;
            }
        }
        if w.iter().all(|&x| x == 0.0) {
            w[rng.random_range(0..k)] = 1.0;
        }
        let total: f64 = w.iter().sum();
        Distribution::new(w.into_iter().map(|x| x / total).collect())?
    } else {
        let n = rng.random_range(5..=500);
        let mut theta: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let zeros = rng.random_range(0..k);
        for x in theta.iter_mut().take(zeros) {
            *x = 0.0;
        }
        let total: f64 = theta.iter().sum();
        let theta = Distribution::new(theta.into_iter().map(|x| x / total).collect())?;
        let (_, ys) = crate::mechanism::sample_dataset(&theta, n, &params, seed.derive(1))?;
        crate::mechanism::empirical_histogram(&ys, k)?
    };
    Ok((phi, params))
}

/// Compares [`estimate_mle`] to [`mle_bruteforce`] on `trials` random instances.
pub fn verify_agreement(trials: usize, master_seed: u64, max_k: usize) -> Result<AgreementReport> {
    let cases: Vec<AgreementCase> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<AgreementCase> {
            let (phi, params) = random_instance(Seed::new(master_seed, t as u64), max_k)?;
            let grid = GridSpec::with_budget(phi.k(), 20_000)?;
            let oracle = mle_bruteforce(&phi, &params, &grid, 200_000)?;
            let (theta, _) = estimate_mle(&phi, &params)?;
            let channel = channel_rows(&params);
            let nll_mle = -log_likelihood(theta.probs(), phi.probs(), &channel);
            Ok(AgreementCase {
                k: phi.k(),
                epsilon: params.epsilon(),
                linf: crate::numeric::linf(theta.probs(), oracle.theta.probs()),
                nll_excess: nll_mle - oracle.objective,
                phi: phi.into_vec(),
            })
        })
        .collect::<Result<_>>()?;
    let max_linf = cases.iter().map(|c| c.linf).fold(0.0, f64::max);
    let max_nll_excess = cases.iter().map(|c| c.nll_excess).fold(f64::MIN, f64::max);
    let failures = cases
        .into_iter()
        .filter(|c| !(c.linf <= AGREEMENT_LINF_TOL && c.nll_excess <= AGREEMENT_NLL_TOL))
        .collect();
    Ok(AgreementReport {
        trials,
        max_linf,
        max_nll_excess,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::compound_distribution;
    use crate::numeric::linf;
    use crate::params::params_from_epsilon;

    #[test]
    fn compositions_are_complete() {
        let mut seen = Vec::new();
        for_each_composition(3, 4, |a| seen.push(a.to_vec()));
        assert_eq!(seen.len(), 15);
        assert!(seen.iter().all(|a| a.iter().sum::<usize>() == 4));
        let mut sorted = seen.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 15);
        let mut single = Vec::new();
        for_each_composition(1, 3, |a| single.push(a.to_vec()));
        assert_eq!(single, vec![vec![3]]);
    }

    #[test]
    fn grid_guards() {
        assert_eq!(GridSpec::new(3, 10).unwrap().points(), 66);
        assert!(matches!(
            GridSpec::new(7, 10),
            Err(Error::OracleDimension { k: 7, .. })
        ));
        assert!(matches!(
            GridSpec::new(6, 200),
            Err(Error::GridTooLarge { .. })
        ));
        let g = GridSpec::with_budget(6, 20_000).unwrap();
        assert!(g.points() <= 20_000);
        assert!(
            GridSpec {
                k: 6,
                resolution: g.resolution + 1
            }
            .points()
                > 20_000
        );
    }

    #[test]
    fn recovers_interior_theta_from_exact_compound() {
        let rr = params_from_epsilon(4, 1.5).unwrap();
        let theta = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let phi = compound_distribution(&theta, &rr).unwrap();
        let sol = mle_bruteforce(&phi, &rr, &GridSpec::new(4, 40).unwrap(), 100_000).unwrap();
        assert!(linf(sol.theta.probs(), theta.probs()) < 1e-4);
        assert!(sol.gap <= GAP_TOL);
    }

    #[test]
    fn hand_fixture() {
        let rr = params_from_epsilon(3, 4f64.ln()).unwrap();
        let phi = Distribution::new(vec![0.1, 0.3, 0.6]).unwrap();
        let sol = mle_bruteforce(&phi, &rr, &GridSpec::new(3, 100).unwrap(), 100_000).unwrap();
        assert!(linf(sol.theta.probs(), &[0.0, 2.0 / 9.0, 7.0 / 9.0]) < 1e-4);
    }

    #[test]
    fn uniform_phi() {
        let rr = params_from_epsilon(5, 2.0).unwrap();
        let u = Distribution::uniform(5).unwrap();
        let sol = mle_bruteforce(&u, &rr, &GridSpec::new(5, 20).unwrap(), 100_000).unwrap();
        assert!(linf(sol.theta.probs(), u.probs()) < 1.0 / 20.0);
    }

    #[test]
    fn projection_examples() {
        let grid = GridSpec::new(3, 60).unwrap();
        let inside = projection_bruteforce(&[0.2, 0.3, 0.5], &grid).unwrap();
        assert!(linf(inside.theta.probs(), &[0.2, 0.3, 0.5]) < 1e-12);
        let out = projection_bruteforce(&[-2.0 / 15.0, 4.0 / 15.0, 13.0 / 15.0], &grid).unwrap();
        assert!(linf(out.theta.probs(), &[0.0, 0.2, 0.8]) < 1e-4);
        // Vertex plus an outward normal step.
        let vertex = projection_bruteforce(&[1.3, -0.15, -0.15], &grid).unwrap();
        assert!(linf(vertex.theta.probs(), &[1.0, 0.0, 0.0]) < 1e-12);
    }

    #[test]
    fn oracle_rejects_large_k() {
        let rr = params_from_epsilon(7, 1.0).unwrap();
        let u = Distribution::uniform(7).unwrap();
        let grid = GridSpec {
            k: 7,
            resolution: 2,
        };
        assert!(matches!(
            mle_bruteforce(&u, &rr, &grid, 10),
            Err(Error::OracleDimension { .. })
        ));
    }

    #[test]
    fn near_optimal_set_is_small() {
        let rr = params_from_epsilon(3, 1.0).unwrap();
        let phi = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let grid = GridSpec::new(3, 50).unwrap();
        let pts = near_optimal_lattice_points(&phi, &rr, &grid, 1e-8).unwrap();
        assert!(!pts.is_empty());
        assert!(lattice_diameter(&pts) <= 2);
    }

    #[test]
    fn small_agreement_run() {
        let report = verify_agreement(40, 11, 6).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
    }
}
