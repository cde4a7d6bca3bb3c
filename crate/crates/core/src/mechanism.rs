//! The k-ary randomized-response channel.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;

use crate::dataset::Dataset;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::params::RRParams;
use crate::seed::Seed;

/// Largest `k` for which [`rr_channel`] materializes the `k x k` matrix.
pub const CHANNEL_GUARD: usize = 4096;

/// Randomizes one report.
///
/// Keeps `x` with probability `p - q`, otherwise draws uniformly from all `k`
/// categories (which may again be `x`). This is the same law as "keep with
/// probability `p`, else uniform over the others" and costs one real and one
/// integer draw regardless of `k`.
pub fn randomize<R: Rng + ?Sized>(x: usize, params: &RRParams, rng: &mut R) -> Result<usize> {
    let k = params.k();
    if x >= k {
        return Err(Error::CategoryOutOfRange { value: x, k });
    }
    Ok(randomize_in_range(x, params, rng))
}

#[inline]
fn randomize_in_range<R: Rng + ?Sized>(x: usize, params: &RRParams, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    if u < params.p_minus_q() {
        x
    } else {
        rng.random_range(0..params.k())
    }
}

/// Draws `n` inputs i.i.d. from `theta` and randomizes each one.
///
/// Returns `(true inputs, randomized reports)`.
pub fn sample_dataset(
    theta: &Distribution,
    n: usize,
    params: &RRParams,
    seed: Seed,
) -> Result<(Dataset, Dataset)> {
    params.check_dim(theta.k())?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let k = params.k();
    let mut rng = seed.rng();
    let picker = WeightedIndex::new(theta.probs()).map_err(|_| Error::BadSum { sum: 0.0 })?;
    let mut truth = Vec::with_capacity(n);
    let mut reports = Vec::with_capacity(n);
    for _ in 0..n {
        let x = picker.sample(&mut rng);
        truth.push(x as u32);
        reports.push(randomize_in_range(x, params, &mut rng) as u32);
    }
    Ok((
        Dataset::new_unchecked(truth, k),
        Dataset::new_unchecked(reports, k),
    ))
}

/// Normalized histogram of the reports.
pub fn empirical_histogram(ys: &Dataset, k: usize) -> Result<Distribution> {
    if ys.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(&v) = ys.values().iter().find(|&&v| v as usize >= k) {
        return Err(Error::CategoryOutOfRange {
            value: v as usize,
            k,
        });
    }
    let mut counts = vec![0u64; k];
    for &v in ys.values() {
        counts[v as usize] += 1;
    }
    Distribution::from_counts(&counts)
}

/// Expected report distribution `M(theta)_i = q + (p - q) theta_i`.
pub fn compound_distribution(theta: &Distribution, params: &RRParams) -> Result<Distribution> {
    params.check_dim(theta.k())?;
    let (q, d) = (params.q(), params.p_minus_q());
    Distribution::from_internal(theta.iter().map(|&t| q + d * t).collect())
}

/// Row-stochastic transition matrix, `c[i][j] = Pr(M(i) = j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    k_in: usize,
    k_out: usize,
    c: Vec<f64>,
}

impl ChannelMatrix {
    /// Builds from row-major entries; rows must sum to one within 1e-12.
    pub fn new(k_in: usize, k_out: usize, c: Vec<f64>) -> Result<Self> {
        if c.len() != k_in * k_out {
            return Err(Error::DimensionMismatch {
                expected: k_in * k_out,
                actual: c.len(),
            });
        }
        for (row_idx, row) in c.chunks(k_out.max(1)).enumerate() {
            if let Some((j, &v)) = row.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
                return Err(Error::NegativeEntry {
                    index: row_idx * k_out + j,
                    value: v,
                });
            }
            let sum = crate::numeric::sum(row);
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::BadSum { sum });
            }
        }
        Ok(Self { k_in, k_out, c })
    }

    pub fn identity(k: usize) -> Self {
        let mut c = vec![0.0; k * k];
        for i in 0..k {
            c[i * k + i] = 1.0;
        }
        Self {
            k_in: k,
            k_out: k,
            c,
        }
    }

    pub fn k_in(&self) -> usize {
        self.k_in
    }

    pub fn k_out(&self) -> usize {
        self.k_out
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.k_out + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.c[i * self.k_out..(i + 1) * self.k_out]
    }

    /// Output distribution `theta^T C` for an input distribution.
    pub fn push_forward(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.k_in {
            return Err(Error::DimensionMismatch {
                expected: self.k_in,
                actual: theta.len(),
            });
        }
        let mut out = vec![0.0; self.k_out];
        for (i, &t) in theta.iter().enumerate() {
            for (o, &c) in out.iter_mut().zip(self.row(i)) {
                *o += t * c;
            }
        }
        Ok(out)
    }
}

/// Explicit RR matrix: `p` on the diagonal, `q` elsewhere.
pub fn rr_channel(params: &RRParams) -> Result<ChannelMatrix> {
    if params.k() > CHANNEL_GUARD {
        return Err(Error::ChannelTooLarge {
            k: params.k(),
            limit: CHANNEL_GUARD,
        });
    }
    Ok(rr_channel_unguarded(params))
}

/// [`rr_channel`] without the size guard.
pub fn rr_channel_unguarded(params: &RRParams) -> ChannelMatrix {
    let k = params.k();
    let mut c = vec![params.q(); k * k];
    for i in 0..k {
        c[i * k + i] = params.p();
    }
    ChannelMatrix {
        k_in: k,
        k_out: k,
        c,
    }
}
