//! Inputs shared by the benchmarks.

use ldpfreq_core::{Distribution, Seed};
use rand::Rng;

/// Observed histogram with i.i.d. exponential weights, a dense worst case for sorting.
pub fn exponential_histogram(k: usize, seed: u64) -> Distribution {
    let mut rng = Seed::new(seed, k as u64).rng();
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    Distribution::new(w.iter().map(|x| x / total).collect()).expect("positive weights")
}
