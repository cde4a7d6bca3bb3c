//! Frequency estimation for k-ary randomized response.
//!
//! Each user reports their category truthfully with probability `p` and
//! otherwise one of the other `k - 1` categories uniformly at random. Given
//! the histogram of reports this crate recovers the input distribution with
//!
//! * [`estimate_inv`]: unbiased linear inversion (may go negative),
//! * [`estimate_invn`] / [`estimate_invp`]: inversion repaired by clipping
//!   and rescaling or by Euclidean projection onto the simplex,
//! * [`estimate_ibu_rr`]: the iterative Bayesian update (EM),
//! * [`estimate_mle`]: the exact maximum-likelihood estimate in closed form,
//!   `O(k log k)`.
//!
//! [`oracle`] holds brute-force reference solvers for small domains and
//! [`harness`] the seeded Monte-Carlo sweep runner.
//!
//! ```
//! use ldpfreq_core::{estimate_mle, params_from_epsilon, Distribution};
//!
//! let params = params_from_epsilon(3, 4f64.ln()).unwrap();
//! let phi = Distribution::new(vec![0.1, 0.3, 0.6]).unwrap();
//! let (theta, trace) = estimate_mle(&phi, &params).unwrap();
//! assert_eq!(trace.n_zeros, 1);
//! assert!((theta[2] - 7.0 / 9.0).abs() < 1e-12);
//! ```

#![forbid(unsafe_code)]

mod dataset;
mod distribution;
mod error;
pub mod estimators;
pub mod harness;
pub mod mechanism;
pub mod metrics;
pub mod numeric;
pub mod oracle;
mod params;
mod seed;

pub use dataset::Dataset;
pub use distribution::{
    validate_distribution, Distribution, CLAMP_TOL, INTERNAL_SUM_TOL, USER_SUM_TOL,
};
pub use error::{Error, Result};
pub use estimators::{
    estimate_ibu_generic, estimate_ibu_rr, estimate_inv, estimate_invn, estimate_invp,
    estimate_mle, run_estimator, Estimate, EstimatorKind, IbuState, MleTrace, SignedEstimate,
    DEFAULT_IBU_ITERS,
};
pub use mechanism::{
    compound_distribution, empirical_histogram, randomize, rr_channel, sample_dataset,
    ChannelMatrix,
};
pub use params::{params_from_epsilon, RRParams};
pub use seed::{Seed, StreamRng};
