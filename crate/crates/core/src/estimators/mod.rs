//! Frequency estimators for randomized-response reports.

mod ibu;
mod inversion;
mod mle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ibu::{
    estimate_ibu_generic, estimate_ibu_rr, ibu_generic_step, IbuState, DEFAULT_IBU_ITERS,
};
pub use inversion::{
    estimate_inv, estimate_invn, estimate_invp, project_onto_simplex, SignedEstimate,
};
pub use mle::{boundary_g, estimate_mle, zero_count_candidate, MleTrace};

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::params::RRParams;

/// Estimator selector. Names sort in the order used for result rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Ibu,
    Inv,
    InvN,
    InvP,
    Mle,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Ibu,
        EstimatorKind::Inv,
        EstimatorKind::InvN,
        EstimatorKind::InvP,
        EstimatorKind::Mle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Ibu => "ibu",
            EstimatorKind::Inv => "inv",
            EstimatorKind::InvN => "invn",
            EstimatorKind::InvP => "invp",
            EstimatorKind::Mle => "mle",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}'")))
    }
}

/// Result of [`run_estimator`].
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub kind: EstimatorKind,
    /// Estimated frequencies; may be negative only for [`EstimatorKind::Inv`].
    pub theta: Vec<f64>,
    pub trace: Option<MleTrace>,
}

/// Runs one estimator. `ibu_iters` is ignored by the others.
pub fn run_estimator(
    kind: EstimatorKind,
    phi: &Distribution,
    params: &RRParams,
    ibu_iters: usize,
) -> Result<Estimate> {
    let (theta, trace) = match kind {
        EstimatorKind::Inv => (estimate_inv(phi, params)?.into_vec(), None),
        EstimatorKind::InvN => (estimate_invn(phi, params)?.into_vec(), None),
        EstimatorKind::InvP => (estimate_invp(phi, params)?.into_vec(), None),
        EstimatorKind::Mle => {
            let (theta, trace) = estimate_mle(phi, params)?;
            (theta.into_vec(), Some(trace))
        }
        EstimatorKind::Ibu => (
            estimate_ibu_rr(phi, params, ibu_iters, None)?.0.into_vec(),
            None,
        ),
    };
    Ok(Estimate { kind, theta, trace })
}
