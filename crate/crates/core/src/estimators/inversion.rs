//! Linear inversion and its two repairs (normalization, projection).

use serde::Serialize;

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::params::RRParams;

/// Output of linear inversion: sums to one but may have negative entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SignedEstimate(Vec<f64>);

impl SignedEstimate {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn has_negative(&self) -> bool {
        self.0.iter().any(|&v| v < 0.0)
    }
}

impl AsRef<[f64]> for SignedEstimate {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `theta_i = (phi_i - q) / (p - q)`.
pub fn estimate_inv(phi: &Distribution, params: &RRParams) -> Result<SignedEstimate> {
    params.check_dim(phi.k())?;
    let (q, d) = (params.q(), params.p_minus_q());
    Ok(SignedEstimate(phi.iter().map(|&f| (f - q) / d).collect()))
}

/// Inversion with negative entries zeroed and the rest rescaled.
pub fn estimate_invn(phi: &Distribution, params: &RRParams) -> Result<Distribution> {
    let inv = estimate_inv(phi, params)?;
    let clipped: Vec<f64> = inv.0.iter().map(|&v| v.max(0.0)).collect();
    let mass = crate::numeric::sum(&clipped);
    Distribution::from_internal(clipped.into_iter().map(|v| v / mass).collect())
}

/// Euclidean projection of the inversion estimate onto the simplex.
pub fn estimate_invp(phi: &Distribution, params: &RRParams) -> Result<Distribution> {
    let inv = estimate_inv(phi, params)?;
    finish(project_onto_simplex(inv.values()))
}

/// `argmin_{x in simplex} ||x - v||_2` by the sort-and-threshold method.
///
/// With `u` sorted descending, the support size is the largest `j` such that
/// `u_j + (1 - sum_{i<=j} u_i) / j > 0`; every entry is then shifted by the
/// common threshold and clipped at zero.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            shift = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - shift).max(0.0)).collect()
}

/// Clamps floating-point dust and renormalizes; a real negative is a bug.
pub(crate) fn finish(values: Vec<f64>) -> Result<Distribution> {
    if let Some((index, &value)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| **v < -crate::distribution::CLAMP_TOL || !v.is_finite())
    {
        return Err(Error::InvalidEstimate { index, value });
    }
    let clamped: Vec<f64> = values.into_iter().map(|v| v.max(0.0)).collect();
    let mass = crate::numeric::sum(&clamped);
    Distribution::from_internal(clamped.into_iter().map(|v| v / mass).collect())
}
