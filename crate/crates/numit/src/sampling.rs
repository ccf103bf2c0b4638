//! Random matrix and simplex primitives used by the null-model samplers.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};

use crate::cov::CovMatrix;
use crate::error::{Error, Result};

/// Matrix of iid standard normal entries.
pub fn std_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Wishart draw with identity scale and `d` degrees of freedom, via the
/// Bartlett decomposition: lower-triangular factor with chi distributed
/// diagonal (`chi2(d - i)` at row `i`) and standard normal subdiagonal,
/// returned as `L L'`.
pub fn wishart_identity<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<CovMatrix> {
    if d == 0 {
        return Err(Error::invalid("wishart dimension", "must be positive"));
    }
    let mut l = DMatrix::zeros(d, d);
    for i in 0..d {
        let chi2 = ChiSquared::new((d - i) as f64)
            .map_err(|e| Error::invalid("wishart dof", e.to_string()))?;
        l[(i, i)] = chi2.sample(rng).sqrt();
        for j in 0..i {
            l[(i, j)] = StandardNormal.sample(rng);
        }
    }
    CovMatrix::new(&l * l.transpose())
}

/// `wishart_identity` with a bounded redraw budget for the (rare) draws
/// whose SPD validation fails.
pub(crate) fn wishart_with_retries<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    retries: usize,
) -> Result<CovMatrix> {
    let mut last = Error::CholeskyFailure;
    for _ in 0..retries {
        match wishart_identity(rng, d) {
            Ok(w) => return Ok(w),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Symmetric Dirichlet draw: `k` Gamma(alpha, 1) variates, normalised.
///
/// Underflowed all-zero draws (possible for very small alpha) are redrawn a
/// bounded number of times.
pub fn symmetric_dirichlet<R: Rng + ?Sized>(rng: &mut R, k: usize, alpha: f64) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::invalid("dirichlet size", "need at least 2 cells"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(
            "dirichlet concentration",
            "must be finite and positive",
        ));
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::invalid("dirichlet", e.to_string()))?;
    for _ in 0..16 {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum.is_finite() && sum > 0.0 {
            return Ok(draws.into_iter().map(|g| g / sum).collect());
        }
    }
    Err(Error::invalid(
        "dirichlet concentration",
        "all gamma draws underflowed to zero",
    ))
}
