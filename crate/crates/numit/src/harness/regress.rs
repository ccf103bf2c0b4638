//! Statistical comparison of the two normalisations. The question: does
//! the relationship between two atom measures depend on whether they were
//! normalised as fractions of the total or as null-model quantiles? We
//! stack both groups and fit b = b0 + b1*a + b2*m + b3*(a*m) with m the
//! group indicator, so b3 is the interaction (slope difference) and its
//! p-value the evidence that the normalisations disagree.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{mean, pearson, sample_var, standardize, two_sided_p};

/// Interaction-model fit over the stacked standardized groups.
/// `beta` and `p_values` are ordered [intercept, slope, group, interaction].
/// Because each group is standardized first, `beta[1]` equals the Pearson
/// correlation within the reference group and `beta[1] + beta[3]` the
/// correlation within the other; both correlations are echoed for
/// convenience.
#[derive(Debug, Clone, Serialize)]
pub struct RegressionFit {
    pub beta: [f64; 4],
    pub p_values: [f64; 4],
    pub r_nmi: f64,
    pub r_numit: f64,
    pub n: usize,
}

/// Residual sums below this fraction of the response scale count as an
/// exact fit: rounding alone produces relative residuals around 1e-16, so
/// their squares sit near 1e-32, far under this line, while any genuine
/// noise at or above 1e-9 stays far over it.
const ZERO_RSS_REL: f64 = 1e-20;
const ZERO_BETA: f64 = 1e-12;

fn coefficient_p(beta: f64, se: f64, df: f64, zero_resid: bool) -> f64 {
    if zero_resid || se == 0.0 {
        // Degenerate zero-residual fit: a zero coefficient is
        // indistinguishable from noise (p = 1), any other is infinitely
        // significant (p = 0).
        if beta.abs() < ZERO_BETA {
            1.0
        } else {
            0.0
        }
    } else {
        two_sided_p(beta / se, df)
    }
}

/// Fits the interaction model to paired measures from the two
/// normalisations. All four slices must have the same length, at least 4;
/// each slice is standardized independently before stacking.
pub fn interaction_regression(
    a_nmi: &[f64],
    b_nmi: &[f64],
    a_numit: &[f64],
    b_numit: &[f64],
) -> Result<RegressionFit> {
    let len = a_nmi.len();
    for other in [b_nmi.len(), a_numit.len(), b_numit.len()] {
        if other != len {
            return Err(Error::LengthMismatch {
                left: len,
                right: other,
            });
        }
    }
    if len < 4 {
        return Err(Error::DegenerateDesign(format!(
            "need at least 4 paired observations per group, got {len}"
        )));
    }

    let r_nmi = pearson(a_nmi, b_nmi)?;
    let r_numit = pearson(a_numit, b_numit)?;

    let pa = standardize(a_nmi)?;
    let ra = standardize(b_nmi)?;
    let pb = standardize(a_numit)?;
    let rb = standardize(b_numit)?;

    let n = 2 * len;
    let mut x = DMatrix::zeros(n, 4);
    let mut y = DVector::zeros(n);
    for i in 0..len {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = pa[i];
        y[i] = ra[i];
        let j = len + i;
        x[(j, 0)] = 1.0;
        x[(j, 1)] = pb[i];
        x[(j, 2)] = 1.0;
        x[(j, 3)] = pb[i];
        y[j] = rb[i];
    }

    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &y;
    let chol = Cholesky::new(xtx)
        .ok_or_else(|| Error::DegenerateDesign("stacked design matrix is rank deficient".into()))?;
    let beta = chol.solve(&xty);
    let resid = &y - &x * &beta;
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let yty: f64 = y.iter().map(|v| v * v).sum();
    let zero_resid = rss <= ZERO_RSS_REL * yty.max(1.0);
    let df = (n - 4) as f64;
    let sigma2 = rss / df;
    let xtx_inv = chol.inverse();

    let mut b = [0.0; 4];
    let mut p = [0.0; 4];
    for j in 0..4 {
        b[j] = beta[j];
        let se = (sigma2 * xtx_inv[(j, j)]).sqrt();
        p[j] = coefficient_p(b[j], se, df, zero_resid);
    }

    Ok(RegressionFit {
        beta: b,
        p_values: p,
        r_nmi,
        r_numit,
        n,
    })
}

/// Mean, sample standard deviation, and a one-sample t-test against zero.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
    pub t: f64,
    pub p: f64,
    pub n: usize,
}

/// Conventions for degenerate inputs: zero variance with zero mean gives
/// t = 0, p = 1; zero variance with nonzero mean gives t = +/-inf, p = 0.
pub fn summary_stats(values: &[f64]) -> Result<SummaryStats> {
    if values.len() < 2 {
        return Err(Error::TooFewSamples {
            got: values.len(),
            min: 2,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = values.len();
    let m = mean(values);
    let sd = sample_var(values).sqrt();
    let df = (n - 1) as f64;
    let (t, p) = if sd == 0.0 {
        if m == 0.0 {
            (0.0, 1.0)
        } else {
            (m.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = m / (sd / (n as f64).sqrt());
        (t, two_sided_p(t, df))
    };
    Ok(SummaryStats {
        mean: m,
        std: sd,
        t,
        p,
        n,
    })
}
