//! Linear-Gaussian source/target systems.
//!
//! A system is `T = A S + sqrt(g) eps` with source covariance `S ~ N(0, Sigma_S)`
//! and noise `eps ~ N(0, Sigma_eps)` scaled by a gain `g > 0`. The sources are
//! split into two groups: X is the first `d_x` coordinates, Y the remaining
//! `d_y`. Target covariance, joint source/target covariance, and the total
//! mutual information `I(S;T)` all have closed forms in the system matrices;
//! the latter uses `log|g Sigma_eps| = d_T ln g + log|Sigma_eps|` so gain
//! sweeps and root finding never refactorise the noise.

use nalgebra::DMatrix;

use crate::cov::{clamp_mi, CovMatrix, IndexSet};
use crate::error::{Error, Result};

/// Linear-Gaussian system with a fixed bipartition of the sources and a
/// fixed noise gain. Immutable; `with_gain` derives a variant cheaply.
#[derive(Debug, Clone)]
pub struct GaussianPidSystem {
    a: DMatrix<f64>,
    sigma_s: CovMatrix,
    sigma_eps: CovMatrix,
    g: f64,
    d_x: usize,
    d_y: usize,
    // Cached gain-independent products: A Sigma_S A' and Sigma_S A'.
    a_sig_at: DMatrix<f64>,
    sig_s_at: DMatrix<f64>,
}

impl GaussianPidSystem {
    pub fn new(
        a: DMatrix<f64>,
        sigma_s: CovMatrix,
        sigma_eps: CovMatrix,
        g: f64,
        d_x: usize,
        d_y: usize,
    ) -> Result<Self> {
        let d_s = sigma_s.dim();
        let d_t = sigma_eps.dim();
        if a.nrows() != d_t || a.ncols() != d_s {
            return Err(Error::DimensionMismatch(format!(
                "coupling is {}x{}, expected {}x{} from the covariances",
                a.nrows(),
                a.ncols(),
                d_t,
                d_s
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if d_x == 0 || d_y == 0 || d_x + d_y != d_s {
            return Err(Error::invalid(
                "source partition",
                format!("d_x={d_x} and d_y={d_y} must be positive and sum to {d_s}"),
            ));
        }
        check_gain(g)?;
        let sig_s_at = sigma_s.entries() * a.transpose();
        let a_sig_at = &a * &sig_s_at;
        Ok(GaussianPidSystem {
            a,
            sigma_s,
            sigma_eps,
            g,
            d_x,
            d_y,
            a_sig_at,
            sig_s_at,
        })
    }

    /// Two scalar sources, one target coordinate: the workhorse configuration.
    pub fn two_to_one(a: [f64; 2], sigma_s: CovMatrix, noise_var: f64, g: f64) -> Result<Self> {
        if sigma_s.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "two_to_one needs a 2x2 source covariance, got {0}x{0}",
                sigma_s.dim()
            )));
        }
        Self::new(
            DMatrix::from_row_slice(1, 2, &a),
            sigma_s,
            CovMatrix::scalar(noise_var)?,
            g,
            1,
            1,
        )
    }

    /// Same system at a different noise gain; cached products are reused.
    pub fn with_gain(&self, g: f64) -> Result<Self> {
        check_gain(g)?;
        let mut sys = self.clone();
        sys.g = g;
        Ok(sys)
    }

    pub fn d_s(&self) -> usize {
        self.sigma_s.dim()
    }

    pub fn d_t(&self) -> usize {
        self.sigma_eps.dim()
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn d_y(&self) -> usize {
        self.d_y
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn source_cov(&self) -> &CovMatrix {
        &self.sigma_s
    }

    pub fn noise_cov(&self) -> &CovMatrix {
        &self.sigma_eps
    }

    /// Source group X in joint-covariance coordinates: the leading block.
    pub fn x_idx(&self) -> IndexSet {
        IndexSet::range(0..self.d_x)
    }

    /// Source group Y: the trailing source block.
    pub fn y_idx(&self) -> IndexSet {
        IndexSet::range(self.d_x..self.d_s())
    }

    /// Target coordinates: everything after the sources.
    pub fn target_idx(&self) -> IndexSet {
        IndexSet::range(self.d_s()..self.d_s() + self.d_t())
    }
}

fn check_gain(g: f64) -> Result<()> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::invalid("noise gain", "must be finite and positive"));
    }
    Ok(())
}

/// `Sigma_T = A Sigma_S A' + g Sigma_eps`.
pub fn target_covariance(sys: &GaussianPidSystem) -> Result<CovMatrix> {
    CovMatrix::new(&sys.a_sig_at + sys.sigma_eps.entries() * sys.g)
}

/// Joint covariance of `(S, T)`: sources first, target last.
pub fn joint_covariance(sys: &GaussianPidSystem) -> Result<CovMatrix> {
    let d_s = sys.d_s();
    let d_t = sys.d_t();
    let target = &sys.a_sig_at + sys.sigma_eps.entries() * sys.g;
    let mut joint = DMatrix::zeros(d_s + d_t, d_s + d_t);
    joint
        .view_mut((0, 0), (d_s, d_s))
        .copy_from(sys.sigma_s.entries());
    joint
        .view_mut((0, d_s), (d_s, d_t))
        .copy_from(&sys.sig_s_at);
    joint
        .view_mut((d_s, 0), (d_t, d_s))
        .copy_from(&sys.sig_s_at.transpose());
    joint.view_mut((d_s, d_s), (d_t, d_t)).copy_from(&target);
    CovMatrix::new(joint)
}

/// Total mutual information `I(S;T)` in nats.
///
/// Uses `0.5 (log|Sigma_T| - log|g Sigma_eps|)`, which equals the joint-MI
/// log-determinant combination because the conditional covariance of `T`
/// given `S` is exactly `g Sigma_eps`.
pub fn system_tmi(sys: &GaussianPidSystem) -> Result<f64> {
    let ld_t = target_covariance(sys)?.logdet();
    let ld_noise = sys.d_t() as f64 * sys.g.ln() + sys.sigma_eps.logdet();
    clamp_mi(0.5 * (ld_t - ld_noise))
}
