//! Minimal-mutual-information partial information decomposition.
//!
//! Given the marginal informations `I(X;T)`, `I(Y;T)` and the total
//! `I(X,Y;T)`, the MMI decomposition assigns redundancy `min(I_x, I_y)`,
//! unique informations as the marginal excesses over redundancy, and synergy
//! as the remainder of the total. All four atoms are nonnegative and sum to
//! the total by construction.

use serde::{Deserialize, Serialize};

use crate::cov::gaussian_mi;
use crate::error::{Error, Result};
use crate::gaussian::{joint_covariance, system_tmi, GaussianPidSystem};

/// Inputs may undershoot the information inequalities by at most this much
/// before the decomposition refuses them.
const CONSISTENCY_TOL: f64 = 1e-6;
/// Negative inputs above this threshold are treated as rounding debris.
const INPUT_CLAMP: f64 = 1e-9;
/// Totals below this cannot be normalised against.
const TMI_FLOOR: f64 = 1e-12;

/// The four decomposition atoms and the total they partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidAtoms {
    pub tmi: f64,
    pub red: f64,
    pub un_x: f64,
    pub un_y: f64,
    pub syn: f64,
}

impl PidAtoms {
    /// Atoms in canonical order: redundancy, unique X, unique Y, synergy.
    pub fn as_array(&self) -> [f64; 4] {
        [self.red, self.un_x, self.un_y, self.syn]
    }
}

/// Atom fractions of the total, tagged with the normalisation that made them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomShares {
    pub red: f64,
    pub un_x: f64,
    pub un_y: f64,
    pub syn: f64,
    pub method: String,
}

impl AtomShares {
    pub fn as_array(&self) -> [f64; 4] {
        [self.red, self.un_x, self.un_y, self.syn]
    }
}

fn clean_input(name: &'static str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::invalid(name, "must be finite"));
    }
    if v >= 0.0 {
        Ok(v)
    } else if v > -INPUT_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeMi { value: v })
    }
}

/// MMI decomposition of marginal informations `i_x`, `i_y` and total `tmi`.
///
/// Rounding-level negative inputs clamp to zero. A total that falls short of
/// a marginal by more than 1e-6 signals an upstream numerical failure and is
/// an error; shortfalls within tolerance clamp the synergy at zero.
pub fn mmi_pid(i_x: f64, i_y: f64, tmi: f64) -> Result<PidAtoms> {
    let i_x = clean_input("i_x", i_x)?;
    let i_y = clean_input("i_y", i_y)?;
    let tmi = clean_input("tmi", tmi)?;
    let max_marginal = i_x.max(i_y);
    if tmi < max_marginal - CONSISTENCY_TOL {
        return Err(Error::InconsistentInformation { tmi, max_marginal });
    }
    let red = i_x.min(i_y);
    let un_x = i_x - red;
    let un_y = i_y - red;
    // tmi - i_x - i_y + red simplifies to this: fewer roundings, and
    // bit-exactly symmetric under a source swap.
    let syn = (tmi - max_marginal).max(0.0);
    Ok(PidAtoms {
        tmi,
        red,
        un_x,
        un_y,
        syn,
    })
}

/// Atom shares of the total information. Fails on (near-)zero total.
pub fn nmi_normalize(atoms: &PidAtoms) -> Result<AtomShares> {
    if atoms.tmi < TMI_FLOOR {
        return Err(Error::ZeroTmi);
    }
    Ok(AtomShares {
        red: atoms.red / atoms.tmi,
        un_x: atoms.un_x / atoms.tmi,
        un_y: atoms.un_y / atoms.tmi,
        syn: atoms.syn / atoms.tmi,
        method: "nmi".to_string(),
    })
}

/// Full decomposition of a linear-Gaussian system.
///
/// The total information uses the closed form; the marginals come from the
/// joint covariance, so redundant sources produce bit-identical marginals
/// and exactly zero unique atoms.
pub fn pid_gaussian(sys: &GaussianPidSystem) -> Result<PidAtoms> {
    let tmi = system_tmi(sys)?;
    let joint = joint_covariance(sys)?;
    let target = sys.target_idx();
    let i_x = gaussian_mi(&joint, &sys.x_idx(), &target)?;
    let i_y = gaussian_mi(&joint, &sys.y_idx(), &target)?;
    mmi_pid(i_x, i_y, tmi)
}
