//! Symmetric positive-definite matrices and Gaussian mutual information.
//!
//! `CovMatrix` is the currency of every Gaussian computation in this crate:
//! construction validates symmetry and positive definiteness, caches the
//! Cholesky factor, and all log-determinants are read off that factor
//! (`2 * sum(ln diag L)`). Mutual information between index subsets of a
//! joint covariance is the log-determinant combination
//! `I(U;V) = 0.5 * (log|S_U| + log|S_V| - log|S_{U u V}|)`.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated at construction.
const SYMMETRY_RTOL: f64 = 1e-12;
/// Diagonal jitter applied once, scaled by trace/d, when the first
/// factorisation attempt fails.
const JITTER_SCALE: f64 = 1e-10;
/// MI values in (-MI_CLAMP, 0) are rounding debris and clamp to 0; anything
/// more negative is a hard error.
const MI_CLAMP: f64 = 1e-9;

/// Symmetric positive-definite matrix with its lower Cholesky factor cached
/// at construction. Immutable afterwards, so values are safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    entries: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    logdet: f64,
}

impl CovMatrix {
    /// Validates and factorises `m`. Fails unless `m` is square, finite,
    /// symmetric to within 1e-12 relative, and positive definite (one jitter
    /// retry of `+1e-10*trace/d` on the diagonal is allowed).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if d == 0 || m.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let mut max_dev = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                max_dev = max_dev.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if max_dev > SYMMETRY_RTOL * scale {
            return Err(Error::NotSymmetric {
                max_dev: max_dev / scale,
            });
        }
        // Exact symmetrisation; a no-op wherever the two triangles already agree.
        let sym = (&m + m.transpose()) * 0.5;

        let chol = match Cholesky::new(sym.clone()) {
            Some(c) => c,
            None => {
                let jitter = JITTER_SCALE * sym.trace() / d as f64;
                let jittered = &sym + DMatrix::from_diagonal_element(d, d, jitter);
                Cholesky::new(jittered).ok_or(Error::CholeskyFailure)?
            }
        };
        let chol_l = chol.unpack();
        let logdet = 2.0 * chol_l.diagonal().iter().map(|p| p.ln()).sum::<f64>();
        Ok(CovMatrix {
            entries: sym,
            chol_l,
            logdet,
        })
    }

    /// Convenience constructor from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "expected {d} entries in every row of a {d}x{d} matrix"
            )));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    /// 1x1 covariance.
    pub fn scalar(v: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, v))
    }

    pub fn identity(d: usize) -> Self {
        Self::new(DMatrix::identity(d, d)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Lower Cholesky factor L with `L L' = entries`.
    pub fn chol_l(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    /// `log|M|`, read off the cached factor.
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// SPD principal submatrix on the given sorted indices.
    pub fn principal_submatrix(&self, idx: &IndexSet) -> Result<CovMatrix> {
        for &i in idx.as_slice() {
            if i >= self.dim() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: self.dim(),
                });
            }
        }
        let k = idx.len();
        let sub = DMatrix::from_fn(k, k, |r, c| {
            self.entries[(idx.as_slice()[r], idx.as_slice()[c])]
        });
        CovMatrix::new(sub)
    }
}

/// `log|m|` via the cached Cholesky factor.
pub fn spd_logdet(m: &CovMatrix) -> f64 {
    m.logdet()
}

/// Sorted set of distinct coordinate indices into a joint covariance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Sorts the input; duplicate indices are rejected.
    pub fn new(indices: impl Into<Vec<usize>>) -> Result<Self> {
        let mut v: Vec<usize> = indices.into();
        v.sort_unstable();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("index set", "duplicate index"));
        }
        Ok(IndexSet(v))
    }

    pub fn range(r: std::ops::Range<usize>) -> Self {
        IndexSet(r.collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn is_disjoint_with(&self, other: &IndexSet) -> bool {
        // Both sorted: a single merge walk suffices.
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        v.dedup();
        IndexSet(v)
    }
}

/// Clamps rounding-level negative MI to zero; larger violations are errors.
pub(crate) fn clamp_mi(mi: f64) -> Result<f64> {
    if mi >= 0.0 {
        Ok(mi)
    } else if mi > -MI_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeMi { value: mi })
    }
}

/// Mutual information in nats between the coordinates `u` and `v` of a joint
/// Gaussian with covariance `joint`.
pub fn gaussian_mi(joint: &CovMatrix, u: &IndexSet, v: &IndexSet) -> Result<f64> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    if !u.is_disjoint_with(v) {
        return Err(Error::OverlappingIndexSets);
    }
    for idx in [u.max().unwrap(), v.max().unwrap()] {
        if idx >= joint.dim() {
            return Err(Error::IndexOutOfRange {
                index: idx,
                dim: joint.dim(),
            });
        }
    }
    let ld_u = joint.principal_submatrix(u)?.logdet();
    let ld_v = joint.principal_submatrix(v)?.logdet();
    let ld_uv = joint.principal_submatrix(&u.union(v))?.logdet();
    clamp_mi(0.5 * (ld_u + ld_v - ld_uv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn logdet_identity_is_zero() {
        let m = CovMatrix::identity(3);
        assert_eq!(spd_logdet(&m), 0.0);
    }

    #[test]
    fn logdet_diagonal() {
        let m = CovMatrix::new(mat(&[&[2.0, 0.0], &[0.0, 2.0]])).unwrap();
        assert!((spd_logdet(&m) - 2.0 * 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn logdet_two_by_two() {
        // det [[20,10],[10,20]] = 400 - 100 = 300
        let m = CovMatrix::new(mat(&[&[20.0, 10.0], &[10.0, 20.0]])).unwrap();
        assert!((spd_logdet(&m) - 300.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let err = CovMatrix::new(mat(&[&[1.0, 0.1], &[0.2, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn rejects_indefinite_after_jitter() {
        // det = 1 - 4 < 0: indefinite, jitter must not rescue it.
        let err = CovMatrix::new(mat(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::CholeskyFailure));
    }

    #[test]
    fn rejects_non_finite() {
        let err = CovMatrix::new(mat(&[&[1.0, 0.0], &[0.0, f64::NAN]])).unwrap_err();
        assert!(matches!(err, Error::NonFinite));
    }

    #[test]
    fn chol_factor_reconstructs_matrix() {
        let m = CovMatrix::new(mat(&[&[20.0, 10.0], &[10.0, 20.0]])).unwrap();
        let rec = m.chol_l() * m.chol_l().transpose();
        assert!((rec - m.entries()).abs().max() < 1e-12);
    }

    /// Reference joint used across the crate's tests: source covariance
    /// [[20,10],[10,20]], coefficients (0.5,0.5), unit noise.
    fn reference_joint() -> CovMatrix {
        CovMatrix::new(mat(&[
            &[20.0, 10.0, 15.0],
            &[10.0, 20.0, 15.0],
            &[15.0, 15.0, 16.0],
        ]))
        .unwrap()
    }

    #[test]
    fn mi_sources_vs_target() {
        // Schur complement of the full source block is exactly the unit noise,
        // so I(S;T) = 0.5 ln(16/1).
        let joint = reference_joint();
        let s = IndexSet::range(0..2);
        let t = IndexSet::range(2..3);
        let mi = gaussian_mi(&joint, &s, &t).unwrap();
        assert!((mi - 0.5 * 16.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mi_single_source_vs_target() {
        // Sigma_{T|X} = 16 - 15^2/20 = 4.75.
        let joint = reference_joint();
        let x = IndexSet::range(0..1);
        let t = IndexSet::range(2..3);
        let mi = gaussian_mi(&joint, &x, &t).unwrap();
        assert!((mi - 0.5 * (16.0f64 / 4.75).ln()).abs() < 1e-12);
    }

    #[test]
    fn mi_block_diagonal_is_zero() {
        let joint =
            CovMatrix::new(mat(&[&[2.0, 0.5, 0.0], &[0.5, 2.0, 0.0], &[0.0, 0.0, 3.0]])).unwrap();
        let s = IndexSet::range(0..2);
        let t = IndexSet::range(2..3);
        assert_eq!(gaussian_mi(&joint, &s, &t).unwrap(), 0.0);
    }

    #[test]
    fn mi_argument_order_is_irrelevant() {
        let joint = reference_joint();
        let x = IndexSet::range(0..1);
        let t = IndexSet::range(2..3);
        let a = gaussian_mi(&joint, &x, &t).unwrap();
        let b = gaussian_mi(&joint, &t, &x).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn mi_rejects_bad_index_sets() {
        let joint = reference_joint();
        let empty = IndexSet::new(Vec::new()).unwrap();
        let x = IndexSet::range(0..1);
        let xt = IndexSet::new(vec![0, 2]).unwrap();
        let t = IndexSet::range(2..3);
        let far = IndexSet::new(vec![5]).unwrap();
        assert!(matches!(
            gaussian_mi(&joint, &empty, &t),
            Err(Error::EmptyIndexSet)
        ));
        assert!(matches!(
            gaussian_mi(&joint, &xt, &t),
            Err(Error::OverlappingIndexSets)
        ));
        assert!(matches!(
            gaussian_mi(&joint, &x, &far),
            Err(Error::IndexOutOfRange { index: 5, dim: 3 })
        ));
    }

    #[test]
    fn index_set_rejects_duplicates() {
        assert!(IndexSet::new(vec![1, 1]).is_err());
        assert_eq!(IndexSet::new(vec![2, 0]).unwrap().as_slice(), &[0, 2]);
    }

    /// Cofactor-expansion determinant, the independent oracle for logdet.
    fn det_cofactor(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        if n == 1 {
            return m[(0, 0)];
        }
        let mut det = 0.0;
        for j in 0..n {
            let minor = DMatrix::from_fn(n - 1, n - 1, |r, c| {
                m[(r + 1, if c < j { c } else { c + 1 })]
            });
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            det += sign * m[(0, j)] * det_cofactor(&minor);
        }
        det
    }

    proptest! {
        #[test]
        fn logdet_matches_cofactor_oracle(
            d in 1usize..=4,
            seed in proptest::array::uniform16(0.0f64..1.0),
        ) {
            // Random SPD built as L L' with diagonals bounded away from zero.
            let l = DMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    0.5 + 1.5 * seed[i * 4 + j]
                } else if i > j {
                    2.0 * seed[i * 4 + j] - 1.0
                } else {
                    0.0
                }
            });
            let spd = &l * l.transpose();
            let cov = CovMatrix::new(spd.clone()).unwrap();
            let oracle = det_cofactor(&spd).ln();
            prop_assert!((cov.logdet() - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
        }

        #[test]
        fn mi_is_nonnegative_and_symmetric(
            seed in proptest::array::uniform16(0.0f64..1.0),
        ) {
            let d = 4;
            let l = DMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    0.5 + seed[i * 4 + j]
                } else if i > j {
                    seed[i * 4 + j] - 0.5
                } else {
                    0.0
                }
            });
            let joint = CovMatrix::new(&l * l.transpose()).unwrap();
            let u = IndexSet::range(0..2);
            let v = IndexSet::range(2..4);
            let a = gaussian_mi(&joint, &u, &v).unwrap();
            let b = gaussian_mi(&joint, &v, &u).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
