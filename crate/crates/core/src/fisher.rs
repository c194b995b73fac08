//! Classical and quantum Fisher information at the fiducial state.
//!
//! Matrices are indexed by the flat parameter index of
//! [`param_index`](crate::povm::param_index).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::povm::{dot, LocalParams, PureState, RankOnePovm, RealDecomposition, ORTHOGONALITY_THRESHOLD};

/// Eigenvalue cutoff used for numerical rank.
pub const RANK_CUTOFF: f64 = 1e-9;

/// Default tolerance for the Fisher-symmetry conditions.
pub const PFSIC_TOL: f64 = 1e-9;

/// Default central-difference step for [`classical_fisher_fd`].
pub const FD_STEP: f64 = 1e-5;

/// Quantum Fisher matrix of a pure state in the canonical local
/// parameterization: `4 I` of size `2d - 2`.
pub fn quantum_fisher_pure(dim: usize) -> Result<DMatrix<f64>> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    Ok(DMatrix::identity(2 * dim - 2, 2 * dim - 2) * 4.0)
}

/// Derivatives `∂p^ξ/∂x^α` at the fiducial state, `(2 b_0 b_k, 2 b_0 c_k)` per
/// outcome, for the outcomes whose fiducial probability exceeds `threshold`.
/// Returns `(outcome index, p_0^ξ, derivative row)` triples.
pub(crate) fn derivative_rows(
    decomposition: &RealDecomposition,
    threshold: f64,
) -> Vec<(usize, f64, Vec<f64>)> {
    let dim = decomposition.dim();
    (0..decomposition.n_outcomes())
        .filter_map(|xi| {
            let b0 = decomposition.b(0)[xi];
            let p0 = b0 * b0;
            if p0 <= threshold {
                return None;
            }
            let row = (1..dim)
                .flat_map(|k| [2.0 * b0 * decomposition.b(k)[xi], 2.0 * b0 * decomposition.c(k)[xi]])
                .collect();
            Some((xi, p0, row))
        })
        .collect()
}

/// Classical Fisher matrix as the Gram matrix of `{2 b_k, 2 c_k}` over the
/// outcomes not orthogonal to the fiducial state. Also returns the indices of
/// the excluded outcomes.
pub fn classical_fisher_with_exclusions(
    povm: &RankOnePovm,
    threshold: f64,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let decomposition = povm.gauge_fixed().real_decomposition()?;
    let dim = decomposition.dim();
    let p = 2 * dim - 2;
    let mut excluded = Vec::new();
    // Gram vectors g_α = 2 (b_1, c_1, b_2, c_2, ...), restricted to included outcomes.
    let mut gram: Vec<Vec<f64>> = vec![Vec::with_capacity(decomposition.n_outcomes()); p];
    for xi in 0..decomposition.n_outcomes() {
        let b0 = decomposition.b(0)[xi];
        if b0 * b0 <= threshold {
            excluded.push(xi);
            continue;
        }
        for k in 1..dim {
            gram[2 * (k - 1)].push(2.0 * decomposition.b(k)[xi]);
            gram[2 * (k - 1) + 1].push(2.0 * decomposition.c(k)[xi]);
        }
    }
    let mut c = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let v = dot(&gram[a], &gram[b]);
            c[(a, b)] = v;
            c[(b, a)] = v;
        }
    }
    Ok((c, excluded))
}

/// Classical Fisher matrix at the fiducial state.
pub fn classical_fisher(povm: &RankOnePovm) -> Result<DMatrix<f64>> {
    classical_fisher_with_exclusions(povm, ORTHOGONALITY_THRESHOLD).map(|(c, _)| c)
}

/// Classical Fisher matrix from its definition, `Σ_ξ ∂_α p ∂_β p / p`, with
/// derivatives taken by central differences of the outcome probabilities of
/// perturbed states. Independent of the real decomposition.
pub fn classical_fisher_fd(povm: &RankOnePovm, step: f64) -> Result<DMatrix<f64>> {
    let dim = povm.dim();
    let p = 2 * dim - 2;
    let p0 = povm.probabilities(&PureState::fiducial(dim)?)?;
    let mut derivatives = Vec::with_capacity(p);
    for alpha in 0..p {
        let mut x = vec![0.0; p];
        x[alpha] = step;
        let plus = povm.probabilities(&PureState::perturbed(&LocalParams::new(dim, x.clone())?)?)?;
        x[alpha] = -step;
        let minus = povm.probabilities(&PureState::perturbed(&LocalParams::new(dim, x)?)?)?;
        derivatives.push(
            plus.iter()
                .zip(&minus)
                .map(|(a, b)| (a - b) / (2.0 * step))
                .collect::<Vec<f64>>(),
        );
    }
    let mut c = DMatrix::zeros(p, p);
    for (xi, &prob) in p0.iter().enumerate() {
        if prob <= ORTHOGONALITY_THRESHOLD {
            continue;
        }
        for a in 0..p {
            for b in 0..p {
                c[(a, b)] += derivatives[a][xi] * derivatives[b][xi] / prob;
            }
        }
    }
    Ok(c)
}

fn check_pair(c: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<()> {
    if !q.is_square() {
        return Err(Error::NotPositiveDefinite);
    }
    if c.shape() != q.shape() {
        return Err(Error::DimensionMismatch {
            expected: q.nrows(),
            found: c.nrows(),
        });
    }
    Ok(())
}

/// The Gill–Massar quantity `tr(Q⁻¹ C)`, bounded above by `d - 1`.
pub fn gill_massar(c: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    check_pair(c, q)?;
    let chol = q.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(c).trace())
}

/// `Q^{-1/2}` by eigendecomposition.
fn inverse_sqrt(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = q.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    let scale = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(&eig.eigenvectors * scale * eig.eigenvectors.transpose())
}

/// `tr((Q^{-1/2} C Q^{-1/2})²)`; bounded below by `gm² / (2d - 2)` with
/// equality iff `C ∝ Q`.
pub fn fisher_symmetry_quantity(c: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    check_pair(c, q)?;
    let s = inverse_sqrt(q)?;
    let m = &s * c * &s;
    Ok((&m * &m).trace())
}

/// Numerical rank of a symmetric matrix.
pub fn fisher_rank(c: &DMatrix<f64>) -> usize {
    c.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .filter(|&&l| l > RANK_CUTOFF)
        .count()
}

/// Outcome of the Fisher-symmetry test `C = 2 I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfsicVerdict {
    pub is_pfsic: bool,
    /// Max-abs deviation of `2 b_j·b_k`, `2 c_j·c_k`, `2 b_j·c_k` from `δ_jk`, `δ_jk`, `0`.
    pub deviation: f64,
    pub tolerance: f64,
    pub n_outcomes: usize,
    /// Smallest possible outcome count for a PFSIC, `2d - 1`.
    pub min_outcomes: usize,
    /// Smallest `|⟨0|ψ^ξ⟩|²` over all outcomes.
    pub min_fiducial_overlap: f64,
}

/// Checks the Fisher-symmetry conditions on the full real decomposition and
/// that no outcome is orthogonal to the fiducial state.
pub fn is_pfsic(povm: &RankOnePovm, tol: f64) -> PfsicVerdict {
    let gauged = povm.gauge_fixed();
    let dim = povm.dim();
    let min_fiducial_overlap = gauged
        .fiducial_overlaps()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let deviation = match gauged.real_decomposition() {
        Ok(r) => symmetry_deviation(&r),
        Err(_) => f64::INFINITY,
    };
    PfsicVerdict {
        is_pfsic: deviation <= tol && min_fiducial_overlap > ORTHOGONALITY_THRESHOLD,
        deviation,
        tolerance: tol,
        n_outcomes: povm.n_outcomes(),
        min_outcomes: 2 * dim - 1,
        min_fiducial_overlap,
    }
}

fn symmetry_deviation(r: &RealDecomposition) -> f64 {
    let mut worst = 0.0_f64;
    for j in 1..r.dim() {
        for k in 1..r.dim() {
            let delta = if j == k { 1.0 } else { 0.0 };
            worst = worst
                .max((2.0 * dot(r.b(j), r.b(k)) - delta).abs())
                .max((2.0 * dot(r.c(j), r.c(k)) - delta).abs())
                .max((2.0 * dot(r.b(j), r.c(k))).abs());
        }
    }
    worst
}

/// Comparison of the Gram-form Fisher matrix against the finite-difference oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub step: f64,
    pub max_abs_deviation: f64,
}

/// Everything known about a POVM's local information at the fiducial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub dim: usize,
    pub n_outcomes: usize,
    #[serde(with = "rows")]
    pub classical: DMatrix<f64>,
    #[serde(with = "rows")]
    pub quantum: DMatrix<f64>,
    /// `tr(Q⁻¹ C)`.
    pub gm: f64,
    /// `d - 1`.
    pub gm_bound: f64,
    pub symmetry: f64,
    /// `(d - 1)² / (2d - 2)`.
    pub symmetry_floor: f64,
    pub rank: usize,
    pub pfsic: PfsicVerdict,
    /// Max-abs entry of `C - 2 I`.
    pub max_deviation_from_half_quantum: f64,
    /// Outcomes left out of the Fisher sums for being orthogonal to `|0⟩`.
    pub excluded_outcomes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_check: Option<FdCheck>,
}

impl FisherReport {
    pub fn compute(povm: &RankOnePovm) -> Result<Self> {
        let dim = povm.dim();
        let (classical, excluded_outcomes) =
            classical_fisher_with_exclusions(povm, ORTHOGONALITY_THRESHOLD)?;
        let quantum = quantum_fisher_pure(dim)?;
        let gm = gill_massar(&classical, &quantum)?;
        let symmetry = fisher_symmetry_quantity(&classical, &quantum)?;
        let half_q = &quantum * 0.5;
        let max_deviation_from_half_quantum = (&classical - half_q).amax();
        if !excluded_outcomes.is_empty() {
            log::debug!("excluded outcomes orthogonal to |0>: {excluded_outcomes:?}");
        }
        let d1 = (dim - 1) as f64;
        Ok(Self {
            dim,
            n_outcomes: povm.n_outcomes(),
            rank: fisher_rank(&classical),
            classical,
            quantum,
            gm,
            gm_bound: d1,
            symmetry,
            symmetry_floor: d1 * d1 / (2.0 * d1),
            pfsic: is_pfsic(povm, PFSIC_TOL),
            max_deviation_from_half_quantum,
            excluded_outcomes,
            fd_check: None,
        })
    }

    /// Adds the finite-difference oracle comparison.
    pub fn with_fd_check(mut self, povm: &RankOnePovm, step: f64) -> Result<Self> {
        let fd = classical_fisher_fd(povm, step)?;
        self.fd_check = Some(FdCheck {
            step,
            max_abs_deviation: (&fd - &self.classical).amax(),
        });
        Ok(self)
    }
}

/// Serializes a matrix as row-major nested arrays.
pub mod rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_row_iterator(
            rows.len(),
            ncols,
            rows.into_iter().flatten(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn basis(d: usize) -> RankOnePovm {
        RankOnePovm::from_vectors(
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                        .collect()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn quantum_fisher_is_four_identity() {
        assert_eq!(quantum_fisher_pure(2).unwrap(), DMatrix::identity(2, 2) * 4.0);
        assert_eq!(quantum_fisher_pure(3).unwrap(), DMatrix::identity(4, 4) * 4.0);
        assert_eq!(quantum_fisher_pure(5).unwrap(), DMatrix::identity(8, 8) * 4.0);
        assert_eq!(quantum_fisher_pure(1), Err(Error::DimensionTooSmall(1)));
    }

    #[test]
    fn computational_basis_has_no_information() {
        let b = basis(2);
        let (c, excluded) = classical_fisher_with_exclusions(&b, ORTHOGONALITY_THRESHOLD).unwrap();
        assert_eq!(c, DMatrix::zeros(2, 2));
        assert_eq!(excluded, vec![1]);
        assert!(classical_fisher_fd(&b, FD_STEP).unwrap().amax() < 1e-8);
        let q = quantum_fisher_pure(2).unwrap();
        assert_eq!(gill_massar(&c, &q).unwrap(), 0.0);
        assert_eq!(fisher_symmetry_quantity(&c, &q).unwrap(), 0.0);
        assert!(!is_pfsic(&b, PFSIC_TOL).is_pfsic);
    }

    #[test]
    fn gill_massar_and_symmetry_at_half_quantum() {
        for d in 2..6 {
            let p = 2 * d - 2;
            let c = DMatrix::identity(p, p) * 2.0;
            let q = quantum_fisher_pure(d).unwrap();
            let d1 = (d - 1) as f64;
            assert!((gill_massar(&c, &q).unwrap() - d1).abs() < 1e-12);
            assert!((fisher_symmetry_quantity(&c, &q).unwrap() - d1 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn general_positive_definite_q() {
        // Q = diag(1, 4): Q^{-1/2} C Q^{-1/2} = [[2, 1], [1, 1]] for C = [[2, 2], [2, 4]].
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 4.0]);
        assert!((gill_massar(&c, &q).unwrap() - 3.0).abs() < 1e-14);
        assert!((fisher_symmetry_quantity(&c, &q).unwrap() - 7.0).abs() < 1e-13);
    }

    #[test]
    fn singular_q_is_rejected() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let c = DMatrix::zeros(2, 2);
        assert_eq!(gill_massar(&c, &q), Err(Error::NotPositiveDefinite));
        assert_eq!(fisher_symmetry_quantity(&c, &q), Err(Error::NotPositiveDefinite));
        assert!(matches!(
            gill_massar(&DMatrix::zeros(3, 3), &DMatrix::identity(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn report_serializes_rows() {
        let report = FisherReport::compute(&basis(3)).unwrap();
        let v = serde_json::to_value(&report).unwrap();
        assert_eq!(v["classical"].as_array().unwrap().len(), 4);
        assert_eq!(v["quantum"][1][1], 4.0);
        assert_eq!(v["excluded_outcomes"], serde_json::json!([1, 2]));
        assert!(v.get("fd_check").is_none());
        let back: FisherReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, report);
    }
}
