//! Explicit Fisher-symmetric measurements and the orthogonal-mixing freedom.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::povm::{RankOnePovm, ORTHOGONALITY_THRESHOLD};

/// Tolerance on `OᵀO = 1` for orthogonal matrices and real bases.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

fn orthogonality_residual(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (m.transpose() * m - DMatrix::<f64>::identity(n, n)).amax()
}

/// A real orthogonal matrix used to mix POVM vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix(DMatrix<f64>);

impl OrthogonalMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::NotOrthogonal {
                residual: f64::INFINITY,
            });
        }
        let residual = orthogonality_residual(&entries);
        if !(residual <= ORTHOGONALITY_TOL) {
            return Err(Error::NotOrthogonal { residual });
        }
        Ok(Self(entries))
    }

    pub fn identity(size: usize) -> Self {
        Self(DMatrix::identity(size, size))
    }

    /// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
    /// signs of `R`'s diagonal folded into `Q`.
    pub fn random<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Self {
        let g = DMatrix::<f64>::from_fn(size, size, |_, _| rng.sample(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        for (j, mut col) in q.column_iter_mut().enumerate() {
            if r[(j, j)] < 0.0 {
                col.neg_mut();
            }
        }
        Self(q)
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `self · other`, i.e. `other` applied first.
    pub fn compose(&self, other: &OrthogonalMatrix) -> Result<Self> {
        if self.size() != other.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: other.size(),
            });
        }
        Ok(Self(&self.0 * &other.0))
    }
}

/// A real orthonormal basis `{u_j}` of `R^d`, stored as the rows of an
/// orthogonal matrix, whose first row `u_0` has strictly positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RealBasisSpec {
    rows: DMatrix<f64>,
}

impl RealBasisSpec {
    /// Accepts any real orthogonal matrix whose first row has no zero entry;
    /// columns with a negative first-row entry are sign flipped.
    pub fn new(mut rows: DMatrix<f64>) -> Result<Self> {
        if !rows.is_square() {
            return Err(Error::InvalidBasis(format!(
                "expected a square matrix, got {}x{}",
                rows.nrows(),
                rows.ncols()
            )));
        }
        if rows.nrows() < 2 {
            return Err(Error::DimensionTooSmall(rows.nrows()));
        }
        let residual = orthogonality_residual(&rows);
        if !(residual <= ORTHOGONALITY_TOL) {
            return Err(Error::InvalidBasis(format!(
                "rows are not orthonormal (residual {residual:e})"
            )));
        }
        for j in 0..rows.ncols() {
            let u0 = rows[(0, j)];
            if u0.abs() <= ORTHOGONALITY_THRESHOLD.sqrt() {
                return Err(Error::InvalidBasis(format!("u_0 has a zero entry at {j}")));
            }
            if u0 < 0.0 {
                rows.column_mut(j).neg_mut();
            }
        }
        Ok(Self { rows })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidBasis("rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_row_iterator(d, d, rows.iter().flatten().copied()))
    }

    pub fn dim(&self) -> usize {
        self.rows.nrows()
    }

    /// `u_j^ξ`.
    pub fn component(&self, j: usize, xi: usize) -> f64 {
        self.rows[(j, xi)]
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }
}

/// Orthogonal basis with first row `(1, ..., 1)/√d`. The other rows are the
/// natural basis vectors projected orthogonal to the first row and then
/// corrected by a common multiple of `e_0 + u_0`, sign flipped so that the
/// qubit case gives `(1, -1)/√2`.
pub fn symmetric_real_basis(d: usize) -> Result<RealBasisSpec> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let s = (d as f64).sqrt();
    let t = 1.0 / (s + 1.0);
    let rows = DMatrix::from_fn(d, d, |j, xi| {
        let u0 = 1.0 / s;
        if j == 0 {
            u0
        } else {
            let e0 = if xi == 0 { 1.0 } else { 0.0 };
            let ej = if xi == j { 1.0 } else { 0.0 };
            -ej + t * (e0 + u0)
        }
    });
    RealBasisSpec::new(rows)
}

/// The minimal (`2d - 1` outcome) Fisher-symmetric POVM with uniform fiducial
/// overlaps `b_0^ξ = 1/√n`. For `d = 2` this is the equatorial trine.
pub fn minimal_pfsic(d: usize) -> Result<RankOnePovm> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let n = 2 * d - 1;
    let s = (n as f64).sqrt();
    let t = 1.0 / (s + 1.0);
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    // Common part of every √2 b_j and √2 c_j: -(e_0 + b_0)/(√n + 1).
    let shift = |xi: usize| -t * (if xi == 0 { 1.0 } else { 0.0 } + 1.0 / s);
    let vectors = (0..n)
        .map(|xi| {
            let mut v = Vec::with_capacity(d);
            v.push(Complex64::new(1.0 / s, 0.0));
            for j in 1..d {
                let b = r2 * (if xi == 2 * j - 1 { 1.0 } else { 0.0 } + shift(xi));
                let c = r2 * (if xi == 2 * j { 1.0 } else { 0.0 } + shift(xi));
                v.push(Complex64::new(b, c));
            }
            v
        })
        .collect();
    RankOnePovm::from_vectors(vectors)
}

/// Coin flip between the real basis `χ^ξ = Σ_j u_j^ξ |j⟩` (probability
/// `p_chi`) and the basis `τ^ξ` whose `|0⟩` components are rephased to
/// `-i u_0^ξ`. The resulting classical Fisher matrix is
/// `diag(4 p_χ, 4 p_τ, 4 p_χ, ...)`; `p_chi = 1/2` is Fisher symmetric.
///
/// When one weight is zero its basis is dropped, leaving `d` outcomes.
pub fn two_basis_pfsic(
    d: usize,
    p_chi: f64,
    basis: Option<&RealBasisSpec>,
) -> Result<RankOnePovm> {
    if !(0.0..=1.0).contains(&p_chi) {
        return Err(Error::InvalidWeight(p_chi));
    }
    let default_basis;
    let basis = match basis {
        Some(b) => {
            if b.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: b.dim(),
                });
            }
            b
        }
        None => {
            default_basis = symmetric_real_basis(d)?;
            &default_basis
        }
    };
    let p_tau = 1.0 - p_chi;
    let mut vectors = Vec::with_capacity(2 * d);
    if p_chi > 0.0 {
        let w = p_chi.sqrt();
        for xi in 0..d {
            vectors.push(
                (0..d)
                    .map(|j| Complex64::new(w * basis.component(j, xi), 0.0))
                    .collect(),
            );
        }
    }
    if p_tau > 0.0 {
        let w = p_tau.sqrt();
        for xi in 0..d {
            vectors.push(
                (0..d)
                    .map(|j| {
                        let u = w * basis.component(j, xi);
                        if j == 0 {
                            Complex64::new(0.0, -u)
                        } else {
                            Complex64::new(u, 0.0)
                        }
                    })
                    .collect(),
            );
        }
    }
    Ok(RankOnePovm::from_vectors(vectors)?.gauge_fixed())
}

/// Whether mixing may produce outcomes orthogonal to the fiducial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixMode {
    #[default]
    Strict,
    Lenient,
}

/// `Σ_η O^ξ_η |ψ^η⟩` for every row `ξ` of `o`; missing `ψ^η` count as zero.
fn mix_vectors(source: &[Vec<Complex64>], o: &OrthogonalMatrix) -> Vec<Vec<Complex64>> {
    let d = source.first().map_or(0, Vec::len);
    (0..o.size())
        .map(|xi| {
            let mut phi = vec![Complex64::new(0.0, 0.0); d];
            for (eta, psi) in source.iter().enumerate() {
                let w = o.matrix()[(xi, eta)];
                if w != 0.0 {
                    for (p, a) in phi.iter_mut().zip(psi) {
                        *p += a * w;
                    }
                }
            }
            phi
        })
        .collect()
}

/// `|φ^ξ⟩ = Σ_η O^ξ_η |ψ^η⟩`, after padding the POVM with zero vectors up to
/// the size of `o`, then gauge fixed. In strict mode an outcome with
/// `|⟨0|φ^ξ⟩|²` at or below the orthogonality threshold is an error.
pub fn orthogonal_mix(povm: &RankOnePovm, o: &OrthogonalMatrix, mode: MixMode) -> Result<RankOnePovm> {
    let m = o.size();
    let n = povm.n_outcomes();
    if m < n {
        return Err(Error::MixTooSmall { size: m, outcomes: n });
    }
    let mixed = RankOnePovm::from_vectors(mix_vectors(povm.vectors(), o))?.gauge_fixed();
    if mode == MixMode::Strict {
        if let Some((index, &overlap)) = mixed
            .fiducial_overlaps()
            .iter()
            .enumerate()
            .find(|(_, &p)| p <= ORTHOGONALITY_THRESHOLD)
        {
            return Err(Error::OrthogonalOutcome { index, overlap });
        }
    }
    Ok(mixed)
}

/// Haar-random `d × d` unitary, returned as its columns.
pub fn random_unitary_columns<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    let g = DMatrix::<Complex64>::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let r = qr.r();
    let q = qr.q();
    (0..d)
        .map(|j| {
            let rjj = r[(j, j)];
            let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
            q.column(j).iter().map(|a| a * phase).collect()
        })
        .collect()
}

/// A random valid rank-one POVM with `n >= d` outcomes: the columns of a
/// random unitary, padded with zero vectors and mixed by a random orthogonal
/// matrix. With `orthogonal_outcome`, the last outcome is a vector orthogonal
/// to `|0⟩` that is kept out of the mixing.
pub fn random_rank_one_povm<R: Rng + ?Sized>(
    d: usize,
    n: usize,
    orthogonal_outcome: bool,
    rng: &mut R,
) -> Result<RankOnePovm> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    if n < d {
        return Err(Error::MixTooSmall { size: n, outcomes: d });
    }
    let mut columns = random_unitary_columns(d, rng);
    let zero = Complex64::new(0.0, 0.0);
    let pinned = if orthogonal_outcome {
        // Rotate the first two columns so that the second has no |0⟩ component.
        let (a0, a1) = (columns[0][0], columns[1][0]);
        let r = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        let (u, v) = (columns[0].clone(), columns[1].clone());
        columns[0] = u.iter().zip(&v).map(|(x, y)| (x * a0.conj() + y * a1.conj()) / r).collect();
        let mut w: Vec<Complex64> = u.iter().zip(&v).map(|(x, y)| (x * a1 - y * a0) / r).collect();
        w[0] = zero;
        columns.remove(1);
        Some(w)
    } else {
        None
    };
    let free = n - usize::from(pinned.is_some());
    let o = OrthogonalMatrix::random(free, rng);
    let mut vectors = mix_vectors(&columns, &o);
    vectors.extend(pinned);
    RankOnePovm::from_vectors(vectors)
}

/// Serializable recipe for a POVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstructionDescriptor {
    Minimal {
        d: usize,
    },
    #[serde(alias = "two-basis")]
    TwoBasis {
        d: usize,
        p_chi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<Vec<Vec<f64>>>,
    },
    /// Random orthogonal mix of `base`, seeded; `size` embeds into more outcomes.
    Mix {
        base: Box<ConstructionDescriptor>,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        size: Option<usize>,
        #[serde(default)]
        mode: MixMode,
    },
}

impl ConstructionDescriptor {
    pub fn build(&self) -> Result<RankOnePovm> {
        match self {
            Self::Minimal { d } => minimal_pfsic(*d),
            Self::TwoBasis { d, p_chi, basis } => {
                let basis = basis.as_deref().map(RealBasisSpec::from_rows).transpose()?;
                two_basis_pfsic(*d, *p_chi, basis.as_ref())
            }
            Self::Mix {
                base,
                seed,
                size,
                mode,
            } => {
                let base = base.build()?;
                let m = size.unwrap_or(base.n_outcomes());
                if m < base.n_outcomes() {
                    return Err(Error::MixTooSmall {
                        size: m,
                        outcomes: base.n_outcomes(),
                    });
                }
                let mut rng = ChaCha20Rng::seed_from_u64(*seed);
                let o = OrthogonalMatrix::random(m, &mut rng);
                orthogonal_mix(&base, &o, *mode)
            }
        }
    }
}
