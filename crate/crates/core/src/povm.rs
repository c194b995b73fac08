//! Pure states, local parameters around the fiducial state, and rank-one POVMs.
//!
//! The fiducial state is always the basis vector `|0⟩`. A state near it is
//! described by `2d - 2` real parameters `x^{k,σ}`, the real (`σ = 0`) and
//! imaginary (`σ = 1`) parts of the amplitude on `|k⟩`, stored in the order
//! `(x^{1,0}, x^{1,1}, ..., x^{d-1,0}, x^{d-1,1})`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold on `|⟨0|ψ^ξ⟩|²` below which an outcome counts as orthogonal to
/// the fiducial state.
pub const ORTHOGONALITY_THRESHOLD: f64 = 1e-12;

/// Max-abs residual accepted for `Σ_ξ |ψ^ξ⟩⟨ψ^ξ| = 1` and the real Gram conditions.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Tolerance on state normalization.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Position of `x^{k,σ}` in the flat parameter vector, `k ∈ 1..d`, `σ ∈ {0, 1}`.
#[inline]
pub fn param_index(k: usize, sigma: usize) -> usize {
    debug_assert!(k >= 1 && sigma < 2);
    2 * (k - 1) + sigma
}

/// Inverse of [`param_index`].
#[inline]
pub fn param_label(alpha: usize) -> (usize, usize) {
    (alpha / 2 + 1, alpha % 2)
}

/// A normalized pure state in dimension `d >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Normalizes `amplitudes` into a state.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionTooSmall(amplitudes.len()));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::DegenerateState);
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    /// The basis state `|0⟩`.
    pub fn fiducial(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    /// `|0⟩ + Σ_k (x^{k0} + i x^{k1}) |k⟩`, normalized exactly rather than to
    /// linear order so that outcome probabilities always form a distribution.
    pub fn perturbed(params: &LocalParams) -> Result<Self> {
        let dim = params.dim();
        if params.max_abs() > 0.2 {
            log::warn!(
                "local parameters up to {:.3} exceed the linear regime around the fiducial state",
                params.max_abs()
            );
        }
        let mut amplitudes = Vec::with_capacity(dim);
        amplitudes.push(Complex64::new(1.0, 0.0));
        for k in 1..dim {
            amplitudes.push(Complex64::new(params.get(k, 0), params.get(k, 1)));
        }
        Self::new(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Bloch vector `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)` of a qubit state; `None` unless `d = 2`.
    pub fn bloch_vector(&self) -> Option<[f64; 3]> {
        if self.dim() != 2 {
            return None;
        }
        let (a0, a1) = (self.amplitudes[0], self.amplitudes[1]);
        let coherence = a0.conj() * a1;
        Some([
            2.0 * coherence.re,
            2.0 * coherence.im,
            a0.norm_sqr() - a1.norm_sqr(),
        ])
    }

    /// The qubit state with the given Bloch vector (unit length assumed),
    /// with a real nonnegative `|0⟩` amplitude.
    pub fn from_bloch(bloch: [f64; 3]) -> Result<Self> {
        let [rx, ry, rz] = bloch;
        let a0 = ((1.0 + rz) / 2.0).max(0.0).sqrt();
        let a1 = if a0 > 1e-300 {
            Complex64::new(rx, ry) / (2.0 * a0)
        } else {
            Complex64::new(1.0, 0.0)
        };
        Self::new(vec![Complex64::new(a0, 0.0), a1])
    }
}

/// The `2d - 2` local coordinates of a pure state near `|0⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LocalParams {
    dim: usize,
    x: Vec<f64>,
}

impl LocalParams {
    pub fn new(dim: usize, x: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if x.len() != 2 * dim - 2 {
            return Err(Error::DimensionMismatch {
                expected: 2 * dim - 2,
                found: x.len(),
            });
        }
        Ok(Self { dim, x })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(dim, vec![0.0; 2 * dim.max(1) - 2])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    /// `x^{k,σ}`.
    pub fn get(&self, k: usize, sigma: usize) -> f64 {
        self.x[param_index(k, sigma)]
    }

    pub fn max_abs(&self) -> f64 {
        self.x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl TryFrom<Vec<f64>> for LocalParams {
    type Error = Error;

    fn try_from(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "local parameter vector must have even, nonzero length; got {}",
                x.len()
            )));
        }
        Self::new(x.len() / 2 + 1, x)
    }
}

impl From<LocalParams> for Vec<f64> {
    fn from(p: LocalParams) -> Self {
        p.x
    }
}

/// A POVM with rank-one elements `E^ξ = |ψ^ξ⟩⟨ψ^ξ|`.
///
/// Zero vectors are allowed; they appear when a POVM is embedded into more
/// outcomes before orthogonal mixing.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOnePovm {
    dim: usize,
    vectors: Vec<Vec<Complex64>>,
}

impl RankOnePovm {
    /// Validates completeness `Σ_ξ (a^ξ_j)* a^ξ_k = δ_jk` to [`COMPLETENESS_TOL`].
    pub fn from_vectors(vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let first = vectors.first().ok_or(Error::EmptyPovm)?;
        let dim = first.len();
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let povm = Self { dim, vectors };
        let residual = povm.completeness_residual();
        if !(residual <= COMPLETENESS_TOL) {
            return Err(Error::Incomplete { residual });
        }
        Ok(povm)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// Max-abs entry of `Σ_ξ |ψ^ξ⟩⟨ψ^ξ| - 1`.
    pub fn completeness_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..self.dim {
            for k in j..self.dim {
                let sum: Complex64 = self.vectors.iter().map(|v| v[j].conj() * v[k]).sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((sum - target).norm());
            }
        }
        worst
    }

    /// The POVM element `|ψ^ξ⟩⟨ψ^ξ|` as a row-major `d × d` array.
    pub fn element(&self, outcome: usize) -> Vec<Vec<Complex64>> {
        let v = &self.vectors[outcome];
        v.iter()
            .map(|vj| v.iter().map(|vk| vj * vk.conj()).collect())
            .collect()
    }

    /// `|⟨0|ψ^ξ⟩|²` for every outcome, the outcome probabilities at `|0⟩`.
    pub fn fiducial_overlaps(&self) -> Vec<f64> {
        self.vectors.iter().map(|v| v[0].norm_sqr()).collect()
    }

    /// Rephases every vector so that `⟨0|ψ^ξ⟩` is real and nonnegative.
    /// Vectors orthogonal to `|0⟩` are left as they are.
    pub fn gauge_fixed(&self) -> Self {
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                let a0 = v[0];
                let r = a0.norm();
                if r == 0.0 {
                    return v.clone();
                }
                let phase = a0.conj() / r;
                let mut out: Vec<Complex64> = v.iter().map(|a| a * phase).collect();
                out[0] = Complex64::new(r, 0.0);
                out
            })
            .collect();
        Self {
            dim: self.dim,
            vectors,
        }
    }

    /// Splits the gauge-fixed amplitudes `a^ξ_k = b^ξ_k + i c^ξ_k` into real
    /// `n`-vectors and checks the real form of completeness.
    pub fn real_decomposition(&self) -> Result<RealDecomposition> {
        for (index, v) in self.vectors.iter().enumerate() {
            if v[0].im != 0.0 || v[0].re < 0.0 {
                return Err(Error::NotGaugeFixed { index });
            }
        }
        let n = self.n_outcomes();
        let mut b = vec![vec![0.0; n]; self.dim];
        let mut c = vec![vec![0.0; n]; self.dim];
        for (xi, v) in self.vectors.iter().enumerate() {
            for (k, a) in v.iter().enumerate() {
                b[k][xi] = a.re;
                c[k][xi] = a.im;
            }
        }
        let decomposition = RealDecomposition {
            dim: self.dim,
            n_outcomes: n,
            b,
            c,
        };
        let residual = decomposition.gram_residual();
        if !(residual <= COMPLETENESS_TOL) {
            return Err(Error::GramViolation { residual });
        }
        Ok(decomposition)
    }

    /// `p^ξ = |⟨ψ^ξ|Ψ⟩|²`.
    pub fn probabilities(&self, state: &PureState) -> Result<Vec<f64>> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: state.dim(),
            });
        }
        Ok(self
            .vectors
            .iter()
            .map(|v| {
                v.iter()
                    .zip(state.amplitudes())
                    .map(|(a, s)| a.conj() * s)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect())
    }
}

/// Real and imaginary parts of the gauge-fixed POVM amplitudes, gathered into
/// `n`-vectors `b_k` and `c_k` for `k = 0..d`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealDecomposition {
    dim: usize,
    n_outcomes: usize,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
}

impl RealDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn b(&self, k: usize) -> &[f64] {
        &self.b[k]
    }

    pub fn c(&self, k: usize) -> &[f64] {
        &self.c[k]
    }

    /// Max violation of `b_j·b_k + c_j·c_k = δ_jk` and `b_j·c_k - c_j·b_k = 0`.
    pub fn gram_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..self.dim {
            for k in j..self.dim {
                let target = if j == k { 1.0 } else { 0.0 };
                let sym = dot(&self.b[j], &self.b[k]) + dot(&self.c[j], &self.c[k]);
                let anti = dot(&self.b[j], &self.c[k]) - dot(&self.c[j], &self.b[k]);
                worst = worst.max((sym - target).abs()).max(anti.abs());
            }
        }
        worst
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// On-disk form: `{ "dim": d, "n": n, "vectors": [[[re, im], ...], ...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmFile {
    pub dim: usize,
    pub n: usize,
    pub vectors: Vec<Vec<[f64; 2]>>,
}

impl From<&RankOnePovm> for PovmFile {
    fn from(povm: &RankOnePovm) -> Self {
        Self {
            dim: povm.dim,
            n: povm.n_outcomes(),
            vectors: povm
                .vectors
                .iter()
                .map(|v| v.iter().map(|a| [a.re, a.im]).collect())
                .collect(),
        }
    }
}

impl TryFrom<PovmFile> for RankOnePovm {
    type Error = Error;

    fn try_from(file: PovmFile) -> Result<Self> {
        if file.vectors.len() != file.n {
            return Err(Error::DimensionMismatch {
                expected: file.n,
                found: file.vectors.len(),
            });
        }
        if let Some(v) = file.vectors.iter().find(|v| v.len() != file.dim) {
            return Err(Error::DimensionMismatch {
                expected: file.dim,
                found: v.len(),
            });
        }
        RankOnePovm::from_vectors(
            file.vectors
                .into_iter()
                .map(|v| v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                .collect(),
        )
    }
}

impl Serialize for RankOnePovm {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PovmFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RankOnePovm {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = PovmFile::deserialize(deserializer)?;
        RankOnePovm::try_from(file).map_err(serde::de::Error::custom)
    }
}
