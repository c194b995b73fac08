//! Monte Carlo local tomography around the fiducial state.
//!
//! Each trial draws `N` outcomes from the POVM at a perturbed state and
//! estimates the local parameters with the one-step linearized estimator
//! `x̂ = C⁻¹ s`, `s_α = Σ_ξ D^ξ_α f^ξ / p_0^ξ`, whose covariance is `C⁻¹/N`
//! to leading order. Trials use independent ChaCha20 streams keyed by trial
//! index, so results do not depend on how the trials are scheduled.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{minimal_pfsic, ConstructionDescriptor};
use crate::error::{Error, Result};
use crate::fisher::{classical_fisher, derivative_rows, rows, RANK_CUTOFF};
use crate::povm::{param_label, LocalParams, PureState, RankOnePovm, ORTHOGONALITY_THRESHOLD};

/// Name of the random generator recorded in every [`SimReport`].
pub const GENERATOR: &str = "ChaCha20Rng::seed_from_u64(seed), stream = trial index";

/// The generator for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Multinomial draw of `shots` outcomes by sequential conditional binomials.
pub fn sample_counts<R: Rng + ?Sized>(probabilities: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; probabilities.len()];
    let mut remaining = shots;
    let mut mass = 1.0_f64;
    let last = probabilities.len().saturating_sub(1);
    for (i, &p) in probabilities.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == last {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let k = Binomial::new(remaining, q)
            .expect("binomial parameter clamped to [0, 1]")
            .sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}

/// Draws `shots` outcomes of `povm` at `state`, deterministic in `seed`.
pub fn sample_outcomes(povm: &RankOnePovm, state: &PureState, shots: u64, seed: u64) -> Result<Vec<u64>> {
    let probabilities = povm.probabilities(state)?;
    Ok(sample_counts(&probabilities, shots, &mut trial_rng(seed, 0)))
}

/// Precomputed one-step estimator for a locally informationally complete POVM.
#[derive(Debug, Clone)]
pub struct LocalEstimator {
    dim: usize,
    n_outcomes: usize,
    fisher_inverse: DMatrix<f64>,
    /// `(outcome, D^ξ / p_0^ξ)` for outcomes not orthogonal to `|0⟩`.
    weights: Vec<(usize, DVector<f64>)>,
}

impl LocalEstimator {
    pub fn new(povm: &RankOnePovm) -> Result<Self> {
        let c = classical_fisher(povm)?;
        let min_eigenvalue = c
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &l| m.min(l));
        if !(min_eigenvalue > RANK_CUTOFF) {
            return Err(Error::NotLocallyComplete { min_eigenvalue });
        }
        let fisher_inverse = c
            .cholesky()
            .ok_or(Error::NotLocallyComplete { min_eigenvalue })?
            .inverse();
        let decomposition = povm.gauge_fixed().real_decomposition()?;
        let weights = derivative_rows(&decomposition, ORTHOGONALITY_THRESHOLD)
            .into_iter()
            .map(|(xi, p0, row)| (xi, DVector::from_vec(row) / p0))
            .collect();
        Ok(Self {
            dim: povm.dim(),
            n_outcomes: povm.n_outcomes(),
            fisher_inverse,
            weights,
        })
    }

    /// `C⁻¹`, the per-shot covariance of the estimator.
    pub fn fisher_inverse(&self) -> &DMatrix<f64> {
        &self.fisher_inverse
    }

    pub fn estimate(&self, counts: &[u64]) -> Result<LocalParams> {
        if counts.len() != self.n_outcomes {
            return Err(Error::DimensionMismatch {
                expected: self.n_outcomes,
                found: counts.len(),
            });
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidConfig("no shots recorded".into()));
        }
        let mut s = DVector::zeros(2 * self.dim - 2);
        for (xi, w) in &self.weights {
            s.axpy(counts[*xi] as f64 / total as f64, w, 1.0);
        }
        let x = &self.fisher_inverse * s;
        LocalParams::new(self.dim, x.iter().copied().collect())
    }
}

/// One-shot convenience around [`LocalEstimator`].
pub fn estimate_local(povm: &RankOnePovm, counts: &[u64]) -> Result<LocalParams> {
    LocalEstimator::new(povm)?.estimate(counts)
}

/// Where the simulated POVM comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PovmSource {
    Descriptor(ConstructionDescriptor),
    Explicit(RankOnePovm),
}

impl PovmSource {
    pub fn resolve(&self) -> Result<RankOnePovm> {
        match self {
            Self::Descriptor(d) => d.build(),
            Self::Explicit(p) => Ok(p.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub povm: PovmSource,
    /// Local parameters of the true state; defaults to the fiducial state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_params: Option<LocalParams>,
    pub shots_per_trial: u64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub generator: String,
    pub seed: u64,
    pub dim: usize,
    pub n_outcomes: usize,
    pub shots_per_trial: u64,
    pub trials: usize,
    pub true_params: Vec<f64>,
    /// One row per trial.
    pub estimates: Vec<Vec<f64>>,
    pub empirical_mean: Vec<f64>,
    /// Sample covariance with `M - 1` normalization; `None` when `M < 2`.
    #[serde(with = "option_rows")]
    pub empirical_cov: Option<DMatrix<f64>>,
    /// `(N C)⁻¹`.
    #[serde(with = "rows")]
    pub predicted_cov: DMatrix<f64>,
    /// Max over `α` of `|cov_αα - pred_αα| / pred_αα`.
    pub max_relative_diag_error: Option<f64>,
    pub offdiag_max_abs: Option<f64>,
    pub insufficient_trials: bool,
}

mod option_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(super::rows::to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<f64>>, D::Error> {
        let rows = Option::<Vec<Vec<f64>>>::deserialize(d)?;
        Ok(rows.map(|r| {
            let n = r.len();
            let m = r.first().map_or(0, Vec::len);
            DMatrix::from_row_iterator(n, m, r.into_iter().flatten())
        }))
    }
}

/// Runs `config.trials` independent sample-and-estimate trials in parallel.
pub fn run_trials(config: &SimConfig) -> Result<SimReport> {
    if config.shots_per_trial == 0 || config.trials == 0 {
        return Err(Error::InvalidConfig(
            "shots_per_trial and trials must both be at least 1".into(),
        ));
    }
    let povm = config.povm.resolve()?;
    let dim = povm.dim();
    let truth = match &config.true_params {
        Some(p) if p.dim() != dim => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            })
        }
        Some(p) => p.clone(),
        None => LocalParams::zeros(dim)?,
    };
    let estimator = LocalEstimator::new(&povm)?;
    let probabilities = povm.probabilities(&PureState::perturbed(&truth)?)?;
    for (xi, _) in &estimator.weights {
        if !(probabilities[*xi] > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "outcome {xi} has zero probability at the true state"
            )));
        }
    }

    let shots = config.shots_per_trial;
    let estimates: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, t as u64);
            let counts = sample_counts(&probabilities, shots, &mut rng);
            estimator.estimate(&counts).map(|x| x.as_slice().to_vec())
        })
        .collect::<Result<_>>()?;

    let p = 2 * dim - 2;
    let m = estimates.len();
    let mean: Vec<f64> = (0..p)
        .map(|a| estimates.iter().map(|e| e[a]).sum::<f64>() / m as f64)
        .collect();
    let predicted_cov = estimator.fisher_inverse() / shots as f64;
    let (empirical_cov, max_relative_diag_error, offdiag_max_abs) = if m >= 2 {
        let mut cov = DMatrix::<f64>::zeros(p, p);
        for e in &estimates {
            for a in 0..p {
                for b in a..p {
                    cov[(a, b)] += (e[a] - mean[a]) * (e[b] - mean[b]);
                }
            }
        }
        for a in 0..p {
            for b in a..p {
                cov[(a, b)] /= (m - 1) as f64;
                cov[(b, a)] = cov[(a, b)];
            }
        }
        let rel = (0..p)
            .map(|a| (cov[(a, a)] - predicted_cov[(a, a)]).abs() / predicted_cov[(a, a)])
            .fold(0.0_f64, f64::max);
        let off = (0..p)
            .flat_map(|a| (0..p).filter(move |&b| b != a).map(move |b| (a, b)))
            .map(|ab| cov[ab].abs())
            .fold(0.0_f64, f64::max);
        (Some(cov), Some(rel), Some(off))
    } else {
        (None, None, None)
    };

    Ok(SimReport {
        generator: GENERATOR.to_string(),
        seed: config.seed,
        dim,
        n_outcomes: povm.n_outcomes(),
        shots_per_trial: shots,
        trials: config.trials,
        true_params: truth.as_slice().to_vec(),
        estimates,
        empirical_mean: mean,
        empirical_cov,
        predicted_cov,
        max_relative_diag_error,
        offdiag_max_abs,
        insufficient_trials: m < 2,
    })
}

impl SimReport {
    /// Per-trial estimates, one row per trial, columns `x1_0, x1_1, ...`.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (0..2 * self.dim - 2)
            .map(|a| {
                let (k, sigma) = param_label(a);
                format!("x{k}_{sigma}")
            })
            .collect();
        w.write_record(&header)?;
        for row in &self.estimates {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trine probabilities for a qubit state and for its mirror image under
/// `r_z → -r_z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityPair {
    pub bloch: [f64; 3],
    pub flipped_bloch: [f64; 3],
    pub probabilities: Vec<f64>,
    pub flipped_probabilities: Vec<f64>,
    pub max_abs_difference: f64,
}

/// The trine cannot tell apart states related by a flip of the Bloch
/// z-component, although it is locally informationally complete at `|0⟩`.
pub fn trine_ambiguity_demo(x: &LocalParams) -> Result<AmbiguityPair> {
    if x.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: x.dim(),
        });
    }
    let trine = minimal_pfsic(2)?;
    let state = PureState::perturbed(x)?;
    let bloch = state.bloch_vector().expect("qubit state");
    let flipped_bloch = [bloch[0], bloch[1], -bloch[2]];
    let flipped = PureState::from_bloch(flipped_bloch)?;
    let probabilities = trine.probabilities(&state)?;
    let flipped_probabilities = trine.probabilities(&flipped)?;
    let max_abs_difference = probabilities
        .iter()
        .zip(&flipped_probabilities)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(AmbiguityPair {
        bloch,
        flipped_bloch,
        probabilities,
        flipped_probabilities,
        max_abs_difference,
    })
}
