//! Python bindings: `import pfsic`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use pfsic_core::constructions::random_rank_one_povm;
use pfsic_core::fisher::{fisher_rank, PFSIC_TOL};
use pfsic_core::tomography::{trial_rng, PovmSource};
use pfsic_core::{
    ConstructionDescriptor, FisherReport, LocalParams, MixMode, OrthogonalMatrix, RankOnePovm,
    SimConfig,
};

fn err(e: pfsic_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts any serializable report into a plain Python object via JSON.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_row_iterator(n, n, rows.iter().flatten().copied()))
}

fn params(d: usize, x: Vec<f64>) -> PyResult<LocalParams> {
    LocalParams::new(d, x).map_err(err)
}

#[pyclass(name = "PureState", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPureState(pfsic_core::PureState);

#[pymethods]
impl PyPureState {
    #[new]
    fn new(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        pfsic_core::PureState::new(amplitudes).map(Self).map_err(err)
    }

    #[staticmethod]
    fn fiducial(d: usize) -> PyResult<Self> {
        pfsic_core::PureState::fiducial(d).map(Self).map_err(err)
    }

    /// State at local coordinates `x = [x^{1,0}, x^{1,1}, x^{2,0}, ...]`.
    #[staticmethod]
    fn perturbed(x: Vec<f64>) -> PyResult<Self> {
        let p = LocalParams::try_from(x).map_err(err)?;
        pfsic_core::PureState::perturbed(&p).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn bloch_vector(&self) -> Option<[f64; 3]> {
        self.0.bloch_vector()
    }

    fn __repr__(&self) -> String {
        format!("PureState(dim={})", self.0.dim())
    }
}

#[pyclass(name = "Povm", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPovm(RankOnePovm);

#[pymethods]
impl PyPovm {
    #[new]
    fn new(vectors: Vec<Vec<Complex64>>) -> PyResult<Self> {
        RankOnePovm::from_vectors(vectors).map(Self).map_err(err)
    }

    #[staticmethod]
    fn minimal(d: usize) -> PyResult<Self> {
        pfsic_core::minimal_pfsic(d).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (d, p_chi=0.5))]
    fn two_basis(d: usize, p_chi: f64) -> PyResult<Self> {
        pfsic_core::two_basis_pfsic(d, p_chi, None).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (d, n, seed, orthogonal_outcome=false))]
    fn random(d: usize, n: usize, seed: u64, orthogonal_outcome: bool) -> PyResult<Self> {
        random_rank_one_povm(d, n, orthogonal_outcome, &mut trial_rng(seed, 0))
            .map(Self)
            .map_err(err)
    }

    /// Builds from a construction descriptor such as `{"kind": "minimal", "d": 3}`.
    #[staticmethod]
    fn from_descriptor(descriptor: &str) -> PyResult<Self> {
        let desc: ConstructionDescriptor = serde_json::from_str(descriptor).map_err(json_err)?;
        desc.build().map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(json_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.0).map_err(json_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn n_outcomes(&self) -> usize {
        self.0.n_outcomes()
    }

    #[getter]
    fn vectors(&self) -> Vec<Vec<Complex64>> {
        self.0.vectors().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.n_outcomes()
    }

    fn completeness_residual(&self) -> f64 {
        self.0.completeness_residual()
    }

    fn gauge_fixed(&self) -> Self {
        Self(self.0.gauge_fixed())
    }

    fn probabilities(&self, state: &PyPureState) -> PyResult<Vec<f64>> {
        self.0.probabilities(&state.0).map_err(err)
    }

    fn classical_fisher(&self) -> PyResult<Vec<Vec<f64>>> {
        pfsic_core::classical_fisher(&self.0).map(|c| rows(&c)).map_err(err)
    }

    #[pyo3(signature = (step=pfsic_core::fisher::FD_STEP))]
    fn classical_fisher_fd(&self, step: f64) -> PyResult<Vec<Vec<f64>>> {
        pfsic_core::classical_fisher_fd(&self.0, step)
            .map(|c| rows(&c))
            .map_err(err)
    }

    fn fisher_rank(&self) -> PyResult<usize> {
        pfsic_core::classical_fisher(&self.0)
            .map(|c| fisher_rank(&c))
            .map_err(err)
    }

    #[pyo3(signature = (fd_check=false))]
    fn fisher_report<'py>(&self, py: Python<'py>, fd_check: bool) -> PyResult<Bound<'py, PyAny>> {
        let mut report = FisherReport::compute(&self.0).map_err(err)?;
        if fd_check {
            report = report
                .with_fd_check(&self.0, pfsic_core::fisher::FD_STEP)
                .map_err(err)?;
        }
        to_py(py, &report)
    }

    #[pyo3(signature = (tol=PFSIC_TOL))]
    fn is_pfsic<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &pfsic_core::is_pfsic(&self.0, tol))
    }

    /// Mixes with `matrix` (row-major) or, if absent, a random orthogonal matrix from `seed`.
    #[pyo3(signature = (matrix=None, seed=0, size=None, lenient=false))]
    fn mix(
        &self,
        matrix: Option<Vec<Vec<f64>>>,
        seed: u64,
        size: Option<usize>,
        lenient: bool,
    ) -> PyResult<Self> {
        let o = match matrix {
            Some(m) => OrthogonalMatrix::new(self::matrix(&m)?).map_err(err)?,
            None => OrthogonalMatrix::random(
                size.unwrap_or(self.0.n_outcomes()),
                &mut trial_rng(seed, 0),
            ),
        };
        let mode = if lenient { MixMode::Lenient } else { MixMode::Strict };
        pfsic_core::orthogonal_mix(&self.0, &o, mode)
            .map(Self)
            .map_err(err)
    }

    /// Local estimate `x̂` from outcome counts.
    fn estimate(&self, counts: Vec<u64>) -> PyResult<Vec<f64>> {
        pfsic_core::estimate_local(&self.0, &counts)
            .map(|x| x.as_slice().to_vec())
            .map_err(err)
    }

    fn sample(&self, state: &PyPureState, shots: u64, seed: u64) -> PyResult<Vec<u64>> {
        pfsic_core::sample_outcomes(&self.0, &state.0, shots, seed).map_err(err)
    }

    /// Monte Carlo local tomography; returns the report as a dict.
    #[pyo3(signature = (shots, trials, seed, true_params=None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        shots: u64,
        trials: usize,
        seed: u64,
        true_params: Option<Vec<f64>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let true_params = true_params.map(|x| params(self.0.dim(), x)).transpose()?;
        let config = SimConfig {
            povm: PovmSource::Explicit(self.0.clone()),
            true_params,
            shots_per_trial: shots,
            trials,
            seed,
        };
        let report = py
            .detach(|| pfsic_core::run_trials(&config))
            .map_err(err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("Povm(dim={}, n_outcomes={})", self.0.dim(), self.0.n_outcomes())
    }
}

#[pyfunction]
fn quantum_fisher(d: usize) -> PyResult<Vec<Vec<f64>>> {
    pfsic_core::quantum_fisher_pure(d).map(|q| rows(&q)).map_err(err)
}

#[pyfunction]
fn gill_massar(c: Vec<Vec<f64>>, q: Vec<Vec<f64>>) -> PyResult<f64> {
    pfsic_core::gill_massar(&matrix(&c)?, &matrix(&q)?).map_err(err)
}

#[pyfunction]
fn fisher_symmetry(c: Vec<Vec<f64>>, q: Vec<Vec<f64>>) -> PyResult<f64> {
    pfsic_core::fisher_symmetry_quantity(&matrix(&c)?, &matrix(&q)?).map_err(err)
}

#[pyfunction]
fn trine_ambiguity<'py>(py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let pair = pfsic_core::trine_ambiguity_demo(&params(2, x)?).map_err(err)?;
    to_py(py, &pair)
}

#[pymodule]
fn pfsic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", pfsic_core::VERSION)?;
    m.add_class::<PyPureState>()?;
    m.add_class::<PyPovm>()?;
    m.add_function(wrap_pyfunction!(quantum_fisher, m)?)?;
    m.add_function(wrap_pyfunction!(gill_massar, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_symmetry, m)?)?;
    m.add_function(wrap_pyfunction!(trine_ambiguity, m)?)?;
    Ok(())
}
