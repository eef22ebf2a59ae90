//! Python bindings for privexp-core.

use privexp_core::euclid::{binary_euclid_approx as euclid_binary, euclid_tai_approx as euclid_general};
use privexp_core::exponents::{self, ExponentQuery, ExponentResult, SearchConfig};
use privexp_core::gaussian::{self, GaussianQuery};
use privexp_core::iproject::{self, MarginalConstraint};
use privexp_core::probcore::{self, Channel, JointPmf, Pmf};
use privexp_core::simkit::{self, SchemeConfig, SimReport};
use privexp_core::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::Infeasible(_) | Error::NonConvergence(_) | Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Pmf", module = "privexp", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPmf(Pmf);

#[pymethods]
impl PyPmf {
    #[new]
    fn new(probs: Vec<f64>) -> PyResult<Self> {
        Pmf::new(probs).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(json_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }

    #[getter]
    fn alphabet(&self) -> Vec<String> {
        self.0.alphabet().to_vec()
    }

    fn entropy(&self) -> f64 {
        probcore::entropy(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Pmf({:?})", self.0.probs())
    }
}

#[pyclass(name = "JointPmf", module = "privexp", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyJointPmf(JointPmf);

#[pymethods]
impl PyJointPmf {
    /// Row-major probabilities over the given shape.
    #[new]
    fn new(shape: Vec<usize>, probs: Vec<f64>) -> PyResult<Self> {
        JointPmf::new(&shape, probs).map(Self).map_err(err)
    }

    /// Doubly symmetric binary source with crossover `q`.
    #[staticmethod]
    fn dsbs(q: f64) -> PyResult<Self> {
        JointPmf::dsbs(q).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(json_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.0.shape().to_vec()
    }

    fn marginal(&self, axis: usize) -> PyResult<PyPmf> {
        self.0.marginal_pmf(axis).map(PyPmf).map_err(err)
    }

    fn product_of_marginals(&self) -> PyResult<Self> {
        self.0.product_of_marginals().map(Self).map_err(err)
    }

    /// I(X;Y) in bits for a two-variable law.
    fn mutual_information(&self) -> PyResult<f64> {
        probcore::mutual_information(&self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("JointPmf(shape={:?}, probs={:?})", self.0.shape(), self.0.probs())
    }
}

#[pyclass(name = "Channel", module = "privexp", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChannel(Channel);

#[pymethods]
impl PyChannel {
    /// `rows[x][y] = P(y | x)`.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Channel::new(rows).map(Self).map_err(err)
    }

    #[staticmethod]
    fn bsc(eps: f64) -> PyResult<Self> {
        Channel::bsc(eps).map(Self).map_err(err)
    }

    #[staticmethod]
    fn identity(k: usize) -> PyResult<Self> {
        Channel::identity(k).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(json_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().to_vec()
    }

    fn apply(&self, p: &PyPmf) -> PyResult<PyPmf> {
        self.0.apply(&p.0).map(PyPmf).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Channel({:?})", self.0.rows())
    }
}

#[pyclass(name = "ExponentResult", module = "privexp", frozen)]
struct PyExponentResult(ExponentResult);

#[pymethods]
impl PyExponentResult {
    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta
    }

    #[getter]
    fn bound_kind(&self) -> PyResult<String> {
        serde_json::to_value(self.0.bound_kind)
            .map(|v| v.as_str().unwrap_or_default().to_string())
            .map_err(json_err)
    }

    #[getter]
    fn privacy_channel(&self) -> Option<PyChannel> {
        self.0.privacy_channel.clone().map(PyChannel)
    }

    #[getter]
    fn quantizer(&self) -> Option<PyChannel> {
        self.0.quantizer.clone().map(PyChannel)
    }

    #[getter]
    fn rate_used(&self) -> Option<f64> {
        self.0.rate_used
    }

    #[getter]
    fn leakage_used(&self) -> Option<f64> {
        self.0.leakage_used
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    fn __repr__(&self) -> String {
        format!("ExponentResult(theta={})", self.0.theta)
    }
}

#[pyclass(name = "SimReport", module = "privexp", frozen)]
struct PySimReport(SimReport);

#[pymethods]
impl PySimReport {
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn trials(&self) -> u64 {
        self.0.trials
    }

    #[getter]
    fn alpha_hat(&self) -> Option<f64> {
        self.0.alpha_hat
    }

    #[getter]
    fn beta_hat(&self) -> Option<f64> {
        self.0.beta_hat
    }

    #[getter]
    fn beta_upper95(&self) -> Option<f64> {
        self.0.beta_upper95
    }

    #[getter]
    fn empirical_exponent(&self) -> Option<f64> {
        self.0.empirical_exponent
    }

    #[getter]
    fn privacy_bound_bits(&self) -> f64 {
        self.0.privacy_bound_bits
    }

    #[getter]
    fn privacy_plugin_bits(&self) -> f64 {
        self.0.privacy_plugin_bits
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }
}

fn search(grid_step: f64, refine_rounds: usize) -> SearchConfig {
    SearchConfig { grid_step, refine_rounds, ..SearchConfig::default() }
}

/// KL divergence in bits; `inf` when q lacks support of p.
#[pyfunction]
fn kl_divergence(p: &PyPmf, q: &PyPmf) -> PyResult<f64> {
    probcore::kl_divergence(&p.0, &q.0).map(|d| d.as_f64()).map_err(err)
}

#[pyfunction]
fn binary_entropy(p: f64) -> f64 {
    probcore::binary_entropy(p)
}

#[pyfunction]
fn binary_tai_exponent(q: f64, rate: f64, leak: f64) -> PyResult<f64> {
    exponents::binary_tai_exponent(q, rate, leak).map_err(err)
}

/// (P_{X̂|X}, P_{U|X̂}) at the binary closed form.
#[pyfunction]
fn binary_tai_argmax(rate: f64, leak: f64) -> PyResult<(PyChannel, PyChannel)> {
    let (v, w) = exponents::binary_tai_argmax(rate, leak).map_err(err)?;
    Ok((PyChannel(v), PyChannel(w)))
}

#[pyfunction]
#[pyo3(signature = (p, rate, leak, grid_step = 0.02, refine_rounds = 3))]
fn tai_exponent(
    py: Python<'_>,
    p: &PyJointPmf,
    rate: f64,
    leak: f64,
    grid_step: f64,
    refine_rounds: usize,
) -> PyResult<PyExponentResult> {
    let q = ExponentQuery::new(rate, leak).map_err(err)?;
    let cfg = search(grid_step, refine_rounds);
    let p = p.0.clone();
    py.detach(|| exponents::tai_exponent(&p, &q, &cfg)).map(PyExponentResult).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, q, rate, leak, grid_step = 0.25, refine_rounds = 2))]
fn theorem1_lower_bound(
    py: Python<'_>,
    p: &PyJointPmf,
    q: &PyJointPmf,
    rate: f64,
    leak: f64,
    grid_step: f64,
    refine_rounds: usize,
) -> PyResult<PyExponentResult> {
    let query = ExponentQuery::new(rate, leak).map_err(err)?;
    let cfg = search(grid_step, refine_rounds);
    let (p, q) = (p.0.clone(), q.0.clone());
    py.detach(|| exponents::theorem1_lower_bound(&p, &q, &query, &cfg))
        .map(PyExponentResult)
        .map_err(err)
}

#[pyfunction]
fn zero_rate_exponent(p: &PyJointPmf, q: &PyJointPmf) -> PyResult<PyExponentResult> {
    exponents::zero_rate_exponent(&p.0, &q.0).map(PyExponentResult).map_err(err)
}

#[pyfunction]
fn binary_euclid_approx(q: f64, rate: f64, leak: f64) -> PyResult<f64> {
    euclid_binary(q, rate, leak).map_err(err)
}

/// Chi-square approximation with a uniform mechanism output law unless given.
#[pyfunction]
#[pyo3(signature = (p, rate, leak, pxhat = None))]
fn euclid_tai_approx(p: &PyJointPmf, rate: f64, leak: f64, pxhat: Option<&PyPmf>) -> PyResult<f64> {
    let px = match pxhat {
        Some(x) => x.0.clone(),
        None => Pmf::uniform(p.0.shape()[0]).map_err(err)?,
    };
    euclid_general(&p.0, rate, leak, &px, &SearchConfig::default()).map_err(err)
}

/// `leak` may be `float("inf")`.
#[pyfunction]
fn gaussian_tai_exponent(rho: f64, rate: f64, leak: f64) -> PyResult<f64> {
    let q = GaussianQuery::new(rho, rate, leak).map_err(err)?;
    gaussian::gaussian_tai_exponent(&q).map_err(err)
}

/// I-projection of `reference` onto fixed marginals given as
/// `(axes, target_probs)` pairs. Returns (min KL in bits, argmin).
#[pyfunction]
fn i_project(reference: &PyJointPmf, constraints: Vec<(Vec<usize>, Vec<f64>)>) -> PyResult<(f64, PyJointPmf)> {
    let cons = constraints
        .into_iter()
        .map(|(axes, t)| MarginalConstraint::from_raw(&axes, t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let out = iproject::i_project(&reference.0, &cons, 1e-10, 100_000).map_err(err)?;
    Ok((out.min_kl, PyJointPmf(out.argmin)))
}

/// Runs a scheme from its JSON config (the CLI schema without the laws).
#[pyfunction]
#[pyo3(signature = (config_json, null, alt = None))]
fn simulate(py: Python<'_>, config_json: &str, null: &PyJointPmf, alt: Option<&PyJointPmf>) -> PyResult<PySimReport> {
    let cfg: SchemeConfig = serde_json::from_str(config_json).map_err(json_err)?;
    let (p, q) = (null.0.clone(), alt.map(|a| a.0.clone()));
    py.detach(|| simkit::simulate(&cfg, &p, q.as_ref())).map(PySimReport).map_err(err)
}

#[pymodule]
fn privexp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPmf>()?;
    m.add_class::<PyJointPmf>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyExponentResult>()?;
    m.add_class::<PySimReport>()?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(binary_tai_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(binary_tai_argmax, m)?)?;
    m.add_function(wrap_pyfunction!(tai_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(zero_rate_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(binary_euclid_approx, m)?)?;
    m.add_function(wrap_pyfunction!(euclid_tai_approx, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_tai_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(i_project, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
