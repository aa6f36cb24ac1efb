//! Python bindings: states, GNS/modular inspection, monotone-function
//! certification, covariance forms, metrics, CPU-map verification, and the
//! property suite. Algebra elements and CPU maps cross the boundary in the
//! same JSON wire formats the CLI uses.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use covfield::algebra::{AlgebraElement, AlgebraShape};
use covfield::channels::{cpu_map_from_json, cpu_map_to_json, verify_cpu, CpuMap};
use covfield::covariance::{
    covariance_form, metric_inner, metric_spectral_oracle, CovarianceSpec, TangentVector,
};
use covfield::error::CovError;
use covfield::gns::{gelfand_ideal_basis, gns_space};
use covfield::harness::{continuity_probe, metric_table, run_suite, SuiteConfig};
use covfield::modular::modular_operator;
use covfield::monotone::{by_name, catalog, log_grid, random_log_grid, MonotoneFunction};

fn err(e: CovError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_shape(dims: Vec<usize>) -> PyResult<AlgebraShape> {
    AlgebraShape::new(dims).map_err(err)
}

fn parse_function(name: &str) -> PyResult<MonotoneFunction> {
    by_name(name).map_err(err)
}

fn element_from_json(text: &str) -> PyResult<AlgebraElement> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A state on a block-sum algebra, held by its density operator.
#[pyclass(name = "State", frozen)]
struct PyState {
    inner: covfield::State,
}

#[pymethods]
impl PyState {
    /// The canonical tracial state on the given block shape.
    #[staticmethod]
    fn tracial(shape: Vec<usize>) -> PyResult<Self> {
        Ok(PyState { inner: covfield::states::tracial_state(&parse_shape(shape)?) })
    }

    /// Seeded random faithful state.
    #[staticmethod]
    fn random(shape: Vec<usize>, seed: u64) -> PyResult<Self> {
        Ok(PyState { inner: covfield::states::random_faithful_state(&parse_shape(shape)?, seed) })
    }

    /// Pure state on global basis index `index`.
    #[staticmethod]
    fn pure(shape: Vec<usize>, index: usize) -> PyResult<Self> {
        covfield::states::pure_state(&parse_shape(shape)?, index)
            .map(|inner| PyState { inner })
            .map_err(err)
    }

    /// From the JSON wire format `{"shape": [...], "density": {...}}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        covfield::states::state_from_json(text)
            .map(|inner| PyState { inner })
            .map_err(err)
    }

    /// From a density given as the element JSON wire format.
    #[staticmethod]
    fn from_density_json(text: &str) -> PyResult<Self> {
        covfield::states::state_from_density(element_from_json(text)?)
            .map(|inner| PyState { inner })
            .map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        covfield::states::state_to_json(&self.inner).map_err(err)
    }

    fn shape(&self) -> Vec<usize> {
        self.inner.shape().block_dims().to_vec()
    }

    /// Density eigenvalues relative to the normalized trace.
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    /// Ordinary-trace probabilities `q_i / K`.
    fn ordinary_probabilities(&self) -> Vec<f64> {
        self.inner.ordinary_probabilities()
    }

    fn is_faithful(&self) -> bool {
        self.inner.is_faithful()
    }

    fn is_tracial(&self) -> bool {
        self.inner.is_tracial()
    }

    fn support_rank(&self) -> usize {
        self.inner.support_rank()
    }

    fn __repr__(&self) -> String {
        format!(
            "State(shape=[{}], support_rank={}, faithful={})",
            self.inner.shape(),
            self.inner.support_rank(),
            self.inner.is_faithful()
        )
    }
}

/// Sorted eigenvalue multiset of the modular operator on the GNS space.
#[pyfunction]
fn modular_spectrum(state: &PyState) -> PyResult<Vec<f64>> {
    let md = modular_operator(&state.inner).map_err(err)?;
    let mut spec = md.spectrum.clone();
    spec.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(spec)
}

/// GNS dimension, Gelfand-ideal dimension, and basis Gram error.
#[pyfunction]
fn gns_info<'py>(py: Python<'py>, state: &PyState) -> PyResult<Bound<'py, PyDict>> {
    let g = gns_space(&state.inner);
    let ideal = gelfand_ideal_basis(&state.inner);
    let out = PyDict::new(py);
    out.set_item("dimension", g.dim())?;
    out.set_item("ideal_dimension", ideal.len())?;
    out.set_item("algebra_dimension", state.inner.shape().algebra_dim())?;
    out.set_item("gram_error", g.gram_error())?;
    Ok(out)
}

/// Covariance form value on two algebra elements (element JSON in, complex
/// out as an `(re, im)` pair). `alpha` defaults to `F(1)`.
#[pyfunction]
#[pyo3(signature = (state, function, a_json, b_json, alpha=None))]
fn covariance_eval(
    state: &PyState,
    function: &str,
    a_json: &str,
    b_json: &str,
    alpha: Option<f64>,
) -> PyResult<(f64, f64)> {
    let f = parse_function(function)?;
    let spec = match alpha {
        Some(alpha) => CovarianceSpec::new(f, alpha),
        None => CovarianceSpec::reduced(f),
    }
    .map_err(err)?;
    let g = gns_space(&state.inner);
    let a = element_from_json(a_json)?;
    let b = element_from_json(b_json)?;
    let xi = g.vector(&a).map_err(err)?;
    let eta = g.vector(&b).map_err(err)?;
    let v = covariance_form(&g, &spec, &xi, &eta).map_err(err)?;
    Ok((v.re, v.im))
}

/// Monotone Riemannian metric value on a tangent direction given in
/// ordinary-trace coordinates (element JSON, Hermitian, traceless).
#[pyfunction]
fn metric_value(state: &PyState, function: &str, zeta_ordinary_json: &str) -> PyResult<f64> {
    let f = parse_function(function)?;
    let spec = CovarianceSpec::reduced(f).map_err(err)?;
    let dir = element_from_json(zeta_ordinary_json)?;
    let zeta = TangentVector::from_ordinary(&state.inner, dir).map_err(err)?;
    metric_inner(&state.inner, &spec, &zeta, &zeta).map_err(err)
}

/// Independent single-block spectral oracle for the same metric value.
#[pyfunction]
fn metric_oracle(state: &PyState, function: &str, zeta_ordinary_json: &str) -> PyResult<f64> {
    let f = parse_function(function)?;
    let dir = element_from_json(zeta_ordinary_json)?;
    let zeta = TangentVector::from_ordinary(&state.inner, dir).map_err(err)?;
    metric_spectral_oracle(&state.inner, &f, &zeta).map_err(err)
}

/// Löwner certification and Petz symmetry of a catalog entry or a scalar
/// expression in `t` (pass `expr=...`).
#[pyfunction]
#[pyo3(signature = (name=None, expr=None))]
fn check_monotone<'py>(
    py: Python<'py>,
    name: Option<&str>,
    expr: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let f = match (name, expr) {
        (Some(name), None) => parse_function(name)?,
        (None, Some(expr)) => MonotoneFunction::from_expr("user", expr).map_err(err)?,
        _ => return Err(PyValueError::new_err("pass exactly one of name or expr")),
    };
    let mut passes = true;
    let mut worst = f64::INFINITY;
    for seed in 0..50u64 {
        let (ok, min) = f.loewner_test(&random_log_grid(seed, 12)).map_err(err)?;
        passes &= ok;
        worst = worst.min(min);
    }
    let out = PyDict::new(py);
    out.set_item("name", f.name())?;
    out.set_item("loewner", if passes { "pass" } else { "fail" })?;
    out.set_item("loewner_min_eigenvalue", worst)?;
    out.set_item("petz", f.petz_symmetry_test(&log_grid(1e-3, 1e3, 41)))?;
    out.set_item("F0", f.f_zero())?;
    out.set_item("F1", f.f_one())?;
    Ok(out)
}

/// Certify a CPU map given in the JSON wire format.
#[pyfunction]
fn verify_cpu_json<'py>(py: Python<'py>, cpu_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let map = cpu_map_from_json(cpu_json).map_err(err)?;
    let report = verify_cpu(&map).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("unital_residual", report.unital_residual)?;
    out.set_item("self_adjoint_residual", report.self_adjoint_residual)?;
    out.set_item("choi_min_eigenvalue", report.choi_min_eigenvalue)?;
    out.set_item("choi_trace", report.choi_trace)?;
    out.set_item("kadison_min_eigenvalue", report.kadison_min_eigenvalue)?;
    out.set_item("is_unital", report.is_unital)?;
    out.set_item("is_self_adjoint", report.is_self_adjoint)?;
    out.set_item("is_completely_positive", report.is_completely_positive)?;
    out.set_item("kadison_holds", report.kadison_holds)?;
    out.set_item("passes", report.passes)?;
    Ok(out)
}

/// JSON of a seeded random CPU map (Stinespring compression + pinching).
#[pyfunction]
fn random_cpu_json(
    source: Vec<usize>,
    target: Vec<usize>,
    dilation: usize,
    seed: u64,
) -> PyResult<String> {
    let map = covfield::channels::random_cpu(
        &parse_shape(source)?,
        &parse_shape(target)?,
        dilation,
        seed,
    )
    .map_err(err)?;
    cpu_map_to_json(&map).map_err(err)
}

/// JSON of the transpose map, the standard witness failing Choi positivity.
#[pyfunction]
fn transpose_map_json(shape: Vec<usize>) -> PyResult<String> {
    cpu_map_to_json(&CpuMap::transpose_map(&parse_shape(shape)?)).map_err(err)
}

/// Run the property suite; returns the JSON report. Raises when the
/// configuration is invalid; inspect `verdict` for pass/fail.
#[pyfunction]
#[pyo3(signature = (seed=42, trials=50, shapes=None, no_timestamp=true))]
fn run_property_suite(
    seed: u64,
    trials: usize,
    shapes: Option<Vec<String>>,
    no_timestamp: bool,
) -> PyResult<String> {
    let mut config = SuiteConfig { seed, trials, no_timestamp, ..SuiteConfig::default() };
    if let Some(shapes) = shapes {
        config.shapes = shapes;
    }
    let report = run_suite(&config).map_err(err)?;
    String::from_utf8(report.to_json_bytes().map_err(err)?)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Continuity probe along ε = 1/n; returns the JSON row table.
#[pyfunction]
#[pyo3(signature = (state, function="bures", steps=20, max_n=1_000_000))]
fn continuity_probe_json(
    state: &PyState,
    function: &str,
    steps: usize,
    max_n: u64,
) -> PyResult<String> {
    let f = parse_function(function)?;
    let probe = continuity_probe(&state.inner, &f, steps, max_n).map_err(err)?;
    serde_json::to_string_pretty(&probe).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// CSV table of metric values over a simplex grid of diagonal states.
#[pyfunction]
fn metric_table_csv(shape: Vec<usize>, functions: Vec<String>, grid: usize) -> PyResult<String> {
    metric_table(&parse_shape(shape)?, &functions, grid).map_err(err)
}

/// Names of the built-in operator monotone functions.
#[pyfunction]
fn catalog_names() -> Vec<String> {
    catalog().iter().map(|f| f.name().to_string()).collect()
}

#[pymodule]
fn covfield_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(modular_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(gns_info, m)?)?;
    m.add_function(wrap_pyfunction!(covariance_eval, m)?)?;
    m.add_function(wrap_pyfunction!(metric_value, m)?)?;
    m.add_function(wrap_pyfunction!(metric_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(check_monotone, m)?)?;
    m.add_function(wrap_pyfunction!(verify_cpu_json, m)?)?;
    m.add_function(wrap_pyfunction!(random_cpu_json, m)?)?;
    m.add_function(wrap_pyfunction!(transpose_map_json, m)?)?;
    m.add_function(wrap_pyfunction!(run_property_suite, m)?)?;
    m.add_function(wrap_pyfunction!(continuity_probe_json, m)?)?;
    m.add_function(wrap_pyfunction!(metric_table_csv, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    Ok(())
}
