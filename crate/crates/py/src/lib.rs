//! Python bindings. Components are 1-based, as in the JSON formats.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sigcore::formats;
use sigcore::quality::{QualityRoute, DEFAULT_QUADRATURE_TOL};
use sigcore::signature::SignatureRoute;
use sigcore::structure::{masks_by_level, PathSetSystem, SetFunction, StructureFunction, SubsetMask};
use sigcore::{oracle, Error};

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        4 => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for sigcore::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Semicoherent structure function.
#[pyclass(name = "Structure", frozen)]
struct PyStructure {
    phi: StructureFunction,
    paths: Option<PathSetSystem>,
}

#[pymethods]
impl PyStructure {
    #[staticmethod]
    fn from_paths(n: usize, paths: Vec<Vec<usize>>) -> PyResult<Self> {
        let paths = PathSetSystem::from_components(n, &paths).py_err()?;
        Ok(PyStructure {
            phi: StructureFunction::from_path_sets(&paths),
            paths: Some(paths),
        })
    }

    /// Truth table as a string of `0`/`1`, indexed by mask.
    #[staticmethod]
    fn from_bits(n: usize, bits: &str) -> PyResult<Self> {
        Ok(StructureFunction::from_bit_string(n, bits).py_err()?.into())
    }

    #[staticmethod]
    fn k_out_of_n(n: usize, k: usize) -> PyResult<Self> {
        Ok(StructureFunction::k_out_of_n(n, k).py_err()?.into())
    }

    #[staticmethod]
    fn series(n: usize) -> PyResult<Self> {
        Ok(StructureFunction::series(n).py_err()?.into())
    }

    #[staticmethod]
    fn parallel(n: usize) -> PyResult<Self> {
        Ok(StructureFunction::parallel(n).py_err()?.into())
    }

    #[staticmethod]
    fn bridge() -> Self {
        StructureFunction::bridge().into()
    }

    /// Parses a structure file.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let system = formats::parse_system(text).py_err()?;
        Ok(PyStructure {
            phi: system.phi,
            paths: system.paths,
        })
    }

    fn to_json(&self) -> String {
        formats::structure_to_json(&self.phi)
    }

    #[getter]
    fn n(&self) -> usize {
        self.phi.n()
    }

    #[getter]
    fn bits(&self) -> String {
        self.phi.to_bit_string()
    }

    fn value(&self, components: Vec<usize>) -> PyResult<bool> {
        let s = SubsetMask::from_components(self.phi.n(), &components).py_err()?;
        self.phi.evaluate(s).py_err()
    }

    fn is_semicoherent(&self) -> bool {
        self.phi.is_semicoherent()
    }

    fn minimal_path_sets(&self) -> PyResult<Vec<Vec<usize>>> {
        let paths = self.phi.minimal_path_sets().py_err()?;
        Ok(paths.paths().iter().map(|p| p.to_components()).collect())
    }

    fn __repr__(&self) -> String {
        format!("Structure(n={}, bits={:?})", self.phi.n(), self.phi.to_bit_string())
    }
}

impl From<StructureFunction> for PyStructure {
    fn from(phi: StructureFunction) -> Self {
        PyStructure { phi, paths: None }
    }
}

/// Joint lifetime law, built from the model JSON format.
#[pyclass(name = "LifetimeModel", frozen)]
struct PyLifetimeModel {
    model: sigcore::LifetimeModel,
}

#[pymethods]
impl PyLifetimeModel {
    #[staticmethod]
    #[pyo3(signature = (text, n=None))]
    fn from_json(text: &str, n: Option<usize>) -> PyResult<Self> {
        let (model, _) = formats::parse_model(text, n).py_err()?;
        Ok(PyLifetimeModel { model })
    }

    #[staticmethod]
    fn iid(n: usize) -> PyResult<Self> {
        Ok(PyLifetimeModel {
            model: sigcore::LifetimeModel::iid(n).py_err()?,
        })
    }

    #[staticmethod]
    fn weibull(alpha: f64, lambdas: Vec<f64>) -> PyResult<Self> {
        Ok(PyLifetimeModel {
            model: sigcore::LifetimeModel::weibull(alpha, lambdas).py_err()?,
        })
    }

    fn to_json(&self) -> String {
        formats::model_to_json(&self.model)
    }

    #[getter]
    fn n(&self) -> usize {
        self.model.n()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.model.kind()
    }

    fn __repr__(&self) -> String {
        format!("LifetimeModel(kind={:?}, n={})", self.model.kind(), self.model.n())
    }
}

/// Relative quality function `q(S)`.
#[pyclass(name = "QualityFunction", frozen)]
struct PyQualityFunction {
    q: sigcore::QualityFunction,
    route: QualityRoute,
}

#[pymethods]
impl PyQualityFunction {
    /// Parses the quality JSON format. A table without a `route` is treated
    /// as numerical output and checked at the quadrature tolerance.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let route = serde_json::from_str::<serde_json::Value>(text)
            .ok()
            .and_then(|v| v["route"].as_str().and_then(|r| r.parse().ok()))
            .unwrap_or(QualityRoute::Quadrature);
        Ok(PyQualityFunction {
            q: formats::parse_quality(text).py_err()?,
            route,
        })
    }

    #[pyo3(signature = (tilde=false))]
    fn to_json(&self, tilde: bool) -> String {
        formats::quality_to_json(&self.q, self.route, tilde)
    }

    #[getter]
    fn n(&self) -> usize {
        self.q.n()
    }

    #[getter]
    fn route(&self) -> &'static str {
        self.route.as_str()
    }

    /// Values indexed by mask (bit `i` is component `i + 1`).
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.q.values().to_vec()
    }

    fn __getitem__(&self, components: Vec<usize>) -> PyResult<f64> {
        let s = SubsetMask::from_components(self.q.n(), &components).py_err()?;
        self.q.value(s).py_err()
    }

    fn level_sums(&self) -> Vec<f64> {
        self.q.level_sums()
    }

    fn tilde(&self) -> Vec<f64> {
        self.q.tilde().values().to_vec()
    }

    fn normalize_levels(&self) -> PyResult<Self> {
        Ok(PyQualityFunction {
            q: self.q.normalize_levels().py_err()?,
            route: self.route,
        })
    }

    /// `(set, value)` pairs sorted by cardinality, then mask.
    fn items(&self) -> Vec<(Vec<usize>, f64)> {
        let n = self.q.n();
        masks_by_level(n)
            .into_iter()
            .flatten()
            .map(|m| {
                let set = SubsetMask::new(n, m).expect("mask within range").to_components();
                (set, self.q.get(m))
            })
            .collect()
    }
}

fn parse_route(route: &str) -> PyResult<SignatureRoute> {
    route.parse().py_err()
}

/// Relative quality function of `model` along `route`.
#[pyfunction]
#[pyo3(signature = (model, route="auto", tol=DEFAULT_QUADRATURE_TOL))]
fn quality(model: &PyLifetimeModel, route: &str, tol: f64) -> PyResult<PyQualityFunction> {
    let route = match parse_route(route)? {
        SignatureRoute::Auto => sigcore::quality::auto_route(&model.model),
        SignatureRoute::Boland => QualityRoute::Exchangeable,
        SignatureRoute::Quality(r) => r,
    };
    let q = sigcore::quality_for_model(&model.model, route, tol).py_err()?;
    Ok(PyQualityFunction { q, route })
}

/// Signature of `structure` under `model`: dict with `p`, `tails` and `route`.
#[pyfunction]
#[pyo3(signature = (structure, model, route="auto", tol=DEFAULT_QUADRATURE_TOL, normalize_levels=false))]
fn signature<'py>(
    py: Python<'py>,
    structure: &PyStructure,
    model: &PyLifetimeModel,
    route: &str,
    tol: f64,
    normalize_levels: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let result = sigcore::signature_for_model(
        &structure.phi,
        &model.model,
        parse_route(route)?,
        tol,
        normalize_levels,
    )
    .py_err()?;
    let out = PyDict::new(py);
    out.set_item("p", result.signature.values().to_vec())?;
    out.set_item("tails", result.tails.tails().to_vec())?;
    out.set_item("route", result.route)?;
    Ok(out)
}

#[pyfunction]
fn boland_signature(structure: &PyStructure) -> PyResult<Vec<f64>> {
    Ok(sigcore::boland_signature(&structure.phi).py_err()?.values().to_vec())
}

#[pyfunction]
fn signature_from_quality(structure: &PyStructure, q: &PyQualityFunction) -> PyResult<Vec<f64>> {
    let p = sigcore::signature_from_quality_tol(&structure.phi, &q.q, q.route.level_tolerance())
        .py_err()?;
    Ok(p.values().to_vec())
}

/// Signature by enumerating equally likely failure orderings.
#[pyfunction]
fn permutation_signature(structure: &PyStructure) -> PyResult<Vec<f64>> {
    let p = sigcore::permutation_signature(&structure.phi, sigcore::OrderingLaw::Uniform).py_err()?;
    Ok(p.values().to_vec())
}

/// Monte Carlo signature estimate: dict with `p_hat`, `se`, `counts`, `n_samples`, `seed`.
#[pyfunction]
#[pyo3(signature = (structure, model, samples=oracle::DEFAULT_SAMPLES, seed=oracle::DEFAULT_SEED, batch_size=oracle::DEFAULT_BATCH_SIZE))]
fn simulate<'py>(
    py: Python<'py>,
    structure: &PyStructure,
    model: &PyLifetimeModel,
    samples: usize,
    seed: u64,
    batch_size: usize,
) -> PyResult<Bound<'py, PyDict>> {
    if samples == 0 || batch_size == 0 {
        return Err(PyValueError::new_err("samples and batch_size must be positive"));
    }
    let config = sigcore::MonteCarloConfig {
        samples,
        seed,
        batch_size,
    };
    let report = py
        .detach(|| match &structure.paths {
            Some(paths) => sigcore::monte_carlo_signature(paths, &model.model, &config),
            None => sigcore::monte_carlo_signature(&structure.phi, &model.model, &config),
        })
        .py_err()?;
    let out = PyDict::new(py);
    out.set_item("p_hat", report.estimates)?;
    out.set_item("se", report.standard_errors)?;
    out.set_item("counts", report.counts)?;
    out.set_item("n_samples", report.samples)?;
    out.set_item("seed", report.seed)?;
    Ok(out)
}

/// Best symmetric approximation of `values` (indexed by mask) under `weights`:
/// returns `(constant, c, residual_orthogonality)`.
#[pyfunction]
fn project(values: Vec<f64>, weights: Vec<f64>) -> PyResult<(f64, Vec<f64>, f64)> {
    let n = values.len().trailing_zeros() as usize;
    if values.len() != 1 << n {
        return Err(PyValueError::new_err("table length must be a power of two"));
    }
    let f = SetFunction::new(n, values).py_err()?;
    let w = SetFunction::new(n, weights).py_err()?;
    let approx = sigcore::symmetric_projection(&f, &w).py_err()?;
    let residual = sigcore::projection_residual_check(&f, &w, &approx).py_err()?;
    Ok((approx.constant, approx.coefficients, residual))
}

/// Weibull characterization test: dict with `is_weibull_compatible`,
/// `recovered_rates`, `max_deviation`, `reason`.
#[pyfunction]
#[pyo3(signature = (q, tol=1e-8))]
fn check_weibull<'py>(py: Python<'py>, q: &PyQualityFunction, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let check = sigcore::weibull_characterization_check(&q.q, tol);
    let out = PyDict::new(py);
    out.set_item("is_weibull_compatible", check.is_weibull_compatible)?;
    out.set_item("recovered_rates", check.recovered_rates)?;
    out.set_item("max_deviation", check.max_deviation)?;
    out.set_item("reason", check.reason)?;
    Ok(out)
}

/// Probability that the shortest Weibull lifetime belongs to `components`.
#[pyfunction]
fn shortest_lifetime_probability(alpha: f64, lambdas: Vec<f64>, components: Vec<usize>) -> PyResult<f64> {
    let s = SubsetMask::from_components(lambdas.len(), &components).py_err()?;
    sigcore::shortest_lifetime_in_set_probability(alpha, &lambdas, s).py_err()
}

#[pymodule]
fn pysigcore(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStructure>()?;
    m.add_class::<PyLifetimeModel>()?;
    m.add_class::<PyQualityFunction>()?;
    m.add_function(wrap_pyfunction!(quality, m)?)?;
    m.add_function(wrap_pyfunction!(signature, m)?)?;
    m.add_function(wrap_pyfunction!(boland_signature, m)?)?;
    m.add_function(wrap_pyfunction!(signature_from_quality, m)?)?;
    m.add_function(wrap_pyfunction!(permutation_signature, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(check_weibull, m)?)?;
    m.add_function(wrap_pyfunction!(shortest_lifetime_probability, m)?)?;
    Ok(())
}
