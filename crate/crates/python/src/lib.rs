//! Python module `logtr`: curves, correlators, check suites and the
//! Hurwitz oracle.  Structured results cross the boundary as JSON text
//! and are decoded with Python's `json` module; rationals stay strings.

use logtr_cli::spec::{parse_spec, CurveSpec};
use logtr_cli::suites::{run_suite, Suite};
use logtr_cli::{check_budget, compute_doc, oracle_hodge, oracle_hurwitz, CliError, CliResult};
use logtr_core::recursion::Engine;
use logtr_core::scalar::{fmt_scalar, parse_scalar};
use logtr_core::{fixtures, Error, Mode, Scalar, SpectralCurve};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(logtr, LogtrError, PyException);
create_exception!(logtr, ParseError, LogtrError);
create_exception!(logtr, AssumptionError, LogtrError);
create_exception!(logtr, CapError, LogtrError);

fn to_py(e: CliError) -> PyErr {
    let msg = e.to_string();
    match e.exit_code() {
        2 => ParseError::new_err(msg),
        3 => AssumptionError::new_err(msg),
        4 | 5 => CapError::new_err(msg),
        _ => LogtrError::new_err(msg),
    }
}

fn mode_of(s: &str) -> CliResult<Mode> {
    Ok(logtr_cli::output::mode_from_name(s)?)
}

fn suite_of(s: &str) -> CliResult<Suite> {
    Ok(match s {
        "loops" => Suite::Loops,
        "projection" => Suite::Projection,
        "symmetry" => Suite::Symmetry,
        "swap" => Suite::Swap,
        "bridge" => Suite::Bridge,
        "closed" => Suite::Closed,
        _ => return Err(Error::Parse(format!("unknown suite {s:?}")).into()),
    })
}

fn loads(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Interpreter-free core of the bindings.
pub struct CurveHandle {
    spec: CurveSpec,
    engine: Engine,
}

impl CurveHandle {
    pub fn from_spec(text: &str) -> CliResult<Self> {
        let spec = parse_spec(text)?;
        let engine = Engine::new(spec.curve()?);
        Ok(CurveHandle { spec, engine })
    }

    pub fn from_fixture(name: &str) -> CliResult<Self> {
        let c: SpectralCurve = fixtures::by_name(name)?;
        let spec = CurveSpec { x: c.x.clone(), y: c.y.clone(), chart: None, split: vec![] };
        Ok(CurveHandle { spec, engine: Engine::new(c) })
    }

    pub fn hash(&self) -> String {
        self.spec.hash()
    }

    pub fn curve(&self) -> &SpectralCurve {
        self.engine.curve()
    }

    /// The result document as JSON text.
    pub fn compute(&self, mode: &str, g: u32, n: usize, budget: u32) -> CliResult<String> {
        check_budget(g, n, budget)?;
        Ok(compute_doc(&self.engine, self.hash(), mode_of(mode)?, g, n)?.to_text())
    }

    /// `ω(g,n)/Π dz_i` at the given points.
    pub fn evaluate(&self, mode: &str, g: u32, n: usize, points: &[String], budget: u32) -> CliResult<String> {
        check_budget(g, n, budget)?;
        let z: Vec<Scalar> = points.iter().map(|p| parse_scalar(p)).collect::<Result<_, _>>()?;
        let form = self.engine.compute(mode_of(mode)?, g, n)?;
        Ok(fmt_scalar(&form.evaluate(&z)?))
    }

    pub fn check(&self, suite: &str, budget: u32, mode: &str) -> CliResult<String> {
        Ok(run_suite(&self.spec.canonical().to_string(), suite_of(suite)?, mode_of(mode)?, budget)?.to_string())
    }
}

/// A spectral curve with a memoizing recursion engine.
#[pyclass(name = "Curve", module = "logtr", frozen)]
struct PyCurve {
    inner: CurveHandle,
}

#[pymethods]
impl PyCurve {
    /// Builds a curve from specification text (the JSON format of the CLI).
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PyCurve { inner: CurveHandle::from_spec(spec).map_err(to_py)? })
    }

    /// One of the named sample curves.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        Ok(PyCurve { inner: CurveHandle::from_fixture(name).map_err(to_py)? })
    }

    #[getter]
    fn hash(&self) -> String {
        self.inner.hash()
    }

    #[getter]
    fn ramification_points(&self) -> Vec<String> {
        self.inner.curve().ram_points().iter().map(fmt_scalar).collect()
    }

    #[getter]
    fn vital_points(&self) -> Vec<String> {
        self.inner.curve().vital_points().iter().map(fmt_scalar).collect()
    }

    /// The correlator as a dict with `terms: [{poles: [{q, d}], coeff}]`.
    #[pyo3(signature = (mode, g, n, budget = 4))]
    fn compute(&self, py: Python<'_>, mode: &str, g: u32, n: usize, budget: u32) -> PyResult<Py<PyAny>> {
        let text = py.detach(|| self.inner.compute(mode, g, n, budget)).map_err(to_py)?;
        loads(py, &text)
    }

    /// Exact value of `ω(g,n)/Π dz_i` at rational points given as strings.
    #[pyo3(signature = (mode, g, n, points, budget = 4))]
    fn evaluate(&self, py: Python<'_>, mode: &str, g: u32, n: usize, points: Vec<String>, budget: u32) -> PyResult<String> {
        py.detach(|| self.inner.evaluate(mode, g, n, &points, budget)).map_err(to_py)
    }

    /// Runs a property suite; returns the report dict.
    #[pyo3(signature = (suite, budget = 2, mode = "logtr"))]
    fn check(&self, py: Python<'_>, suite: &str, budget: u32, mode: &str) -> PyResult<Py<PyAny>> {
        let text = py.detach(|| self.inner.check(suite, budget, mode)).map_err(to_py)?;
        loads(py, &text)
    }
}

/// Connected simple Hurwitz number as a `"p/q"` string.
#[pyfunction]
fn hurwitz(d: usize, mu: Vec<usize>, g: u32) -> PyResult<String> {
    let mu: Vec<String> = mu.iter().map(|m| m.to_string()).collect();
    oracle_hurwitz(d, &mu.join(","), g).map(|h| fmt_scalar(&h)).map_err(to_py)
}

/// Intersection numbers read off the Lambert curve with their checks.
#[pyfunction]
fn hodge(py: Python<'_>) -> PyResult<Py<PyAny>> {
    let text = py.detach(|| oracle_hodge().map(|v| v.to_string())).map_err(to_py)?;
    loads(py, &text)
}

/// Names accepted by `Curve.fixture`.
#[pyfunction]
fn fixture_names() -> Vec<&'static str> {
    fixtures::NAMES.to_vec()
}

#[pymodule]
fn logtr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_function(wrap_pyfunction!(hurwitz, m)?)?;
    m.add_function(wrap_pyfunction!(hodge, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_names, m)?)?;
    m.add("LogtrError", m.py().get_type::<LogtrError>())?;
    m.add("ParseError", m.py().get_type::<ParseError>())?;
    m.add("AssumptionError", m.py().get_type::<AssumptionError>())?;
    m.add("CapError", m.py().get_type::<CapError>())?;
    Ok(())
}
