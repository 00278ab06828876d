//! Python bindings. Structured results come back as plain dicts and lists
//! built from the engine's JSON representation.

use pyo3::exceptions::{PyFileNotFoundError, PyKeyError, PyOSError, PyPermissionError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use scm_core::{Clock, EngineConfig, ScmError, Settings, SnapshotError};

fn to_py_err(e: ScmError) -> PyErr {
    let msg = e.to_string();
    match e {
        ScmError::InvalidArgument(_) | ScmError::Config(_) => PyValueError::new_err(msg),
        ScmError::NotFound(_) => PyKeyError::new_err(msg),
        ScmError::PermissionDenied(_) => PyPermissionError::new_err(msg),
        ScmError::Busy(_) => PyRuntimeError::new_err(msg),
        ScmError::Snapshot(SnapshotError::Missing(_)) => PyFileNotFoundError::new_err(msg),
        ScmError::Snapshot(SnapshotError::Io(_)) | ScmError::Io(_) => PyOSError::new_err(msg),
        ScmError::Snapshot(_) => PyValueError::new_err(msg),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn settings(simulated_clock: Option<bool>) -> PyResult<Settings> {
    let mut s = Settings::from_env().map_err(to_py_err)?;
    if let Some(sim) = simulated_clock {
        s.simulated_clock = sim;
    }
    Ok(s)
}

/// A memory engine. `simulated_clock=True` makes time advance only through
/// `advance_clock`, which keeps runs reproducible.
#[pyclass(name = "Engine", unsendable)]
struct PyEngine {
    inner: scm_core::Engine,
}

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (seed=None, simulated_clock=None, auto_sleep=true))]
    fn new(seed: Option<u64>, simulated_clock: Option<bool>, auto_sleep: bool) -> PyResult<Self> {
        let s = settings(simulated_clock)?;
        let mut cfg = EngineConfig::default();
        if let Some(seed) = seed {
            cfg.rng_seed = seed;
        }
        cfg.embedding_dim = s.embedding_dim;
        cfg.auto_sleep = auto_sleep;
        let inner = scm_core::Engine::builder(cfg)
            .clock(s.clock())
            .encoder(s.encoder())
            .build()
            .map_err(to_py_err)?;
        Ok(PyEngine { inner })
    }

    /// Restores an engine from a snapshot file.
    #[staticmethod]
    #[pyo3(signature = (path, simulated_clock=None))]
    fn load(path: &str, simulated_clock: Option<bool>) -> PyResult<Self> {
        let s = settings(simulated_clock)?;
        let clock = if s.simulated_clock { Clock::simulated() } else { Clock::system() };
        let inner = scm_core::Engine::load(path, clock, s.encoder()).map_err(to_py_err)?;
        Ok(PyEngine { inner })
    }

    fn process_message(&mut self, py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
        let report = self.inner.process_message(text).map_err(to_py_err)?;
        to_py(py, &report)
    }

    #[pyo3(signature = (text, k=5))]
    fn query(&mut self, py: Python<'_>, text: &str, k: usize) -> PyResult<Py<PyAny>> {
        let hits = self.inner.query(text, k).map_err(to_py_err)?;
        to_py(py, &hits)
    }

    /// Runs one consolidation cycle now.
    fn sleep(&mut self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let report = self.inner.sleep().map_err(to_py_err)?;
        to_py(py, &report)
    }

    /// Sleeps only if a trigger fires; returns None otherwise.
    fn tick(&mut self, py: Python<'_>) -> PyResult<Option<Py<PyAny>>> {
        match self.inner.tick().map_err(to_py_err)? {
            Some(report) => to_py(py, &report).map(Some),
            None => Ok(None),
        }
    }

    fn advance_clock(&self, hours: f64) -> PyResult<i64> {
        self.inner.advance_clock(hours).map(|t| t.as_micros()).map_err(to_py_err)
    }

    fn stats(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.stats())
    }

    #[pyo3(signature = (question=""))]
    fn introspect(&self, question: &str) -> String {
        self.inner.introspect(question)
    }

    #[pyo3(signature = (limit=200))]
    fn graph(&self, py: Python<'_>, limit: usize) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.graph_view(limit))
    }

    /// Writes a snapshot and returns the number of bytes written.
    fn save(&self, path: &str) -> PyResult<usize> {
        self.inner.save(path).map_err(to_py_err)
    }

    fn reload(&mut self, path: &str) -> PyResult<()> {
        self.inner.reload(path).map_err(to_py_err)
    }

    #[getter]
    fn ltm_size(&self) -> usize {
        self.inner.ltm_size()
    }

    fn __len__(&self) -> usize {
        self.inner.graph().len()
    }

    fn __repr__(&self) -> String {
        let s = self.inner.stats();
        format!("Engine(concepts={}, edges={}, wm={})", s.concepts, s.edges, s.wm_size)
    }
}

#[pymodule]
fn scm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEngine>()?;
    Ok(())
}
