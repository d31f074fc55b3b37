//! Python bindings: meshes, element configurations and convergence studies.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wglab_core::assembly::{build_dof_map, ElementConfig, SolverOptions, DEFAULT_TOL};
use wglab_core::mesh::{build_mesh, MeshKind};
use wglab_core::polyspace::GradientSpaceDesc;
use wglab_core::study::{emit_table as emit, run_study as run, solution_by_name, ConvergenceReport, TableFormat};
use wglab_core::weakop::StabilizerExponent;
use wglab_core::WgError;

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_kind(kind: &str) -> PyResult<MeshKind> {
    kind.parse().map_err(|e: WgError| value_error(e))
}

fn parse_j(j: &Bound<'_, PyAny>) -> PyResult<StabilizerExponent> {
    if let Ok(v) = j.extract::<i32>() {
        return StabilizerExponent::finite(v).map_err(value_error);
    }
    if let Ok(v) = j.extract::<f64>() {
        if v == f64::INFINITY {
            return Ok(StabilizerExponent::Free);
        }
    }
    let s: String = j.str()?.extract()?;
    s.parse().map_err(|e: WgError| value_error(e))
}

/// Uniform mesh of the unit square.
#[pyclass(name = "Mesh", frozen)]
struct PyMesh {
    inner: wglab_core::Mesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(kind: &str, level: usize) -> PyResult<Self> {
        let inner = build_mesh(parse_kind(kind)?, level).map_err(value_error)?;
        Ok(PyMesh { inner })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    #[getter]
    fn level(&self) -> usize {
        self.inner.level
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.vertices.len()
    }

    #[getter]
    fn num_elements(&self) -> usize {
        self.inner.elements.len()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.edges.len()
    }

    #[getter]
    fn num_interior_edges(&self) -> usize {
        self.inner.num_interior_edges()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices.iter().map(|p| (p[0], p[1])).collect()
    }

    fn elements(&self) -> Vec<Vec<usize>> {
        self.inner.elements.iter().map(|e| e.vertices.clone()).collect()
    }

    /// Plain-text dump (`v`, `e` and `g` lines).
    fn dump(&self) -> String {
        self.inner.dump()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(kind='{}', level={}, elements={})",
            self.kind(),
            self.inner.level,
            self.inner.elements.len()
        )
    }
}

/// A weak Galerkin element `(P_l(T), P_s(e), G)` with stabilizer exponent `j`.
#[pyclass(name = "ElementConfig", frozen)]
struct PyElementConfig {
    inner: ElementConfig,
}

#[pymethods]
impl PyElementConfig {
    /// `grad` is `"P:m"` or `"RT:m"`; `j` is -1, 0, 1 or `"inf"`.
    #[new]
    fn new(l: usize, s: usize, grad: &str, j: &Bound<'_, PyAny>) -> PyResult<Self> {
        let grad: GradientSpaceDesc = grad.parse().map_err(|e: WgError| value_error(e))?;
        let inner = ElementConfig::new(l, s, grad, parse_j(j)?).map_err(value_error)?;
        Ok(PyElementConfig { inner })
    }

    #[getter]
    fn l(&self) -> usize {
        self.inner.l
    }

    #[getter]
    fn s(&self) -> usize {
        self.inner.s
    }

    #[getter]
    fn grad(&self) -> String {
        self.inner.grad.to_string()
    }

    #[getter]
    fn j(&self) -> String {
        self.inner.j.to_string()
    }

    /// Number of unknowns on a mesh (pinned boundary entries excluded).
    fn ndof(&self, mesh: &PyMesh) -> usize {
        build_dof_map(&mesh.inner, &self.inner).n_unknowns
    }

    fn __repr__(&self) -> String {
        format!("ElementConfig({})", self.inner)
    }
}

/// Result of a convergence study.
#[pyclass(name = "ConvergenceReport", frozen, from_py_object)]
#[derive(Clone)]
struct PyReport {
    inner: ConvergenceReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn r1(&self) -> f64 {
        self.inner.summary_rates().0
    }

    #[getter]
    fn r2(&self) -> f64 {
        self.inner.summary_rates().1
    }

    #[getter]
    fn classification(&self) -> &'static str {
        self.inner.classification.as_str()
    }

    /// Per-level rows as dictionaries.
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("level", r.level)?;
                d.set_item("h", r.h)?;
                d.set_item("ndof", r.ndof)?;
                d.set_item("energy_err", r.energy_err)?;
                d.set_item("energy_rate", r.energy_rate)?;
                d.set_item("l2_err", r.l2_err)?;
                d.set_item("l2_rate", r.l2_rate)?;
                d.set_item("status", r.status.as_str())?;
                d.set_item("iterations", r.solve.iterations)?;
                Ok(d)
            })
            .collect()
    }

    /// True when the summary rates are within `tol` of `(r1, r2)`; `-inf`
    /// expects a diverged classification.
    #[pyo3(signature = (r1, r2, tol = 0.2))]
    fn matches(&self, r1: f64, r2: f64, tol: f64) -> bool {
        self.inner.matches((r1, r2), tol)
    }

    fn __repr__(&self) -> String {
        let (r1, r2) = self.inner.summary_rates();
        format!(
            "ConvergenceReport({} on {}, r1={r1:.3}, r2={r2:.3}, {})",
            self.inner.config,
            self.inner.mesh,
            self.inner.classification.as_str()
        )
    }
}

/// Runs a convergence study over `levels lo..=hi`.
#[pyfunction]
#[pyo3(signature = (config, mesh, lo, hi, solution = "sinsin", solver_tol = DEFAULT_TOL))]
fn run_study(
    py: Python<'_>,
    config: &PyElementConfig,
    mesh: &str,
    lo: usize,
    hi: usize,
    solution: &str,
    solver_tol: f64,
) -> PyResult<PyReport> {
    let kind = parse_kind(mesh)?;
    let sol = solution_by_name(solution).map_err(value_error)?;
    let opts = SolverOptions {
        tol: solver_tol,
        ..SolverOptions::default()
    };
    let cfg = config.inner;
    let inner = py
        .detach(|| run(&cfg, kind, lo..=hi, &sol, &opts))
        .map_err(value_error)?;
    Ok(PyReport { inner })
}

/// Renders reports as `"csv"`, `"summary"` or `"markdown"`.
#[pyfunction]
#[pyo3(signature = (reports, format = "csv"))]
fn emit_table(reports: Vec<PyReport>, format: &str) -> PyResult<String> {
    let format = match format {
        "csv" => TableFormat::Csv,
        "summary" => TableFormat::Summary,
        "markdown" => TableFormat::Markdown,
        other => return Err(value_error(format!("unknown table format `{other}`"))),
    };
    let reports: Vec<ConvergenceReport> = reports.into_iter().map(|r| r.inner).collect();
    Ok(emit(&reports, format))
}

#[pymodule]
fn wglab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyElementConfig>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(emit_table, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
