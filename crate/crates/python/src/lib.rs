//! Python bindings for the nonlocal solver.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nonlocal_core::harness::{self, ExperimentConfig, ExperimentKind, ProblemSpec, ReportRow, SweepValue};
use nonlocal_core::mesh::standard_omega;
use nonlocal_core::{AssemblyConfig, Error, MeshKind, Method, NormRegion, RowScope};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Kernel {
    inner: nonlocal_core::KernelParams,
}

#[pymethods]
impl Kernel {
    #[new]
    #[pyo3(signature = (dim, delta, eps, kappa = 1.0))]
    fn new(dim: usize, delta: f64, eps: f64, kappa: f64) -> PyResult<Self> {
        Ok(Self { inner: nonlocal_core::KernelParams::new(dim, delta, eps, kappa).map_err(py_err)? })
    }

    /// γ_ε as a function of the distance.
    fn gamma(&self, d: f64) -> f64 {
        self.inner.gamma_dist(d)
    }

    fn mollifier(&self, d: f64) -> f64 {
        self.inner.mollifier(d)
    }

    #[getter]
    fn support(&self) -> f64 {
        self.inner.support()
    }

    #[getter]
    fn c_delta(&self) -> f64 {
        self.inner.c_delta
    }

    fn __repr__(&self) -> String {
        let k = &self.inner;
        format!("Kernel(dim={}, delta={}, eps={}, kappa={})", k.dim, k.delta, k.eps, k.kappa)
    }
}

#[pyclass(frozen)]
struct Mesh {
    inner: nonlocal_core::Mesh,
}

#[pymethods]
impl Mesh {
    /// Structured mesh of the unit-centered Ω box plus `layer` of Γ.
    #[new]
    #[pyo3(signature = (dim, h, layer, kind = "quad"))]
    fn new(dim: usize, h: f64, layer: f64, kind: &str) -> PyResult<Self> {
        let kind: MeshKind = parse(kind)?;
        let inner = nonlocal_core::build_mesh(dim, standard_omega(dim), h, layer, kind).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn refine(&self) -> Self {
        Self { inner: nonlocal_core::refine(&self.inner) }
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.inner.n_elements()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.nodes.len()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    fn total_measure(&self) -> f64 {
        self.inner.total_measure()
    }
}

#[pyclass(frozen)]
struct FeSpace {
    inner: nonlocal_core::FeSpace,
}

#[pymethods]
impl FeSpace {
    #[new]
    fn new(mesh: &Mesh, degree: usize) -> PyResult<Self> {
        Ok(Self { inner: nonlocal_core::FeSpace::new(&mesh.inner, degree).map_err(py_err)? })
    }

    #[getter]
    fn n_dofs(&self) -> usize {
        self.inner.n_dofs
    }

    #[getter]
    fn n_free(&self) -> usize {
        self.inner.n_free()
    }

    fn dof_coords(&self) -> Vec<[f64; 3]> {
        self.inner.dof_coords.clone()
    }
}

#[pyclass(frozen)]
struct Matrix {
    inner: nonlocal_core::SparseMatrix,
    #[pyo3(get)]
    asymmetry: f64,
}

#[pymethods]
impl Matrix {
    #[getter]
    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    fn matvec(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let n = self.inner.row_ptr().len() - 1;
        if x.len() != n {
            return Err(PyValueError::new_err(format!("expected {n} entries, got {}", x.len())));
        }
        let mut y = vec![0.0; n];
        self.inner.matvec(&x, &mut y);
        Ok(y)
    }

    /// CSR triplet `(row_ptr, col_indices, values)`.
    fn csr(&self) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
        (self.inner.row_ptr().to_vec(), self.inner.col_indices().to_vec(), self.inner.values().to_vec())
    }
}

/// Assemble the stiffness matrix. `rows` is "free" or "all".
#[pyfunction]
#[pyo3(signature = (mesh, space, kernel, method = "adaptive", l_min = 1, l_max = 3, rows = "free", n_parts = 1))]
#[allow(clippy::too_many_arguments)]
fn assemble(
    mesh: &Mesh,
    space: &FeSpace,
    kernel: &Kernel,
    method: &str,
    l_min: u32,
    l_max: u32,
    rows: &str,
    n_parts: usize,
) -> PyResult<Matrix> {
    let mut cfg = match parse::<Method>(method)? {
        Method::MollifiedAdaptive => AssemblyConfig::adaptive(l_min, l_max),
        Method::Barycenter => AssemblyConfig::barycenter(),
    };
    cfg.rows = match rows {
        "free" => RowScope::Free,
        "all" => RowScope::All,
        _ => return Err(PyValueError::new_err(format!("unknown row scope {rows}"))),
    };
    let (m, s, k) = (&mesh.inner, &space.inner, &kernel.inner);
    if n_parts > 1 {
        let a = nonlocal_core::parallel_assemble(m, s, k, &cfg, n_parts, true).map_err(py_err)?;
        Ok(Matrix { inner: a.matrix, asymmetry: a.asymmetry })
    } else {
        let a = nonlocal_core::assemble(m, s, k, &cfg).map_err(py_err)?;
        Ok(Matrix { inner: a.matrix, asymmetry: a.asymmetry })
    }
}

/// Solve one manufactured problem and return its error and timings.
#[pyfunction]
#[pyo3(signature = (solution, h, delta, eps, dim = 2, mesh = "quad", degree = 1, method = "adaptive", l_min = 1, l_max = 3, n_parts = 1, tol = 1e-12))]
#[allow(clippy::too_many_arguments)]
fn solve_problem<'py>(
    py: Python<'py>,
    solution: &str,
    h: f64,
    delta: f64,
    eps: f64,
    dim: usize,
    mesh: &str,
    degree: usize,
    method: &str,
    l_min: u32,
    l_max: u32,
    n_parts: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let sol = harness::find_solution(solution).map_err(py_err)?;
    let assembly = match parse::<Method>(method)? {
        Method::MollifiedAdaptive => AssemblyConfig::adaptive(l_min, l_max),
        Method::Barycenter => AssemblyConfig::barycenter(),
    };
    let spec = ProblemSpec {
        dim,
        mesh: parse(mesh)?,
        h,
        delta,
        eps,
        degree,
        assembly,
        n_parts,
        concurrent: true,
        norm_region: NormRegion::Omega,
        tol,
    };
    let out = harness::solve_problem(&spec, &sol).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("n_dofs", out.n_dofs)?;
    d.set_item("n_free", out.n_free)?;
    d.set_item("l2_error", out.l2_error)?;
    d.set_item("interp_error", out.interp_error)?;
    d.set_item("iterations", out.report.iterations)?;
    d.set_item("residual", out.report.final_residual)?;
    d.set_item("converged", out.report.converged)?;
    d.set_item("t_assembly", out.t_assembly)?;
    d.set_item("t_total", out.t_total)?;
    d.set_item("coefficients", out.coefficients)?;
    Ok(d)
}

fn row_dict<'py>(py: Python<'py>, r: &ReportRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("sweep_name", &r.sweep_name)?;
    match r.sweep_value {
        SweepValue::Int(v) => d.set_item("sweep_value", v)?,
        SweepValue::Float(v) => d.set_item("sweep_value", v)?,
    }
    d.set_item("series", &r.series)?;
    d.set_item("n_dofs", r.n_dofs)?;
    d.set_item("l2_error", r.l2_error)?;
    d.set_item("rate", r.rate)?;
    d.set_item("t_assembly", r.t_assembly)?;
    d.set_item("t_total", r.t_total)?;
    for (k, v) in &r.extras {
        d.set_item(k, v)?;
    }
    Ok(d)
}

/// Run an experiment family with its default parameters, optionally
/// overriding the mesh-level range, mesh kind, solution, FE degree and CSV path.
#[pyfunction]
#[pyo3(signature = (kind, dim = 2, ml_range = None, mesh = None, solution = None, degree = None, out = None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    kind: &str,
    dim: usize,
    ml_range: Option<(u32, u32)>,
    mesh: Option<&str>,
    solution: Option<String>,
    degree: Option<usize>,
    out: Option<PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let kind: ExperimentKind = parse(kind)?;
    let mut cfg = ExperimentConfig::defaults(kind, dim);
    if let Some(v) = ml_range {
        cfg.ml_range = v;
    }
    if let Some(v) = mesh {
        cfg.mesh = parse(v)?;
    }
    if let Some(v) = solution {
        cfg.solution = v;
    }
    if let Some(v) = degree {
        cfg.degree = v;
    }
    cfg.out = out;
    let rows = harness::run_experiment(&cfg).map_err(py_err)?;
    rows.iter().map(|r| row_dict(py, r)).collect()
}

#[pymodule]
fn nonlocal_poisson(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Kernel>()?;
    m.add_class::<Mesh>()?;
    m.add_class::<FeSpace>()?;
    m.add_class::<Matrix>()?;
    m.add_function(wrap_pyfunction!(assemble, m)?)?;
    m.add_function(wrap_pyfunction!(solve_problem, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
