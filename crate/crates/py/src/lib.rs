//! Python bindings: meshes, offline databases, eigen solves and experiment runs.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use rbvem::bench::{self, eigen_run, ExperimentConfig, MeshSpec};
use rbvem::eigsolve::{BoundaryCondition, Diffusivity, RbLibrary};
use rbvem::polymesh::{load_mesh, save_mesh, write_mesh_string, PolyMesh};
use rbvem::rb_offline::{build_offline_db, load_offline_db, save_offline_db, OfflineConfig, OfflineDb};
use rbvem::vem_core::Method;
use rbvem::Error;

create_exception!(rbvem, NumericalError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    let msg = format!("{} ({})", e, e.kind());
    if e.is_numerical() {
        NumericalError::new_err(msg)
    } else if matches!(e, Error::Io { .. }) {
        PyIOError::new_err(msg)
    } else {
        PyValueError::new_err(msg)
    }
}

fn parse_method(name: &str, alpha: Option<f64>, beta: Option<f64>, chi: Option<u8>) -> PyResult<Method> {
    let m = match name {
        "vem" if chi.is_none() => Method::Vem {
            alpha: alpha.unwrap_or(1.0),
            beta: beta.unwrap_or(1.0),
        },
        "rbvem" if alpha.is_none() && beta.is_none() && chi.is_none() => Method::RbVem,
        "rbstab" if alpha.is_none() && beta.is_none() => Method::RbStab { chi: chi.unwrap_or(1) },
        "vem" | "rbvem" | "rbstab" => {
            return Err(PyValueError::new_err(format!(
                "parameters do not apply to method {name}"
            )));
        }
        _ => return Err(PyValueError::new_err(format!("unknown method {name:?}"))),
    };
    m.validate().map_err(to_py)?;
    Ok(m)
}

fn parse_bc(bc: &str) -> PyResult<BoundaryCondition> {
    match bc {
        "dirichlet" => Ok(BoundaryCondition::Dirichlet),
        "neumann" => Ok(BoundaryCondition::Neumann),
        _ => Err(PyValueError::new_err(format!("unknown boundary condition {bc:?}"))),
    }
}

/// Polygonal mesh of a planar domain.
#[pyclass(name = "Mesh", module = "rbvem", frozen)]
struct PyMesh(PolyMesh);

#[pymethods]
impl PyMesh {
    /// Build from `family:size`, e.g. `voronoi:200` or `lshape_dyadic:16`.
    #[staticmethod]
    #[pyo3(signature = (spec, seed=0))]
    fn generate(spec: &str, seed: u64) -> PyResult<Self> {
        let spec = MeshSpec::parse(spec).map_err(to_py)?;
        spec.build(seed).map(PyMesh).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (points, cells, regions=None))]
    fn from_arrays(points: Vec<(f64, f64)>, cells: Vec<Vec<usize>>, regions: Option<Vec<i32>>) -> PyResult<Self> {
        let pts = points
            .into_iter()
            .map(|(x, y)| rbvem::polymesh::Point2::new(x, y))
            .collect();
        let regions = regions.unwrap_or_else(|| vec![0; cells.len()]);
        PolyMesh::new(pts, cells, regions).map(PyMesh).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        load_mesh(path).map(PyMesh).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_mesh(&self.0, path).map_err(to_py)
    }

    fn to_text(&self) -> String {
        write_mesh_string(&self.0)
    }

    #[getter]
    fn n_points(&self) -> usize {
        self.0.n_points()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.0.n_cells()
    }

    /// Largest cell diameter.
    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.0.total_area()
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.0.points().iter().map(|p| (p.x, p.y)).collect()
    }

    #[getter]
    fn cells(&self) -> Vec<Vec<usize>> {
        self.0.cells().to_vec()
    }

    #[getter]
    fn regions(&self) -> Vec<i32> {
        self.0.cell_region().to_vec()
    }

    /// Distinct vertex counts over the cells.
    fn vertex_counts(&self) -> Vec<usize> {
        let mut ns = self.0.vertex_counts();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(n_points={}, n_cells={}, h={:.4})",
            self.0.n_points(),
            self.0.n_cells(),
            self.0.h()
        )
    }
}

/// Reduced basis and precomputed bricks for one vertex count.
#[pyclass(name = "OfflineDb", module = "rbvem", frozen, from_py_object)]
#[derive(Clone)]
struct PyOfflineDb(OfflineDb);

#[pymethods]
impl PyOfflineDb {
    #[staticmethod]
    #[pyo3(signature = (n, m=1, l=100, level=5, seed=0))]
    fn build(py: Python<'_>, n: usize, m: usize, l: usize, level: u32, seed: u64) -> PyResult<Self> {
        let cfg = OfflineConfig {
            l,
            level,
            seed,
            ..OfflineConfig::new(n, m)
        };
        py.detach(|| build_offline_db(&cfg)).map(PyOfflineDb).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        load_offline_db(path).map(PyOfflineDb).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_offline_db(&self.0, path).map_err(to_py)
    }

    /// Keep the first `m` modes per lifting index.
    fn truncate(&self, m: usize) -> PyResult<Self> {
        self.0.truncate(m).map(PyOfflineDb).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m
    }

    #[getter]
    fn l(&self) -> usize {
        self.0.l
    }

    #[getter]
    fn level(&self) -> u32 {
        self.0.level
    }

    fn __repr__(&self) -> String {
        format!(
            "OfflineDb(n={}, m={}, l={}, level={})",
            self.0.n, self.0.m, self.0.l, self.0.level
        )
    }
}

/// Eigenpairs of one solve.
#[pyclass(name = "EigenResult", module = "rbvem", frozen, get_all)]
struct PyEigenResult {
    eigenvalues: Vec<f64>,
    /// Nodal eigenvectors, one list per pair, zero on Dirichlet nodes.
    eigenvectors: Vec<Vec<f64>>,
    h: f64,
    max_residual: f64,
    orthonormality_defect: f64,
}

/// Solve the Laplace or piecewise-constant diffusion eigenproblem on a mesh.
///
/// Rb methods need `databases` covering every vertex count of the mesh.
#[pyfunction]
#[pyo3(signature = (mesh, method="rbvem", num_eigs=10, bc="dirichlet", databases=Vec::new(), alpha=None, beta=None, chi=None, delta=None))]
#[allow(clippy::too_many_arguments)]
fn solve_eigen(
    py: Python<'_>,
    mesh: &PyMesh,
    method: &str,
    num_eigs: usize,
    bc: &str,
    databases: Vec<PyOfflineDb>,
    alpha: Option<f64>,
    beta: Option<f64>,
    chi: Option<u8>,
    delta: Option<f64>,
) -> PyResult<PyEigenResult> {
    let method = parse_method(method, alpha, beta, chi)?;
    let bc = parse_bc(bc)?;
    let diff = delta.map_or_else(Diffusivity::identity, Diffusivity::contrast);
    let lib = if databases.is_empty() {
        None
    } else {
        let mut lib = RbLibrary::new();
        for db in databases {
            lib.insert(db.0);
        }
        Some(lib)
    };
    let run = py
        .detach(|| eigen_run(&mesh.0, method, &diff, lib.as_ref(), bc, num_eigs))
        .map_err(to_py)?;
    Ok(PyEigenResult {
        eigenvalues: run.spectrum.eigenvalues,
        eigenvectors: run.nodal_modes,
        h: run.h,
        max_residual: run.max_residual,
        orthonormality_defect: run.orthonormality_defect,
    })
}

/// Run an experiment from `key=value` config text; returns `{file name: csv text}`.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<BTreeMap<String, String>> {
    let cfg = ExperimentConfig::parse(config).map_err(to_py)?;
    let r = py.detach(|| bench::run_experiment(&cfg)).map_err(to_py)?;
    Ok(r.files.into_iter().collect())
}

/// Least-squares slope of `log err` against `log h` over the last `window` points.
#[pyfunction]
#[pyo3(signature = (h, err, window=3))]
fn convergence_rate(h: Vec<f64>, err: Vec<f64>, window: usize) -> PyResult<f64> {
    bench::convergence_rate(&h, &err, window).map_err(to_py)
}

/// First `count` Dirichlet eigenvalues of the unit square, with multiplicity.
#[pyfunction]
fn square_dirichlet_exact(count: usize) -> Vec<f64> {
    bench::square_dirichlet_exact(count)
}

#[pymodule]
#[pyo3(name = "rbvem")]
fn rbvem_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyOfflineDb>()?;
    m.add_class::<PyEigenResult>()?;
    m.add_function(wrap_pyfunction!(solve_eigen, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_rate, m)?)?;
    m.add_function(wrap_pyfunction!(square_dirichlet_exact, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    Ok(())
}
