//! Python bindings. Tables cross the boundary as lists of rows; anything that
//! iterates like one (including 2-D numpy arrays) is accepted on input.

use std::path::PathBuf;

use ::corrsynth as core;
use core::pipeline::{resolve_targets, TargetsSource};
use core::{CsvSchema, ErrorClass, MissingPolicy, SamplerConfig, SamplerMode, StatTargets};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: core::Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    match e.class() {
        ErrorClass::Validation => PyValueError::new_err(msg),
        ErrorClass::Numeric => PyArithmeticError::new_err(msg),
        ErrorClass::Io => PyOSError::new_err(msg),
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(PyValueError::new_err(format!("row {i} has {} values, expected {m}", r.len())));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn matrix_rows(v: &DMatrix<f64>) -> Vec<Vec<f64>> {
    v.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn schema(columns: Option<Vec<String>>, delimiter: char, has_header: bool, drop_rows: bool) -> PyResult<CsvSchema> {
    if !delimiter.is_ascii() {
        return Err(PyValueError::new_err("delimiter must be a single ASCII character"));
    }
    Ok(CsvSchema {
        delimiter: delimiter as u8,
        has_header,
        selected_columns: columns,
        missing_policy: if drop_rows { MissingPolicy::DropRow } else { MissingPolicy::Error },
    })
}

/// Column-named numeric table with `n >= 2` rows and `1 <= m <= n` columns.
#[pyclass(name = "FeatureMatrix", module = "corrsynth_py", frozen)]
pub struct PyFeatureMatrix {
    inner: core::FeatureMatrix,
}

#[pymethods]
impl PyFeatureMatrix {
    #[new]
    #[pyo3(signature = (rows, names=None))]
    fn new(rows: Vec<Vec<f64>>, names: Option<Vec<String>>) -> PyResult<Self> {
        let values = rows_to_matrix(&rows)?;
        let inner = match names {
            Some(names) => core::FeatureMatrix::new(values, names),
            None => core::FeatureMatrix::unnamed(values),
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (columns, names=None))]
    fn from_columns(columns: Vec<Vec<f64>>, names: Option<Vec<String>>) -> PyResult<Self> {
        let names = names.unwrap_or_else(|| (1..=columns.len()).map(|j| format!("x{j}")).collect());
        let inner = core::FeatureMatrix::from_columns(&columns, names).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, columns=None, delimiter=',', has_header=true, drop_rows=false))]
    fn read_csv(path: PathBuf, columns: Option<Vec<String>>, delimiter: char, has_header: bool, drop_rows: bool) -> PyResult<Self> {
        let schema = schema(columns, delimiter, has_header, drop_rows)?;
        Ok(Self { inner: core::read_csv(path, &schema).map_err(to_py)? })
    }

    #[pyo3(signature = (path, delimiter=','))]
    fn write_csv(&self, path: PathBuf, delimiter: char) -> PyResult<()> {
        let schema = schema(None, delimiter, true, false)?;
        core::write_csv(&self.inner, path, &schema).map_err(to_py)
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.nrows(), self.inner.ncols())
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(self.inner.values())
    }

    fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.inner.ncols()).map(|j| self.inner.column(j).to_vec()).collect()
    }

    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let j = self
            .inner
            .column_index(name)
            .ok_or_else(|| PyValueError::new_err(format!("no column `{name}`")))?;
        Ok(self.inner.column(j).to_vec())
    }

    fn __len__(&self) -> usize {
        self.inner.nrows()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("FeatureMatrix(n={}, names={:?})", self.inner.nrows(), self.inner.names())
    }
}

#[pyfunction]
fn pearson_correlation(f: &PyFeatureMatrix) -> PyResult<Vec<Vec<f64>>> {
    Ok(core::pearson_correlation(&f.inner).map_err(to_py)?.rows())
}

#[pyfunction]
fn cosine_similarity(f: &PyFeatureMatrix) -> PyResult<Vec<Vec<f64>>> {
    Ok(core::cosine_similarity(&f.inner).map_err(to_py)?.rows())
}

/// `{"means": [...], "variances": [...]}` (population variances).
#[pyfunction]
fn feature_stats<'py>(py: Python<'py>, f: &PyFeatureMatrix) -> PyResult<Bound<'py, PyDict>> {
    let stats = core::FeatureStats::compute(&f.inner);
    let out = PyDict::new(py);
    out.set_item("means", stats.means)?;
    out.set_item("variances", stats.variances)?;
    Ok(out)
}

/// Returns a dict with `s_hat` and the decomposition diagnostics.
///
/// `targets` is "original", "synthetic" or a path to a name,mean,variance CSV;
/// explicit `means` and `variances` override it.
#[pyfunction]
#[pyo3(signature = (original, synthetic, targets="original", means=None, variances=None, rel_tol=core::DEFAULT_REL_TOL))]
fn enforce_correlations<'py>(
    py: Python<'py>,
    original: &PyFeatureMatrix,
    synthetic: &PyFeatureMatrix,
    targets: &str,
    means: Option<Vec<f64>>,
    variances: Option<Vec<f64>>,
    rel_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let t = match (means, variances) {
        (Some(mu), Some(var)) => StatTargets::new(mu, var),
        (None, None) => {
            let source: TargetsSource = targets.parse().map_err(to_py)?;
            resolve_targets(&source, &original.inner, &synthetic.inner)
        }
        _ => return Err(PyValueError::new_err("pass both means and variances, or neither")),
    }
    .map_err(to_py)?;
    let e = core::enforce_correlations(&original.inner, &synthetic.inner, &t, rel_tol).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("s_hat", PyFeatureMatrix { inner: e.s_hat })?;
    out.set_item("sigma", e.factors.sigma.clone())?;
    out.set_item("rank_mask", e.factors.rank_mask.clone())?;
    out.set_item("scaling", e.scaling.diagonal)?;
    out.set_item("means", e.offset.row)?;
    out.set_item("rank", e.diagnostics.rank)?;
    out.set_item("unique", e.diagnostics.unique)?;
    out.set_item("completed", e.diagnostics.completed)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (original, rows=None, seed=0, mode="bootstrap"))]
fn naive_sample(original: &PyFeatureMatrix, rows: Option<usize>, seed: u64, mode: &str) -> PyResult<PyFeatureMatrix> {
    let mode: SamplerMode = mode.parse().map_err(to_py)?;
    let cfg = SamplerConfig { mode, rows: rows.unwrap_or(original.inner.nrows()), seed };
    Ok(PyFeatureMatrix { inner: core::naive_sample(&original.inner, &cfg).map_err(to_py)? })
}

/// Gaussian table with population correlation `corr`, or the banded
/// `rho^|i-j|` target when only `rho` is given.
#[pyfunction]
#[pyo3(signature = (n, m, corr=None, rho=None, seed=0))]
fn make_test_dataset(n: usize, m: usize, corr: Option<Vec<Vec<f64>>>, rho: Option<f64>, seed: u64) -> PyResult<PyFeatureMatrix> {
    let target = match (corr, rho) {
        (Some(rows), None) => core::CorrelationMatrix {
            entries: rows_to_matrix(&rows)?,
            kind: core::CorrelationKind::Pearson,
            names: (1..=m).map(|j| format!("x{j}")).collect(),
        },
        (None, Some(rho)) => core::ar1_correlation(m, rho).map_err(to_py)?,
        (None, None) => core::ar1_correlation(m, 0.0).map_err(to_py)?,
        (Some(_), Some(_)) => return Err(PyValueError::new_err("pass corr or rho, not both")),
    };
    Ok(PyFeatureMatrix { inner: core::make_test_dataset(n, m, &target, seed).map_err(to_py)? })
}

#[pyfunction]
fn ks_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    core::ks_distance(&a, &b).map_err(to_py)
}

#[pyfunction]
fn frobenius_gap(a: &PyFeatureMatrix, b: &PyFeatureMatrix) -> PyResult<f64> {
    core::frobenius_gap(&a.inner, &b.inner).map_err(to_py)
}

/// Fidelity report as a dict (same layout as the JSON report files).
#[pyfunction]
#[pyo3(signature = (original, candidate, start=None, ecdf_points=256))]
fn build_report<'py>(
    py: Python<'py>,
    original: &PyFeatureMatrix,
    candidate: &PyFeatureMatrix,
    start: Option<&PyFeatureMatrix>,
    ecdf_points: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let report = core::build_report(&original.inner, &candidate.inner, start.map(|s| &s.inner), ecdf_points)
        .map_err(to_py)?;
    let text = report.to_json().map_err(to_py)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pymodule]
fn corrsynth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFeatureMatrix>()?;
    m.add_function(wrap_pyfunction!(pearson_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(feature_stats, m)?)?;
    m.add_function(wrap_pyfunction!(enforce_correlations, m)?)?;
    m.add_function(wrap_pyfunction!(naive_sample, m)?)?;
    m.add_function(wrap_pyfunction!(make_test_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(ks_distance, m)?)?;
    m.add_function(wrap_pyfunction!(frobenius_gap, m)?)?;
    m.add_function(wrap_pyfunction!(build_report, m)?)?;
    m.add("DEFAULT_REL_TOL", core::DEFAULT_REL_TOL)?;
    Ok(())
}
