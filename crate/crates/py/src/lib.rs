//! Python bindings for the Fourier-matrix perturbation engine.

use hadamard_perturb::defect::{self, DEFAULT_RANK_TOL};
use hadamard_perturb::expansion::{apply_pattern, breakdown_scan, ConstraintPattern, PatternLabel, Precision, ScanConfig};
use hadamard_perturb::genpert::{toy_series, ToyBranch};
use hadamard_perturb::hcore::{self, ComplexMatrix};
use hadamard_perturb::n12::{self, N12Branch, N12Sampler};
use hadamard_perturb::Error;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

fn to_rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn from_rows(rows: &[Vec<Complex64>]) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// `(Σ gcd(n, N), d1)` for the Fourier matrix of size `n`.
#[pyfunction]
pub fn linear_defect(n: usize) -> PyResult<(u64, i64)> {
    if n < 1 {
        return Err(PyValueError::new_err("n must be positive"));
    }
    let d = defect::linear_defect(n);
    Ok((d.total, d.defect))
}

/// Largest dimension of an affine family through `F_n`.
#[pyfunction]
pub fn affine_max_dim(n: usize) -> PyResult<i64> {
    if n < 2 {
        return Err(PyValueError::new_err("n must be at least 2"));
    }
    Ok(defect::affine_max_dim(n))
}

/// Defect of a Hadamard matrix computed from the rank of its tangent map.
#[pyfunction]
#[pyo3(signature = (matrix, rank_tol = DEFAULT_RANK_TOL))]
pub fn numeric_defect(matrix: Vec<Vec<Complex64>>, rank_tol: f64) -> PyResult<i64> {
    let h = from_rows(&matrix)?;
    Ok(defect::numeric_defect(&h, rank_tol).map_err(py_err)?.defect)
}

#[pyfunction]
pub fn fourier(n: usize) -> Vec<Vec<Complex64>> {
    to_rows(&hcore::fourier(n))
}

#[pyfunction]
#[pyo3(signature = (matrix, tol = hcore::DEFAULT_TOL))]
pub fn is_hadamard(matrix: Vec<Vec<Complex64>>, tol: f64) -> PyResult<bool> {
    Ok(hcore::is_hadamard(&from_rows(&matrix)?, tol).passes)
}

/// Breakdown scan; returns the JSON report.
///
/// `branch` selects an `N = 12` solution branch instead of a pattern.
#[pyfunction]
#[pyo3(signature = (n, seed, max_order = 8, trials = 3, tol = 1e-6, pattern = "none", branch = None, precision = "double"))]
#[allow(clippy::too_many_arguments)]
pub fn scan(
    n: usize,
    seed: u64,
    max_order: usize,
    trials: usize,
    tol: f64,
    pattern: &str,
    branch: Option<&str>,
    precision: &str,
) -> PyResult<String> {
    let mut cfg = ScanConfig::new(n, max_order, seed);
    cfg.trials = trials;
    cfg.tol = tol;
    cfg.precision = parse::<Precision>(precision)?;
    let report = match branch {
        Some(b) => {
            if n != n12::N {
                return Err(PyValueError::new_err("branch requires n = 12"));
            }
            breakdown_scan(&cfg, &N12Sampler { branch: parse::<N12Branch>(b)? })
        }
        None => {
            let label = parse::<PatternLabel>(pattern)?;
            let p = match label {
                PatternLabel::None => ConstraintPattern::none(n),
                PatternLabel::Custom => return Err(PyValueError::new_err("custom patterns are not supported here")),
                other => apply_pattern(n, other).map_err(py_err)?,
            };
            breakdown_scan(&cfg, &p)
        }
    }
    .map_err(py_err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Exact toy-model series as fraction strings: `(x coefficients, y coefficients)`.
#[pyfunction]
pub fn toy(branch: &str) -> PyResult<(Vec<String>, Vec<String>)> {
    let s = toy_series(parse::<ToyBranch>(branch)?).map_err(py_err)?;
    Ok((s.x.iter().map(|c| c.to_string()).collect(), s.y.iter().map(|c| c.to_string()).collect()))
}

/// `(disagreements, passes)` of the `N = 12` table/engine cross-check.
#[pyfunction]
#[pyo3(signature = (points, seed, tol = 1e-8))]
pub fn n12_selftest(points: usize, seed: u64, tol: f64) -> PyResult<(usize, bool)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let rep = n12::selftest(points, tol, &mut rng).map_err(py_err)?;
    Ok((rep.disagreements, rep.passes))
}

/// `(params, trivial, nontrivial, removed, remaining)` for an `N = 12` pattern.
#[pyfunction]
pub fn n12_dimension_count(pattern: &str) -> PyResult<(usize, usize, usize, usize, usize)> {
    let d = n12::dimension_count(parse::<PatternLabel>(pattern)?).map_err(py_err)?;
    Ok((d.params, d.trivial, d.nontrivial, d.removed, d.remaining))
}

#[pymodule]
fn hadamard_perturb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(linear_defect, m)?)?;
    m.add_function(wrap_pyfunction!(affine_max_dim, m)?)?;
    m.add_function(wrap_pyfunction!(numeric_defect, m)?)?;
    m.add_function(wrap_pyfunction!(fourier, m)?)?;
    m.add_function(wrap_pyfunction!(is_hadamard, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(toy, m)?)?;
    m.add_function(wrap_pyfunction!(n12_selftest, m)?)?;
    m.add_function(wrap_pyfunction!(n12_dimension_count, m)?)?;
    Ok(())
}
