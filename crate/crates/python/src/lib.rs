//! Python bindings: `import wrp`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use wrp_core::density;
use wrp_core::error::WrpError;
use wrp_core::joint::{self, JointLawQuery, JointParams, OuterRule, DEFAULT_STEP};
use wrp_core::levy::{JumpMeasure, LevyTriplet};
use wrp_core::mc;
use wrp_core::payoff::{self, FourierPayoff};
use wrp_core::symmetry::{self, ContourParams, Truncation, DEFAULT_GAMMA, DEFAULT_QUAD_TOL};
use wrp_core::verify;

create_exception!(wrp, Error, PyValueError, "Library error; the message carries the hint.");

fn err(e: WrpError) -> PyErr {
    Error::new_err(format!("{e} ({})", e.hint()))
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for wrp_core::error::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// Spectrally negative Levy model `(mu, sigma, nu)` with exponential-moment bound `zeta`.
#[pyclass(module = "wrp", name = "LevyModel", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyLevyModel {
    inner: LevyTriplet,
}

#[pymethods]
impl PyLevyModel {
    /// Gamma jumps when both `alpha` and `beta` are given, otherwise pure Brownian.
    #[new]
    #[pyo3(signature = (mu, sigma, zeta, alpha=None, beta=None))]
    fn new(mu: f64, sigma: f64, zeta: f64, alpha: Option<f64>, beta: Option<f64>) -> PyResult<Self> {
        let jumps = match (alpha, beta) {
            (Some(alpha), Some(beta)) => JumpMeasure::GammaNegative { alpha, beta },
            (None, None) => JumpMeasure::None,
            _ => return Err(PyValueError::new_err("alpha and beta go together")),
        };
        Ok(Self { inner: LevyTriplet::new(mu, sigma, zeta, jumps).py()? })
    }

    #[staticmethod]
    fn brownian(mu: f64, sigma: f64) -> PyResult<Self> {
        Ok(Self { inner: LevyTriplet::brownian(mu, sigma).py()? })
    }

    /// `sigma B_t - Gamma_t`, mean rate `-beta / alpha`.
    #[staticmethod]
    fn bm_gamma(sigma: f64, alpha: f64, beta: f64) -> PyResult<Self> {
        Ok(Self { inner: LevyTriplet::bm_gamma(sigma, alpha, beta).py()? })
    }

    /// `alpha = beta = sigma = 1`, `zeta = 0.9`.
    #[staticmethod]
    fn example() -> Self {
        Self { inner: LevyTriplet::example() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: LevyTriplet::from_json(text).py()? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    #[getter]
    fn zeta(&self) -> f64 {
        self.inner.zeta
    }

    /// Laplace exponent; raises off the admissible half-plane.
    fn psi(&self, lam: Complex64) -> PyResult<Complex64> {
        self.inner.psi(lam).py()
    }

    fn mean_rate(&self) -> f64 {
        self.inner.mean_rate()
    }

    fn variance_rate(&self) -> f64 {
        self.inner.variance_rate()
    }

    fn __repr__(&self) -> String {
        format!("LevyModel({})", self.inner.to_json())
    }
}

/// Payoff supported below the barrier, with its Fourier preimage.
#[pyclass(module = "wrp", name = "Payoff", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyPayoff {
    inner: FourierPayoff,
}

#[pymethods]
impl PyPayoff {
    /// `(K - x)^+` for `x < 0`.
    #[staticmethod]
    #[pyo3(signature = (strike, zeta=0.9))]
    fn put(strike: f64, zeta: f64) -> PyResult<Self> {
        Ok(Self { inner: payoff::make_put(strike, zeta).py()? })
    }

    /// `1{x <= K}`; only usable through the density pairing.
    #[staticmethod]
    #[pyo3(signature = (strike, zeta=0.9))]
    fn indicator(strike: f64, zeta: f64) -> PyResult<Self> {
        Ok(Self { inner: payoff::make_indicator(strike, zeta).py()? })
    }

    /// Piecewise-linear payoff through `(grid, values)`, zero outside the grid.
    #[staticmethod]
    #[pyo3(signature = (grid, values, zeta=0.9))]
    fn custom(grid: Vec<f64>, values: Vec<f64>, zeta: f64) -> PyResult<Self> {
        Ok(Self { inner: payoff::make_custom(&grid, &values, zeta).py()? })
    }

    /// `sum w_i h_i`; every leg must share `zeta`.
    #[staticmethod]
    fn combine(legs: Vec<(f64, PyPayoff)>) -> PyResult<Self> {
        Ok(Self { inner: payoff::linear_combination(legs.into_iter().map(|(w, p)| (w, p.inner)).collect()).py()? })
    }

    fn h(&self, x: f64) -> f64 {
        self.inner.h(x)
    }

    fn h_hat(&self, z: f64) -> Complex64 {
        self.inner.h_hat(z)
    }

    #[getter]
    fn zeta(&self) -> f64 {
        self.inner.zeta()
    }

    #[getter]
    fn strike(&self) -> Option<f64> {
        self.inner.strike()
    }

    fn __repr__(&self) -> String {
        format!("Payoff({})", self.inner.descriptor())
    }
}

/// Values of the symmetry image `g` on a positive grid, with certificates.
#[pyclass(module = "wrp", name = "SymmetryImage", frozen)]
pub struct PySymmetryImage {
    inner: symmetry::SymmetryImage,
}

#[pymethods]
impl PySymmetryImage {
    #[getter]
    fn x_grid(&self) -> Vec<f64> {
        self.inner.x_grid.clone()
    }

    #[getter]
    fn g_values(&self) -> Vec<f64> {
        self.inner.g_values.clone()
    }

    #[getter]
    fn error_bounds(&self) -> Vec<f64> {
        self.inner.error_bounds.clone()
    }

    #[getter]
    fn im_residuals(&self) -> Vec<f64> {
        self.inner.im_residuals.clone()
    }

    /// Linear interpolation inside the grid; zero at and below the barrier.
    fn interpolate(&self, x: f64) -> PyResult<f64> {
        self.inner.interpolate(x).py()
    }

    fn max_error_bound(&self) -> f64 {
        self.inner.max_error_bound()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Simulated terminal values and running maxima.
#[pyclass(module = "wrp", name = "PathBatch", frozen)]
pub struct PyPathBatch {
    inner: mc::PathBatch,
}

#[pymethods]
impl PyPathBatch {
    #[getter]
    fn terminal(&self) -> Vec<f64> {
        self.inner.terminal.clone()
    }

    #[getter]
    fn running_max(&self) -> Vec<f64> {
        self.inner.running_max.clone()
    }

    /// `(P(X_T <= K + x, M_T >= x), standard error)`.
    fn estimate_joint(&self, strike: f64, x: f64) -> PyResult<(f64, f64)> {
        let e = mc::estimate_joint(&self.inner, strike, x).py()?;
        Ok((e.value, e.se))
    }

    /// Knock-out price of `payoff` started at `x0 <= 0`, barrier at zero.
    fn barrier_price(&self, payoff: &PyPayoff, x0: f64) -> PyResult<(f64, f64)> {
        let e = mc::estimate_barrier_price(&self.inner, |s| payoff.inner.h(s), x0).py()?;
        Ok((e.value, e.se))
    }

    /// `(mean, se, variance, se)` of the terminal value.
    fn moments(&self) -> PyResult<(f64, f64, f64, f64)> {
        let m = mc::terminal_moments(&self.inner).py()?;
        Ok((m.mean.value, m.mean.se, m.variance.value, m.variance.se))
    }

    fn write(&self, path: std::path::PathBuf) -> PyResult<()> {
        let file = std::fs::File::create(path)?;
        self.inner.write_to(std::io::BufWriter::new(file)).py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn contour(gamma: f64, r: f64, big_r: Option<f64>, quad_tol: f64) -> ContourParams {
    ContourParams::new(gamma, r, big_r.unwrap_or(r)).with_quad_tol(quad_tol)
}

/// `g` on `x_grid`; a `target_err` grows `r` until every certificate meets it.
#[pyfunction]
#[pyo3(signature = (model, payoff, x_grid, gamma=DEFAULT_GAMMA, r=60.0, big_r=None, quad_tol=DEFAULT_QUAD_TOL, target_err=None))]
#[allow(clippy::too_many_arguments)]
fn symmetry_image(
    py: Python<'_>,
    model: &PyLevyModel,
    payoff: &PyPayoff,
    x_grid: Vec<f64>,
    gamma: f64,
    r: f64,
    big_r: Option<f64>,
    quad_tol: f64,
    target_err: Option<f64>,
) -> PyResult<PySymmetryImage> {
    let params = contour(gamma, r, big_r, quad_tol);
    let inner = py
        .detach(|| match target_err {
            Some(e) => symmetry::compute_g_curve(&model.inner, &payoff.inner, &x_grid, e, &params),
            None => symmetry::compute_g_image(&model.inner, &payoff.inner, &x_grid, &params),
        })
        .py()?;
    Ok(PySymmetryImage { inner })
}

/// Static hedge `h - g` on `x_grid`: `(values, error_bounds)`.
#[pyfunction]
#[pyo3(signature = (model, payoff, x_grid, gamma=DEFAULT_GAMMA, r=60.0, big_r=None, quad_tol=DEFAULT_QUAD_TOL, target_err=None))]
#[allow(clippy::too_many_arguments)]
fn static_hedge(
    py: Python<'_>,
    model: &PyLevyModel,
    payoff: &PyPayoff,
    x_grid: Vec<f64>,
    gamma: f64,
    r: f64,
    big_r: Option<f64>,
    quad_tol: f64,
    target_err: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let base = contour(gamma, r, big_r, quad_tol);
    let truncation = match target_err {
        Some(target_err) => Truncation::Target { target_err, base },
        None => Truncation::Fixed(base),
    };
    let h = py.detach(|| symmetry::static_hedge_payoff(&model.inner, &payoff.inner, &x_grid, truncation)).py()?;
    Ok((h.values, h.error_bounds))
}

fn joint_params(gamma: f64, rule: &str, step: f64) -> PyResult<JointParams> {
    let rule = match rule {
        "uniform" => OuterRule::Uniform { step },
        "adaptive" => OuterRule::Adaptive,
        other => return Err(PyValueError::new_err(format!("rule must be 'uniform' or 'adaptive', got {other:?}"))),
    };
    Ok(JointParams::default().with_gamma(gamma).with_rule(rule))
}

/// `P(X_T <= K + x, sup_{s <= T} X_s >= x)`.
#[pyfunction]
#[pyo3(signature = (model, strike, x, t, gamma=4.0, rule="uniform", step=DEFAULT_STEP))]
#[allow(clippy::too_many_arguments)]
fn joint_probability(
    py: Python<'_>,
    model: &PyLevyModel,
    strike: f64,
    x: f64,
    t: f64,
    gamma: f64,
    rule: &str,
    step: f64,
) -> PyResult<f64> {
    let params = joint_params(gamma, rule, step)?;
    let q = JointLawQuery::new(strike, x, t).py()?;
    Ok(py.detach(|| joint::joint_probability_once(&model.inner, &q, &params)).py()?.value)
}

/// Joint probabilities with one shared cache; `values[i][j]` at `(t_grid[i], x_grid[j])`.
#[pyfunction]
#[pyo3(signature = (model, strike, x_grid, t_grid, gamma=4.0, rule="uniform", step=DEFAULT_STEP))]
#[allow(clippy::too_many_arguments)]
fn joint_surface(
    py: Python<'_>,
    model: &PyLevyModel,
    strike: f64,
    x_grid: Vec<f64>,
    t_grid: Vec<f64>,
    gamma: f64,
    rule: &str,
    step: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let params = joint_params(gamma, rule, step)?;
    Ok(py.detach(|| joint::joint_surface(&model.inner, strike, &x_grid, &t_grid, &params)).py()?.values)
}

/// Density of `X_t` on `x_grid`.
#[pyfunction]
fn density_slice(py: Python<'_>, model: &PyLevyModel, t: f64, x_grid: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(py.detach(|| density::density(&model.inner, t, &x_grid)).py()?.p_values)
}

/// `P(X_t <= x)`.
#[pyfunction]
fn cdf(model: &PyLevyModel, t: f64, x: f64) -> PyResult<f64> {
    density::cdf(&model.inner, t, x).py()
}

/// Euler paths with exact Gamma increments; reproducible for a given seed at any thread count.
#[pyfunction]
#[pyo3(signature = (model, n_paths, n_steps, t, seed=42, bridge_correction=true))]
fn simulate(
    py: Python<'_>,
    model: &PyLevyModel,
    n_paths: usize,
    n_steps: usize,
    t: f64,
    seed: u64,
    bridge_correction: bool,
) -> PyResult<PyPathBatch> {
    let config = mc::SimConfig::new(n_paths, n_steps, t, seed, bridge_correction).py()?;
    Ok(PyPathBatch { inner: py.detach(|| mc::simulate(&model.inner, &config)).py()? })
}

/// Runs the verification suite and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (suite="quick", seed=42))]
fn run_verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<String> {
    let suite = match suite {
        "quick" => verify::Suite::Quick,
        "full" => verify::Suite::Full,
        other => return Err(PyValueError::new_err(format!("suite must be 'quick' or 'full', got {other:?}"))),
    };
    let report = py.detach(|| verify::run_suite(suite, seed));
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn wrp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("Error", m.py().get_type::<Error>())?;
    m.add_class::<PyLevyModel>()?;
    m.add_class::<PyPayoff>()?;
    m.add_class::<PySymmetryImage>()?;
    m.add_class::<PyPathBatch>()?;
    m.add_function(wrap_pyfunction!(symmetry_image, m)?)?;
    m.add_function(wrap_pyfunction!(static_hedge, m)?)?;
    m.add_function(wrap_pyfunction!(joint_probability, m)?)?;
    m.add_function(wrap_pyfunction!(joint_surface, m)?)?;
    m.add_function(wrap_pyfunction!(density_slice, m)?)?;
    m.add_function(wrap_pyfunction!(cdf, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
