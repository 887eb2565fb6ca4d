//! Python bindings: samples, estimators, modes and example generators.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use fourier_smooth::band::{bootstrap_band as band_impl, BootstrapPlan};
use fourier_smooth::cli::{parse_noise, parse_rule};
use fourier_smooth::deconv::{deconv_at as deconv_impl, deconv_derivative_at, McDeconvolver};
use fourier_smooth::density::{
    density_at as density_impl, density_derivative_at, lscv_score as lscv_impl, pointwise_ci as ci_impl,
    select_radius as rule_impl, select_radius_lscv, EstimatorConfig, IntervalEstimate as CoreInterval,
};
use fourier_smooth::error::Error;
use fourier_smooth::kernel::{sinc_kernel as sinc_impl, sinc_kernel_deriv as sinc_deriv_impl, Radius};
use fourier_smooth::markov::{simulate_ar1 as ar1_impl, transition_at as transition_impl, MarkovSeries};
use fourier_smooth::modal::conditional_modes as cond_impl;
use fourier_smooth::modes::{
    find_modes_density as modes_impl, find_modes_mixing as mixing_impl, hausdorff as hausdorff_impl, AscentConfig,
    ModeSet as CoreModeSet, StartSet,
};
use fourier_smooth::regression::{regress_at as regress_impl, regress_ci as regress_ci_impl, sigma2_hat as sigma2_impl};
use fourier_smooth::sample::{LabeledSample as CoreLabeled, SampleMatrix};
use fourier_smooth::simulate::{generate, gaussian_nw_baseline as nw_impl, ExampleSpec, Generated};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyOSError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn cfg(radius: f64) -> PyResult<EstimatorConfig> {
    EstimatorConfig::with_radius(radius).map_err(py_err)
}

/// An n x d sample, built from a list of rows.
#[pyclass(frozen)]
struct Sample {
    inner: SampleMatrix,
}

#[pymethods]
impl Sample {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: SampleMatrix::from_rows(&rows).map_err(py_err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }
}

/// Predictor rows plus a response vector.
#[pyclass(frozen)]
struct LabeledSample {
    inner: CoreLabeled,
}

#[pymethods]
impl LabeledSample {
    #[new]
    fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<Self> {
        let x = SampleMatrix::from_rows(&x).map_err(py_err)?;
        Ok(Self { inner: CoreLabeled::new(x, y).map_err(py_err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y.clone()
    }

    fn x_rows(&self) -> Vec<Vec<f64>> {
        self.inner.x.rows().map(<[f64]>::to_vec).collect()
    }
}

#[pyclass(frozen, get_all)]
struct IntervalEstimate {
    point: Vec<f64>,
    estimate: f64,
    lower: f64,
    upper: f64,
    level: f64,
    degenerate: bool,
}

impl From<CoreInterval> for IntervalEstimate {
    fn from(c: CoreInterval) -> Self {
        Self { point: c.point, estimate: c.estimate, lower: c.lower, upper: c.upper, level: c.level, degenerate: c.degenerate }
    }
}

#[pymethods]
impl IntervalEstimate {
    fn __repr__(&self) -> String {
        format!("IntervalEstimate(estimate={}, lower={}, upper={}, level={})", self.estimate, self.lower, self.upper, self.level)
    }
}

#[pyclass(frozen, get_all)]
struct BandEstimate {
    grid: Vec<Vec<f64>>,
    center: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    level: f64,
    critical_value: f64,
}

#[pyclass(frozen, get_all)]
struct ModeSet {
    modes: Vec<Vec<f64>>,
    values: Vec<f64>,
    gradient_norms: Vec<f64>,
    hessian_top_eigs: Vec<f64>,
    k: usize,
}

impl From<CoreModeSet> for ModeSet {
    fn from(m: CoreModeSet) -> Self {
        Self { modes: m.modes, values: m.values, gradient_norms: m.gradient_norms, hessian_top_eigs: m.hessian_top_eigs, k: m.k }
    }
}

#[pymethods]
impl ModeSet {
    fn __repr__(&self) -> String {
        format!("ModeSet(k={}, modes={:?})", self.k, self.modes)
    }
}

#[pyclass(frozen, get_all)]
struct RegressionEvaluation {
    point: Vec<f64>,
    m_hat: f64,
    denominator: f64,
    reliable: bool,
}

/// A time-ordered series.
#[pyclass(frozen)]
struct Series {
    inner: MarkovSeries,
}

#[pymethods]
impl Series {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = SampleMatrix::from_rows(&rows).map_err(py_err)?;
        Ok(Self { inner: MarkovSeries::new(m).map_err(py_err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.data().rows().map(<[f64]>::to_vec).collect()
    }

    fn lag1_autocorrelation(&self, column: usize) -> PyResult<f64> {
        if column >= self.inner.d() {
            return Err(PyValueError::new_err("column out of range"));
        }
        Ok(self.inner.lag1_autocorrelation(column))
    }
}

#[pyfunction]
fn sinc_kernel(u: f64, radius: f64) -> PyResult<f64> {
    sinc_impl(u, Radius::new(radius).map_err(py_err)?).map_err(py_err)
}

#[pyfunction]
fn sinc_kernel_deriv(u: f64, radius: f64, order: u8) -> PyResult<f64> {
    sinc_deriv_impl(u, Radius::new(radius).map_err(py_err)?, order).map_err(py_err)
}

/// Radius from a rule string `supersmooth:ALPHA:C1` or `ordinary:BETA`.
#[pyfunction]
fn select_radius(rule: &str, d: usize, n: usize) -> PyResult<f64> {
    Ok(rule_impl(parse_rule(rule).map_err(py_err)?, d, n).map_err(py_err)?.value())
}

#[pyfunction]
fn lscv_score(sample: &Sample, radius: f64) -> PyResult<f64> {
    lscv_impl(&sample.inner, Radius::new(radius).map_err(py_err)?).map_err(py_err)
}

#[pyfunction]
fn select_radius_by_lscv(sample: &Sample, candidates: Vec<f64>) -> PyResult<f64> {
    let c: Vec<Radius> = candidates.into_iter().map(Radius::new).collect::<Result<_, _>>().map_err(py_err)?;
    Ok(select_radius_lscv(&sample.inner, &c).map_err(py_err)?.value())
}

#[pyfunction]
fn density_at(sample: &Sample, x: Vec<f64>, radius: f64) -> PyResult<f64> {
    Ok(density_impl(&sample.inner, &x, &cfg(radius)?).map_err(py_err)?.raw_value)
}

#[pyfunction]
fn density_grid(sample: &Sample, points: Vec<Vec<f64>>, radius: f64) -> PyResult<Vec<f64>> {
    let c = cfg(radius)?;
    points.iter().map(|p| Ok(density_impl(&sample.inner, p, &c).map_err(py_err)?.raw_value)).collect()
}

/// Flattened derivative tensor of order 1 (gradient) or 2 (Hessian, row-major).
#[pyfunction]
fn density_derivative(sample: &Sample, x: Vec<f64>, order: usize, radius: f64) -> PyResult<Vec<f64>> {
    Ok(density_derivative_at(&sample.inner, &x, order, &cfg(radius)?).map_err(py_err)?.entries)
}

#[pyfunction]
fn pointwise_ci(sample: &Sample, x: Vec<f64>, radius: f64, tau: f64) -> PyResult<IntervalEstimate> {
    Ok(ci_impl(&sample.inner, &x, &cfg(radius)?, tau).map_err(py_err)?.into())
}

#[pyfunction]
#[pyo3(signature = (sample, grid, radius, tau=0.1, replicates=200, seed=0))]
fn bootstrap_band(sample: &Sample, grid: Vec<Vec<f64>>, radius: f64, tau: f64, replicates: usize, seed: u64) -> PyResult<BandEstimate> {
    let plan = BootstrapPlan::new(replicates, seed, grid).map_err(py_err)?;
    let b = band_impl(&sample.inner, &cfg(radius)?, &plan, tau).map_err(py_err)?;
    let lower = (0..b.grid.len()).map(|j| b.lower(j)).collect();
    let upper = (0..b.grid.len()).map(|j| b.upper(j)).collect();
    Ok(BandEstimate { grid: b.grid, center: b.center, lower, upper, level: b.level, critical_value: b.critical_value })
}

/// Deconvolution estimate; `noise` is `gaussian:H`, `laplace:B` or `none`.
#[pyfunction]
fn deconv_at(sample: &Sample, theta: Vec<f64>, noise: &str, radius: f64) -> PyResult<f64> {
    let nm = parse_noise(noise).map_err(py_err)?;
    Ok(deconv_impl(&sample.inner, &theta, &nm, &cfg(radius)?).map_err(py_err)?.raw_value)
}

#[pyfunction]
fn deconv_gradient(sample: &Sample, theta: Vec<f64>, noise: &str, radius: f64) -> PyResult<Vec<f64>> {
    let nm = parse_noise(noise).map_err(py_err)?;
    Ok(deconv_derivative_at(&sample.inner, &theta, &nm, &cfg(radius)?, 1).map_err(py_err)?.entries)
}

/// Monte Carlo deconvolution under N(0, h^2) noise: `(value, derivative)` at each theta.
#[pyfunction]
#[pyo3(signature = (sample, thetas, h, radius, draws=1, seed=0))]
fn deconv_mc(sample: &Sample, thetas: Vec<f64>, h: f64, radius: f64, draws: usize, seed: u64) -> PyResult<Vec<(f64, f64)>> {
    let mc = McDeconvolver::new(&sample.inner, h, radius, draws, seed).map_err(py_err)?;
    Ok(thetas.iter().map(|&t| (mc.value(t).raw_value, mc.derivative(t).raw_value)).collect())
}

#[pyfunction]
fn regress_at(data: &LabeledSample, x: Vec<f64>, radius: f64) -> PyResult<RegressionEvaluation> {
    let e = regress_impl(&data.inner, &x, &cfg(radius)?).map_err(py_err)?;
    Ok(RegressionEvaluation { point: e.point, m_hat: e.m_hat, denominator: e.denominator, reliable: e.reliable })
}

#[pyfunction]
fn regress_ci(data: &LabeledSample, x: Vec<f64>, radius: f64, tau: f64) -> PyResult<IntervalEstimate> {
    Ok(regress_ci_impl(&data.inner, &x, &cfg(radius)?, tau).map_err(py_err)?.into())
}

#[pyfunction]
#[pyo3(signature = (data, radius, cap=4000))]
fn sigma2_hat(data: &LabeledSample, radius: f64, cap: usize) -> PyResult<f64> {
    sigma2_impl(&data.inner, &cfg(radius)?, cap).map_err(py_err)
}

#[pyfunction]
fn gaussian_nw_baseline(data: &LabeledSample, x: Vec<f64>, h: f64) -> PyResult<f64> {
    nw_impl(&data.inner, &x, h).map_err(py_err)
}

/// Modes of the density estimate; `starts=None` starts from every data point.
#[pyfunction]
#[pyo3(signature = (sample, radius, starts=None))]
fn find_modes_density(sample: &Sample, radius: f64, starts: Option<Vec<Vec<f64>>>) -> PyResult<ModeSet> {
    let asc = AscentConfig::with_starts(starts.map_or(StartSet::AllDataPoints, StartSet::Explicit));
    Ok(modes_impl(&sample.inner, &cfg(radius)?, &asc).map_err(py_err)?.into())
}

#[pyfunction]
#[pyo3(signature = (sample, noise, radius, starts=None))]
fn find_modes_mixing(sample: &Sample, noise: &str, radius: f64, starts: Option<Vec<Vec<f64>>>) -> PyResult<ModeSet> {
    let nm = parse_noise(noise).map_err(py_err)?;
    let asc = AscentConfig::with_starts(starts.map_or(StartSet::AllDataPoints, StartSet::Explicit));
    Ok(mixing_impl(&sample.inner, &nm, &cfg(radius)?, &asc).map_err(py_err)?.into())
}

#[pyfunction]
fn hausdorff(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    hausdorff_impl(&a, &b).map_err(py_err)
}

/// Conditional modes of y at `x`; returns the sorted mode locations.
#[pyfunction]
#[pyo3(signature = (data, x, radius, y_range=None))]
fn conditional_modes(data: &LabeledSample, x: Vec<f64>, radius: f64, y_range: Option<(f64, f64)>) -> PyResult<Vec<f64>> {
    Ok(cond_impl(&data.inner, &x, &cfg(radius)?, &AscentConfig::default(), y_range).map_err(py_err)?.modes_y)
}

#[pyfunction]
fn transition_at(series: &Series, x: Vec<f64>, y: Vec<f64>, radius: f64) -> PyResult<f64> {
    Ok(transition_impl(&series.inner, &x, &y, &cfg(radius)?).map_err(py_err)?.value)
}

#[pyfunction]
fn simulate_ar1(t: usize, rho: f64, x0: f64, seed: u64) -> PyResult<Series> {
    Ok(Series { inner: ar1_impl(t, rho, x0, seed).map_err(py_err)? })
}

/// Data for example 1..6 as `(header, rows)`.
#[pyfunction]
#[pyo3(signature = (example, seed=0, n=None))]
fn generate_example(example: &str, seed: u64, n: Option<usize>) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let id = example.parse().map_err(py_err)?;
    let mut spec = ExampleSpec::new(id, seed);
    if let Some(n) = n {
        spec = spec.with_n(n);
    }
    let g: Generated = generate(&spec).map_err(py_err)?;
    Ok(g.header_and_rows())
}

#[pymodule]
fn pyfourier(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Sample>()?;
    m.add_class::<LabeledSample>()?;
    m.add_class::<Series>()?;
    m.add_class::<IntervalEstimate>()?;
    m.add_class::<BandEstimate>()?;
    m.add_class::<ModeSet>()?;
    m.add_class::<RegressionEvaluation>()?;
    m.add_function(wrap_pyfunction!(sinc_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(sinc_kernel_deriv, m)?)?;
    m.add_function(wrap_pyfunction!(select_radius, m)?)?;
    m.add_function(wrap_pyfunction!(lscv_score, m)?)?;
    m.add_function(wrap_pyfunction!(select_radius_by_lscv, m)?)?;
    m.add_function(wrap_pyfunction!(density_at, m)?)?;
    m.add_function(wrap_pyfunction!(density_grid, m)?)?;
    m.add_function(wrap_pyfunction!(density_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(pointwise_ci, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_band, m)?)?;
    m.add_function(wrap_pyfunction!(deconv_at, m)?)?;
    m.add_function(wrap_pyfunction!(deconv_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(deconv_mc, m)?)?;
    m.add_function(wrap_pyfunction!(regress_at, m)?)?;
    m.add_function(wrap_pyfunction!(regress_ci, m)?)?;
    m.add_function(wrap_pyfunction!(sigma2_hat, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_nw_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(find_modes_density, m)?)?;
    m.add_function(wrap_pyfunction!(find_modes_mixing, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_modes, m)?)?;
    m.add_function(wrap_pyfunction!(transition_at, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_ar1, m)?)?;
    m.add_function(wrap_pyfunction!(generate_example, m)?)?;
    Ok(())
}
