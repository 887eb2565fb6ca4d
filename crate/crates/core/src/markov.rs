//! Fourier transition estimator for time-ordered data:
//!
//! ```text
//! p_hat(y | x) = sum_{i<T} prod_j K_R(x_j - X_ij) K_R(y_j - X_{i+1,j})
//!              / (pi^d sum_{i<=T} prod_j K_R(x_j - X_ij))
//! ```

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::density::EstimatorConfig;
use crate::error::{domain, Result};
use crate::kernel::product_kernel_raw;
use crate::numerics::csum;
use crate::regression::denominator_floor;
use crate::rng::Stream;
use crate::sample::SampleMatrix;

/// A `T x d` series ordered in time.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSeries {
    data: SampleMatrix,
}

impl MarkovSeries {
    pub fn new(data: SampleMatrix) -> Result<Self> {
        if data.n() < 2 {
            return domain(format!("series needs T >= 2, got {}", data.n()));
        }
        Ok(Self { data })
    }

    pub fn len(&self) -> usize {
        self.data.n()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn d(&self) -> usize {
        self.data.d()
    }

    pub fn data(&self) -> &SampleMatrix {
        &self.data
    }

    /// Lag-1 sample autocorrelation of column `j`.
    pub fn lag1_autocorrelation(&self, j: usize) -> f64 {
        let x = self.data.column(j);
        let n = x.len() as f64;
        let mean = csum(x.iter().copied()) / n;
        let var = csum(x.iter().map(|v| (v - mean) * (v - mean)));
        let cov = csum(x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)));
        cov / var
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TransitionEvaluation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value: f64,
    /// `sum_{i<T} prod K(x - X_i) prod K(y - X_{i+1})`.
    pub numerator_mass: f64,
    /// `sum_{i<=T} prod K(x - X_i)`.
    pub denominator_mass: f64,
    pub reliable: bool,
}

/// The `x`-side of the estimator, shared across `y`.
struct Conditioned<'a> {
    series: &'a MarkovSeries,
    x: Vec<f64>,
    w: Vec<f64>,
    den: f64,
    reliable: bool,
    effective_den: f64,
    r: f64,
}

impl<'a> Conditioned<'a> {
    fn new(series: &'a MarkovSeries, x: &[f64], r: f64) -> Result<Self> {
        series.data.check_point(x)?;
        let d = series.d();
        let t = series.len();
        let w: Vec<f64> = series.data.rows().map(|row| product_kernel_raw(x, row, r)).collect();
        let den = csum(w.iter().copied());
        let scale = t as f64 * PI.powi(d as i32);
        let floor = denominator_floor(r, d, t) * scale;
        let reliable = den.abs() > floor;
        let effective_den = if reliable { den } else if den < 0.0 { -floor } else { floor };
        Ok(Self { series, x: x.to_vec(), w, den, reliable, effective_den, r })
    }

    fn at(&self, y: &[f64]) -> Result<TransitionEvaluation> {
        self.series.data.check_point(y)?;
        let t = self.series.len();
        let num = csum((0..t - 1).map(|i| self.w[i] * product_kernel_raw(y, self.series.data.row(i + 1), self.r)));
        let value = num / (PI.powi(self.series.d() as i32) * self.effective_den);
        Ok(TransitionEvaluation {
            x: self.x.clone(),
            y: y.to_vec(),
            value,
            numerator_mass: num,
            denominator_mass: self.den,
            reliable: self.reliable,
        })
    }

    /// `S_{T-1}(x) / S_T(x)`, the exact `y`-integral of the estimator.
    fn conditional_mass(&self) -> f64 {
        csum(self.w[..self.w.len() - 1].iter().copied()) / self.effective_den
    }
}

/// Transition density estimate `p_hat(y | x)`.
pub fn transition_at(series: &MarkovSeries, x: &[f64], y: &[f64], cfg: &EstimatorConfig) -> Result<TransitionEvaluation> {
    Conditioned::new(series, x, cfg.r())?.at(y)
}

/// [`transition_at`] over many `y` with the `x`-weights computed once.
pub fn transition_grid(
    series: &MarkovSeries,
    x: &[f64],
    y_grid: &[Vec<f64>],
    cfg: &EstimatorConfig,
) -> Result<Vec<TransitionEvaluation>> {
    let c = Conditioned::new(series, x, cfg.r())?;
    y_grid.par_iter().map(|y| c.at(y)).collect()
}

/// `integral p_hat(y | x) dy = S_{T-1}(x) / S_T(x)`, where `S_k` sums the
/// first `k` kernel weights at `x`.
pub fn conditional_mass(series: &MarkovSeries, x: &[f64], cfg: &EstimatorConfig) -> Result<f64> {
    Ok(Conditioned::new(series, x, cfg.r())?.conditional_mass())
}

/// `X_{t+1} = rho X_t + sqrt(1 - rho^2) Z_t`, starting from `x0`; `T` values.
pub fn simulate_ar1(t: usize, rho: f64, x0: f64, seed: u64) -> Result<MarkovSeries> {
    if t < 2 {
        return domain(format!("series needs T >= 2, got {t}"));
    }
    if !(rho.abs() < 1.0) {
        return domain(format!("AR(1) coefficient must satisfy |rho| < 1, got {rho}"));
    }
    if !x0.is_finite() {
        return domain("x0 must be finite");
    }
    let mut s = Stream::new(seed, 0);
    let c = (1.0 - rho * rho).sqrt();
    let mut out = Vec::with_capacity(t);
    let mut x = x0;
    out.push(x);
    for _ in 1..t {
        x = rho * x + c * s.normal();
        out.push(x);
    }
    MarkovSeries::new(SampleMatrix::from_column(&out)?)
}

/// Two-dimensional linear-Gaussian process
/// `X1' = rho X1 + sqrt(1 - rho^2) Z1`,
/// `X2' = rho1 X1 + rho2 X2 + sqrt(1 - rho1^2 - rho2^2) Z2`.
pub fn simulate_bivariate(t: usize, rho: f64, rho1: f64, rho2: f64, x0: [f64; 2], seed: u64) -> Result<MarkovSeries> {
    if t < 2 {
        return domain(format!("series needs T >= 2, got {t}"));
    }
    if !(rho.abs() < 1.0) || !(rho1 * rho1 + rho2 * rho2 < 1.0) {
        return domain(format!("need |rho| < 1 and rho1^2 + rho2^2 < 1, got {rho}, {rho1}, {rho2}"));
    }
    let mut s = Stream::new(seed, 0);
    let c1 = (1.0 - rho * rho).sqrt();
    let c2 = (1.0 - rho1 * rho1 - rho2 * rho2).sqrt();
    let mut out = Vec::with_capacity(2 * t);
    let (mut a, mut b) = (x0[0], x0[1]);
    out.extend([a, b]);
    for _ in 1..t {
        let z1 = s.normal();
        let z2 = s.normal();
        let na = rho * a + c1 * z1;
        let nb = rho1 * a + rho2 * b + c2 * z2;
        a = na;
        b = nb;
        out.extend([a, b]);
    }
    MarkovSeries::new(SampleMatrix::new(out, t, 2)?)
}
