//! Fourier regression estimator `m_hat(x) = a_hat(x) / f_hat(x)` with
//! `a_hat(x) = 1/(n pi^d) sum_i Y_i prod_j K_R(x_j - X_ij)`, the plug-in
//! noise variance and the pointwise interval built on them.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::density::{check_tau, EstimatorConfig, IntervalEstimate};
use crate::error::{domain, Error, Result};
use crate::kernel::product_kernel_raw;
use crate::numerics::{csum, z_two_sided, CompensatedSum};
use crate::rng::Stream;
use crate::sample::LabeledSample;

/// Row cap for the quadratic-cost variance estimator.
pub const DEFAULT_SIGMA2_CAP: usize = 4000;
pub const DEFAULT_SIGMA2_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RegressionEvaluation {
    pub point: Vec<f64>,
    pub m_hat: f64,
    /// `f_hat_{n,R}` at the point.
    pub denominator: f64,
    pub reliable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SmoothingMatrixSummary {
    pub trace_l: f64,
    pub trace_ltl: f64,
    pub n: usize,
}

impl SmoothingMatrixSummary {
    /// `n - 2 tr(L) + tr(L'L)`.
    pub fn residual_dof(&self) -> f64 {
        self.n as f64 - 2.0 * self.trace_l + self.trace_ltl
    }
}

/// `|f_hat|` at or below `1e-10 R^d / n` is treated as zero.
pub fn denominator_floor(r: f64, d: usize, n: usize) -> f64 {
    1e-10 * r.powi(d as i32) / n as f64
}

/// Combines raw kernel weights into `(m_hat, f_hat, reliable)`.
///
/// Reliable points use `Y_0 + sum (Y_i - Y_0) w_i / sum w_i`, which
/// reproduces constant responses exactly. Unreliable points divide
/// `a_hat` by the floor carrying the sign of `f_hat`.
fn combine(y: &[f64], w: &[f64], r: f64, d: usize) -> (f64, f64, bool) {
    let n = y.len();
    let norm = n as f64 * PI.powi(d as i32);
    let sw = csum(w.iter().copied());
    let f = sw / norm;
    let floor = denominator_floor(r, d, n);
    if f.abs() > floor {
        let y0 = y[0];
        let num = csum(y.iter().zip(w).map(|(yi, wi)| (yi - y0) * wi));
        (y0 + num / sw, f, true)
    } else {
        let a = csum(y.iter().zip(w).map(|(yi, wi)| yi * wi)) / norm;
        let guarded = if f < 0.0 { -floor } else { floor };
        (a / guarded, f, false)
    }
}

fn check_inputs(data: &LabeledSample, x: &[f64]) -> Result<()> {
    data.x.check_point(x)
}

/// Regression estimate at `x`.
pub fn regress_at(data: &LabeledSample, x: &[f64], cfg: &EstimatorConfig) -> Result<RegressionEvaluation> {
    check_inputs(data, x)?;
    let r = cfg.r();
    let w: Vec<f64> = data.x.rows().map(|row| product_kernel_raw(x, row, r)).collect();
    let (m_hat, denominator, reliable) = combine(&data.y, &w, r, data.d());
    Ok(RegressionEvaluation { point: x.to_vec(), m_hat, denominator, reliable })
}

/// [`regress_at`] at each point of a curve, evaluated in parallel.
pub fn regress_curve(data: &LabeledSample, curve: &[Vec<f64>], cfg: &EstimatorConfig) -> Result<Vec<RegressionEvaluation>> {
    curve.par_iter().map(|x| regress_at(data, x, cfg)).collect()
}

/// Normalized smoother weights `w_i(x) / sum_k w_k(x)`; `None` if unreliable.
pub fn smoothing_row(data: &LabeledSample, x: &[f64], cfg: &EstimatorConfig) -> Result<Option<Vec<f64>>> {
    check_inputs(data, x)?;
    let r = cfg.r();
    let w: Vec<f64> = data.x.rows().map(|row| product_kernel_raw(x, row, r)).collect();
    let sw = csum(w.iter().copied());
    let f = sw / (data.n() as f64 * PI.powi(data.d() as i32));
    if f.abs() <= denominator_floor(r, data.d(), data.n()) {
        return Ok(None);
    }
    Ok(Some(w.into_iter().map(|v| v / sw).collect()))
}

fn subsample(data: &LabeledSample, cap: usize, seed: u64) -> Result<LabeledSample> {
    let n = data.n();
    if n <= cap {
        return Ok(data.clone());
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut stream = Stream::new(seed, 0);
    for i in 0..cap {
        let j = i + stream.index(n - i);
        idx.swap(i, j);
    }
    let mut chosen = idx[..cap].to_vec();
    chosen.sort_unstable();
    data.select(&chosen)
}

/// Residual sum of squares and traces of the smoothing matrix on (a seeded
/// subsample of at most `cap` rows of) `data`.
pub fn smoothing_summary(data: &LabeledSample, cfg: &EstimatorConfig, cap: usize, seed: u64) -> Result<(f64, SmoothingMatrixSummary)> {
    if cap < 1 {
        return domain("subsample cap must be positive");
    }
    let sub = subsample(data, cap, seed)?;
    let n = sub.n();
    let r = cfg.r();
    let d = sub.d();
    let floor = denominator_floor(r, d, n);
    let norm = n as f64 * PI.powi(d as i32);
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = sub.x.row(i);
            let w: Vec<f64> = sub.x.rows().map(|row| product_kernel_raw(xi, row, r)).collect();
            let (m, f, _) = combine(&sub.y, &w, r, d);
            let sw = csum(w.iter().copied());
            let denom = if f.abs() > floor { sw } else if f < 0.0 { -floor * norm } else { floor * norm };
            let lii = w[i] / denom;
            let ll: f64 = csum(w.iter().map(|v| (v / denom) * (v / denom)));
            let resid = sub.y[i] - m;
            (resid * resid, lii, ll)
        })
        .collect();
    let mut rss = CompensatedSum::new();
    let mut tl = CompensatedSum::new();
    let mut tll = CompensatedSum::new();
    for (a, b, c) in rows {
        rss.add(a);
        tl.add(b);
        tll.add(c);
    }
    Ok((rss.value(), SmoothingMatrixSummary { trace_l: tl.value(), trace_ltl: tll.value(), n }))
}

/// Plug-in noise variance `RSS / (n - 2 tr L + tr L'L)`.
pub fn sigma2_hat(data: &LabeledSample, cfg: &EstimatorConfig, cap: usize) -> Result<f64> {
    sigma2_hat_seeded(data, cfg, cap, DEFAULT_SIGMA2_SEED)
}

pub fn sigma2_hat_seeded(data: &LabeledSample, cfg: &EstimatorConfig, cap: usize, seed: u64) -> Result<f64> {
    let n_eff = data.n().min(cap);
    if n_eff < 3 {
        return domain(format!("variance estimate needs at least 3 rows, got {n_eff}"));
    }
    let (rss, summary) = smoothing_summary(data, cfg, cap, seed)?;
    let dof = summary.residual_dof();
    if !(dof > 0.0) {
        return Err(Error::DegenerateSmoother(dof));
    }
    Ok(rss / dof)
}

/// Interval `m_hat +- z sqrt(sigma2 R^d / (n pi^d |f_hat|))` with `sigma2`
/// from [`sigma2_hat`] at the default cap.
pub fn regress_ci(data: &LabeledSample, x: &[f64], cfg: &EstimatorConfig, tau: f64) -> Result<IntervalEstimate> {
    check_tau(tau)?;
    check_inputs(data, x)?;
    let s2 = sigma2_hat(data, cfg, DEFAULT_SIGMA2_CAP)?;
    regress_ci_with_sigma2(data, x, cfg, tau, s2)
}

/// As [`regress_ci`] with a precomputed noise variance.
pub fn regress_ci_with_sigma2(
    data: &LabeledSample,
    x: &[f64],
    cfg: &EstimatorConfig,
    tau: f64,
    sigma2: f64,
) -> Result<IntervalEstimate> {
    check_tau(tau)?;
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return domain(format!("noise variance must be finite and >= 0, got {sigma2}"));
    }
    let ev = regress_at(data, x, cfg)?;
    if ev.denominator == 0.0 {
        return Err(Error::InfiniteWidth(x.to_vec()));
    }
    let d = data.d();
    let half = z_two_sided(tau)
        * (sigma2 * cfg.radius.pow(d) / (data.n() as f64 * PI.powi(d as i32) * ev.denominator.abs())).sqrt();
    Ok(IntervalEstimate {
        point: x.to_vec(),
        estimate: ev.m_hat,
        lower: ev.m_hat - half,
        upper: ev.m_hat + half,
        level: 1.0 - tau,
        degenerate: !ev.reliable,
    })
}
