//! Uniform confidence bands by bootstrapping the sup-deviation of the
//! Fourier density estimator over a grid.
//!
//! One global critical value `eta` is used for the whole grid: `T_b` is a
//! single supremum statistic per replicate, so the band is
//! `f_hat(x) +- eta * sqrt(R^d / n)` everywhere.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::density::{check_tau, EstimatorConfig};
use crate::error::{domain, Result};
use crate::kernel::{product_kernel_raw, Radius};
use crate::numerics::csum;
use crate::rng::Stream;
use crate::sample::SampleMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapPlan {
    pub replicates: usize,
    pub seed: u64,
    pub grid: Vec<Vec<f64>>,
}

impl BootstrapPlan {
    pub fn new(replicates: usize, seed: u64, grid: Vec<Vec<f64>>) -> Result<Self> {
        if replicates < 1 {
            return domain("bootstrap needs at least one replicate");
        }
        if grid.is_empty() {
            return domain("bootstrap grid must be nonempty");
        }
        Ok(Self { replicates, seed, grid })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BandEstimate {
    pub grid: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
    pub level: f64,
    pub replicates: usize,
    /// Critical value `eta_{1-tau}` of the sup statistic.
    pub critical_value: f64,
    /// Sorted replicate statistics `T_b`.
    pub statistics: Vec<f64>,
}

impl BandEstimate {
    pub fn lower(&self, j: usize) -> f64 {
        self.center[j] - self.half_width[j]
    }

    pub fn upper(&self, j: usize) -> f64 {
        self.center[j] + self.half_width[j]
    }

    pub fn contains_all(&self, values: &[f64]) -> bool {
        values.len() == self.center.len()
            && values
                .iter()
                .enumerate()
                .all(|(j, v)| *v >= self.lower(j) && *v <= self.upper(j))
    }
}

/// `sqrt(n / R^d) * max_j |f_star_j - f_hat_j|`.
pub fn sup_deviation(f_star: &[f64], f_hat: &[f64], n: usize, radius: Radius, d: usize) -> Result<f64> {
    if f_star.len() != f_hat.len() {
        return domain(format!("length mismatch: {} vs {}", f_star.len(), f_hat.len()));
    }
    let sup = f_star
        .iter()
        .zip(f_hat)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((n as f64 / radius.pow(d)).sqrt() * sup)
}

/// Order statistic `ceil((1 - tau) B)` of the sorted statistics (1-based).
pub fn bootstrap_quantile(sorted: &[f64], tau: f64) -> f64 {
    let b = sorted.len();
    let k = ((1.0 - tau) * b as f64).ceil() as usize;
    sorted[k.clamp(1, b) - 1]
}

/// Bootstrap uniform band. Replicate `b` resamples with stream `b` of
/// `plan.seed`, so the result is independent of execution order.
pub fn bootstrap_band(sample: &SampleMatrix, cfg: &EstimatorConfig, plan: &BootstrapPlan, tau: f64) -> Result<BandEstimate> {
    check_tau(tau)?;
    if plan.replicates < 1 {
        return domain("bootstrap needs at least one replicate");
    }
    if plan.grid.is_empty() {
        return domain("bootstrap grid must be nonempty");
    }
    for x in &plan.grid {
        sample.check_point(x)?;
    }
    if (plan.replicates as f64) * tau < 1.0 {
        log::warn!(
            "B * tau = {} < 1: the {}-quantile is the sample maximum",
            plan.replicates as f64 * tau,
            1.0 - tau
        );
    }
    let n = sample.n();
    let d = sample.d();
    let r = cfg.r();
    let norm = (n as f64 * PI.powi(d as i32)).recip();

    // Kernel matrix: one row per grid point, one column per observation.
    let kmat: Vec<Vec<f64>> = plan
        .grid
        .par_iter()
        .map(|x| sample.rows().map(|row| product_kernel_raw(x, row, r)).collect())
        .collect();
    let center: Vec<f64> = kmat.iter().map(|row| norm * csum(row.iter().copied())).collect();

    let mut stats: Vec<f64> = (0..plan.replicates)
        .into_par_iter()
        .map(|b| {
            let mut stream = Stream::new(plan.seed, b as u64);
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[stream.index(n)] += 1;
            }
            let f_star: Vec<f64> = kmat
                .iter()
                .map(|row| {
                    norm * csum(row.iter().zip(&counts).filter(|(_, &c)| c > 0).map(|(k, &c)| k * c as f64))
                })
                .collect();
            sup_deviation(&f_star, &center, n, cfg.radius, d).expect("equal lengths")
        })
        .collect();
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let eta = bootstrap_quantile(&stats, tau);
    let half = eta * (cfg.radius.pow(d) / n as f64).sqrt();
    Ok(BandEstimate {
        grid: plan.grid.clone(),
        half_width: vec![half; center.len()],
        center,
        level: 1.0 - tau,
        replicates: plan.replicates,
        critical_value: eta,
        statistics: stats,
    })
}
