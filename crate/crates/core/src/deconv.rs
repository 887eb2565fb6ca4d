//! Fourier deconvolution estimator of a mixing density `g` from samples of
//! `p0 = f * g` with known symmetric noise density `f`:
//!
//! ```text
//! g_hat(theta) = 1/(n (2 pi)^d) sum_i int_{[-R,R]^d} cos(s'(theta - X_i)) / f_hat(s) ds
//! ```
//!
//! The frequency integral is evaluated by tensor Gauss-Legendre quadrature.
//! The sum over observations is folded into the empirical characteristic
//! function at each node, `cos(s'(theta - X)) = cos(a) cos(b) + sin(a) sin(b)`
//! with `a = s'(theta - c)` and `b = s'(X - c)` for a fixed centre `c`, so a
//! deconvolver built once evaluates any `theta` in O(nodes).
//!
//! [`McDeconvolver`] is the one-dimensional Gaussian-noise Monte Carlo
//! variant that draws one frequency `u_i ~ U(0, R)` per observation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::density::{sorted_multi_indices, symmetric_tensor, DerivativeTensor, EstimatorConfig};
use crate::error::{domain, Error, Result};
use crate::numerics::{csum, gauss_legendre_on, CompensatedSum};
use crate::rng::Stream;
use crate::sample::SampleMatrix;

/// Characteristic function of a symmetric noise density.
pub type FourierFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Known noise density, described by its (real) Fourier transform.
#[derive(Clone)]
pub enum NoiseModel {
    /// `N(0, h^2 I)`: `f_hat(s) = exp(-h^2 |s|^2 / 2)`.
    GaussianIsotropic { h: f64 },
    /// Product of Laplace(0, b): `f_hat(s) = prod 1 / (1 + b^2 s_j^2)`.
    LaplaceProduct { b: f64 },
    /// User-supplied transform; must be real, even and equal 1 at 0.
    CustomFourier(FourierFn),
}

impl fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::GaussianIsotropic { h } => write!(f, "GaussianIsotropic {{ h: {h} }}"),
            NoiseModel::LaplaceProduct { b } => write!(f, "LaplaceProduct {{ b: {b} }}"),
            NoiseModel::CustomFourier(_) => write!(f, "CustomFourier(..)"),
        }
    }
}

impl NoiseModel {
    /// No noise (`f_hat = 1`); deconvolution reduces to density estimation.
    pub fn point_mass() -> Self {
        NoiseModel::CustomFourier(Arc::new(|_| 1.0))
    }

    pub fn fourier(&self, s: &[f64]) -> f64 {
        match self {
            NoiseModel::GaussianIsotropic { h } => (-0.5 * h * h * s.iter().map(|v| v * v).sum::<f64>()).exp(),
            NoiseModel::LaplaceProduct { b } => s.iter().map(|v| 1.0 / (1.0 + b * b * v * v)).product(),
            NoiseModel::CustomFourier(ft) => ft(s),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::GaussianIsotropic { h } if !(h.is_finite() && h >= 0.0) => {
                domain(format!("gaussian noise scale must be >= 0, got {h}"))
            }
            NoiseModel::LaplaceProduct { b } if !(b.is_finite() && b >= 0.0) => {
                domain(format!("laplace noise scale must be >= 0, got {b}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeconvOptions {
    /// Minimum Gauss-Legendre nodes per axis is `ceil(nodes_per_radius * R)`.
    pub nodes_per_radius: f64,
    /// Floor on the per-axis node count, for small radii.
    pub min_nodes: usize,
    /// Reject if `max |1 / f_hat|` on the box exceeds this.
    pub max_inverse_ft: f64,
    /// Tensor grids larger than this switch to quasi-Monte Carlo.
    pub max_tensor_nodes: usize,
    pub qmc_points: usize,
    pub qmc_seed: u64,
}

impl Default for DeconvOptions {
    fn default() -> Self {
        Self {
            nodes_per_radius: 8.0,
            min_nodes: 16,
            max_inverse_ft: 1e12,
            max_tensor_nodes: 2_000_000,
            qmc_points: 1 << 16,
            qmc_seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvEvaluation {
    pub theta: Vec<f64>,
    pub raw_value: f64,
    /// Standard error across Monte Carlo draws; `None` for quadrature.
    pub mc_std_error: Option<f64>,
}

/// Quadrature deconvolver with the empirical characteristic function
/// precomputed at every frequency node.
#[derive(Debug, Clone)]
pub struct Deconvolver {
    d: usize,
    n: usize,
    center: Vec<f64>,
    /// Frequency nodes, row-major `m x d`.
    nodes: Vec<f64>,
    /// Quadrature weight times `1 / f_hat(s)`, times `1 / (n (2 pi)^d)`.
    weights: Vec<f64>,
    ecf_cos: Vec<f64>,
    ecf_sin: Vec<f64>,
}

impl Deconvolver {
    /// Builds nodes resolving `cos(s'(theta - X))` for every `theta` within
    /// `spread` (max-norm) of every observation.
    pub fn new(
        sample: &SampleMatrix,
        noise: &NoiseModel,
        cfg: &EstimatorConfig,
        opts: &DeconvOptions,
        spread: f64,
    ) -> Result<Self> {
        noise.validate()?;
        let d = sample.d();
        let r = cfg.r();
        let per_axis = ((opts.nodes_per_radius * r).ceil() as usize)
            .max((4.0 * spread * r / PI).ceil() as usize)
            .max(opts.min_nodes.max(2));

        let (nodes, base_weights) = if d >= 3 && (per_axis as f64).powi(d as i32) > opts.max_tensor_nodes as f64 {
            log::warn!(
                "tensor quadrature would need {per_axis}^{d} nodes; using {} quasi-Monte Carlo points",
                opts.qmc_points
            );
            qmc_nodes(d, r, opts.qmc_points, opts.qmc_seed)
        } else {
            tensor_nodes(d, r, per_axis)
        };

        // Ill-posedness: check the box corner and every node.
        let corner = vec![r; d];
        check_inverse(noise, &corner, opts.max_inverse_ft)?;
        let m = base_weights.len();
        let scale = 1.0 / (sample.n() as f64 * (2.0 * PI).powi(d as i32));
        let mut weights = Vec::with_capacity(m);
        for k in 0..m {
            let s = &nodes[k * d..(k + 1) * d];
            let inv = check_inverse(noise, s, opts.max_inverse_ft)?;
            weights.push(base_weights[k] * inv * scale);
        }

        let center: Vec<f64> = (0..d)
            .map(|j| {
                let (lo, hi) = sample
                    .rows()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
                0.5 * (lo + hi)
            })
            .collect();
        let (ecf_cos, ecf_sin): (Vec<f64>, Vec<f64>) = (0..m)
            .into_par_iter()
            .map(|k| {
                let s = &nodes[k * d..(k + 1) * d];
                let mut c = CompensatedSum::new();
                let mut sn = CompensatedSum::new();
                for row in sample.rows() {
                    let b: f64 = (0..d).map(|j| s[j] * (row[j] - center[j])).sum();
                    let (sb, cb) = b.sin_cos();
                    c.add(cb);
                    sn.add(sb);
                }
                (c.value(), sn.value())
            })
            .unzip();
        Ok(Self { d, n: sample.n(), center, nodes, weights, ecf_cos, ecf_sin })
    }

    /// Spread covering `theta` anywhere in the data's bounding box widened by `margin`.
    pub fn for_data_window(
        sample: &SampleMatrix,
        noise: &NoiseModel,
        cfg: &EstimatorConfig,
        opts: &DeconvOptions,
        margin: f64,
    ) -> Result<Self> {
        let spread = (0..sample.d())
            .map(|j| {
                let col = sample.column(j);
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max)
            + margin;
        Self::new(sample, noise, cfg, opts, spread)
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.d {
            return domain(format!("theta has dimension {}, sample has {}", theta.len(), self.d));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return domain("theta must be finite");
        }
        Ok(())
    }

    #[inline]
    fn phase(&self, k: usize, theta: &[f64]) -> (f64, f64) {
        let s = &self.nodes[k * self.d..(k + 1) * self.d];
        let a: f64 = (0..self.d).map(|j| s[j] * (theta[j] - self.center[j])).sum();
        a.sin_cos()
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(csum((0..self.weights.len()).map(|k| {
            let (sa, ca) = self.phase(k, theta);
            self.weights[k] * (ca * self.ecf_cos[k] + sa * self.ecf_sin[k])
        })))
    }

    /// Derivative tensor of order 1 or 2.
    pub fn derivative(&self, theta: &[f64], order: usize) -> Result<DerivativeTensor> {
        self.check_theta(theta)?;
        if !(1..=2).contains(&order) {
            return domain(format!("deconvolution derivative order must be 1 or 2, got {order}"));
        }
        let d = self.d;
        let values: Vec<(Vec<usize>, f64)> = sorted_multi_indices(d, order)
            .into_iter()
            .map(|idx| {
                let v = csum((0..self.weights.len()).map(|k| {
                    let s = &self.nodes[k * d..(k + 1) * d];
                    let (sa, ca) = self.phase(k, theta);
                    let sprod: f64 = idx.iter().map(|&u| s[u]).product();
                    if order == 1 {
                        // d/dtheta cos(a - b) = -s sin(a - b)
                        -self.weights[k] * sprod * (sa * self.ecf_cos[k] - ca * self.ecf_sin[k])
                    } else {
                        -self.weights[k] * sprod * (ca * self.ecf_cos[k] + sa * self.ecf_sin[k])
                    }
                }));
                (idx, v)
            })
            .collect();
        Ok(symmetric_tensor(d, order, &values))
    }

    /// Value, gradient and row-major Hessian in one pass over the nodes.
    pub fn value_grad_hess(&self, theta: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        self.check_theta(theta)?;
        let d = self.d;
        let mut v = CompensatedSum::new();
        let mut g = vec![CompensatedSum::new(); d];
        let mut h = vec![CompensatedSum::new(); d * d];
        for k in 0..self.weights.len() {
            let s = &self.nodes[k * d..(k + 1) * d];
            let (sa, ca) = self.phase(k, theta);
            let w = self.weights[k];
            let cosd = ca * self.ecf_cos[k] + sa * self.ecf_sin[k];
            let sind = sa * self.ecf_cos[k] - ca * self.ecf_sin[k];
            v.add(w * cosd);
            for a in 0..d {
                g[a].add(-w * s[a] * sind);
                for b in a..d {
                    h[a * d + b].add(-w * s[a] * s[b] * cosd);
                }
            }
        }
        let mut hess = vec![0.0; d * d];
        for a in 0..d {
            for b in a..d {
                let x = h[a * d + b].value();
                hess[a * d + b] = x;
                hess[b * d + a] = x;
            }
        }
        Ok((v.value(), g.iter().map(|c| c.value()).collect(), hess))
    }
}

fn check_inverse(noise: &NoiseModel, s: &[f64], limit: f64) -> Result<f64> {
    let ft = noise.fourier(s);
    let inv = 1.0 / ft;
    if !ft.is_finite() || ft == 0.0 || !inv.is_finite() {
        return Err(Error::IllPosed { frequency: s.to_vec(), reason: format!("noise transform is {ft}") });
    }
    if inv.abs() > limit {
        return Err(Error::IllPosed {
            frequency: s.to_vec(),
            reason: format!("|1/f_hat| = {:e} exceeds {limit:e}", inv.abs()),
        });
    }
    Ok(inv)
}

fn tensor_nodes(d: usize, r: f64, per_axis: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre_on(per_axis, -r, r);
    let total = per_axis.pow(d as u32);
    let mut nodes = Vec::with_capacity(total * d);
    let mut weights = Vec::with_capacity(total);
    for k in 0..total {
        let mut rem = k;
        let mut wk = 1.0;
        let start = nodes.len();
        nodes.resize(start + d, 0.0);
        for j in (0..d).rev() {
            let i = rem % per_axis;
            rem /= per_axis;
            nodes[start + j] = x[i];
            wk *= w[i];
        }
        weights.push(wk);
    }
    (nodes, weights)
}

/// Randomly shifted Halton points on `[-R, R]^d`.
fn qmc_nodes(d: usize, r: f64, m: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    const PRIMES: [u64; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];
    assert!(d <= PRIMES.len(), "quasi-Monte Carlo supports d <= 20");
    let mut stream = Stream::new(seed, 0);
    let shift: Vec<f64> = (0..d).map(|_| stream.uniform()).collect();
    let mut nodes = Vec::with_capacity(m * d);
    for k in 1..=m as u64 {
        for j in 0..d {
            let u = (radical_inverse(k, PRIMES[j]) + shift[j]).fract();
            nodes.push(r * (2.0 * u - 1.0));
        }
    }
    let w = (2.0 * r).powi(d as i32) / m as f64;
    (nodes, vec![w; m])
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

fn max_spread(sample: &SampleMatrix, theta: &[f64]) -> f64 {
    sample
        .rows()
        .map(|row| row.iter().zip(theta).map(|(x, t)| (t - x).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Deconvolution estimate at `theta` with default quadrature settings.
pub fn deconv_at(sample: &SampleMatrix, theta: &[f64], noise: &NoiseModel, cfg: &EstimatorConfig) -> Result<DeconvEvaluation> {
    deconv_at_with(sample, theta, noise, cfg, &DeconvOptions::default())
}

pub fn deconv_at_with(
    sample: &SampleMatrix,
    theta: &[f64],
    noise: &NoiseModel,
    cfg: &EstimatorConfig,
    opts: &DeconvOptions,
) -> Result<DeconvEvaluation> {
    sample.check_point(theta)?;
    let dc = Deconvolver::new(sample, noise, cfg, opts, max_spread(sample, theta))?;
    Ok(DeconvEvaluation { theta: theta.to_vec(), raw_value: dc.value(theta)?, mc_std_error: None })
}

/// Derivative tensor (order 1 or 2) of the deconvolution estimator.
pub fn deconv_derivative_at(
    sample: &SampleMatrix,
    theta: &[f64],
    noise: &NoiseModel,
    cfg: &EstimatorConfig,
    order: usize,
) -> Result<DerivativeTensor> {
    sample.check_point(theta)?;
    let dc = Deconvolver::new(sample, noise, cfg, &DeconvOptions::default(), max_spread(sample, theta))?;
    dc.derivative(theta, order)
}

/// Monte Carlo deconvolver for one-dimensional data under `N(0, h^2)` noise.
///
/// Draws `m` frequencies `u ~ U(0, R)` per observation once; evaluations at
/// different `theta` reuse them, so `value` and `derivative` describe one
/// random function of `theta`.
#[derive(Debug, Clone)]
pub struct McDeconvolver {
    x: Vec<f64>,
    /// Frequencies, `m` per observation, observation-major.
    u: Vec<f64>,
    /// `exp(u^2 h^2 / 2)` for each frequency.
    amp: Vec<f64>,
    m: usize,
    r: f64,
}

impl McDeconvolver {
    pub fn new(sample: &SampleMatrix, h: f64, r: f64, m: usize, seed: u64) -> Result<Self> {
        if sample.d() != 1 {
            return domain(format!("Monte Carlo deconvolution is one-dimensional, got d = {}", sample.d()));
        }
        if !(h.is_finite() && h >= 0.0) {
            return domain(format!("noise scale must be >= 0, got {h}"));
        }
        if !(r.is_finite() && r > 0.0) {
            return domain(format!("radius must be positive, got {r}"));
        }
        if m < 1 {
            return domain("need at least one frequency draw per observation");
        }
        let top = (0.5 * h * h * r * r).exp();
        if !top.is_finite() {
            return Err(Error::IllPosed {
                frequency: vec![r],
                reason: format!("exp((hR)^2/2) overflows for h = {h}, R = {r}"),
            });
        }
        let mut stream = Stream::new(seed, 0);
        let u: Vec<f64> = (0..sample.n() * m).map(|_| stream.uniform_in(0.0, r)).collect();
        let amp = u.iter().map(|v| (0.5 * v * v * h * h).exp()).collect();
        Ok(Self { x: sample.column(0), u, amp, m, r })
    }

    fn summarize(&self, terms: impl Iterator<Item = f64>) -> (f64, f64) {
        let mut s = CompensatedSum::new();
        let mut ss = CompensatedSum::new();
        let mut count = 0usize;
        for t in terms {
            s.add(t);
            ss.add(t * t);
            count += 1;
        }
        let k = count as f64;
        let mean = s.value() / k;
        let se = if count > 1 {
            (((ss.value() - k * mean * mean) / (k - 1.0)).max(0.0) / k).sqrt()
        } else {
            0.0
        };
        (mean, se)
    }

    /// `(R/pi) * mean of exp(u^2 h^2/2) cos(u (theta - x_i))`.
    pub fn value(&self, theta: f64) -> DeconvEvaluation {
        let c = self.r / PI;
        let (mean, se) = self.summarize(
            self.u
                .iter()
                .zip(&self.amp)
                .enumerate()
                .map(|(k, (u, a))| c * a * (u * (theta - self.x[k / self.m])).cos()),
        );
        DeconvEvaluation { theta: vec![theta], raw_value: mean, mc_std_error: Some(se) }
    }

    /// `-(R/pi) * mean of u exp(u^2 h^2/2) sin(u (theta - x_i))`.
    pub fn derivative(&self, theta: f64) -> DeconvEvaluation {
        let c = -self.r / PI;
        let (mean, se) = self.summarize(
            self.u
                .iter()
                .zip(&self.amp)
                .enumerate()
                .map(|(k, (u, a))| c * u * a * (u * (theta - self.x[k / self.m])).sin()),
        );
        DeconvEvaluation { theta: vec![theta], raw_value: mean, mc_std_error: Some(se) }
    }
}

/// Monte Carlo deconvolution estimate (one draw set per `seed`).
pub fn deconv_at_mc(sample: &SampleMatrix, theta: f64, h: f64, radius: f64, m: usize, seed: u64) -> Result<DeconvEvaluation> {
    if !theta.is_finite() {
        return domain("theta must be finite");
    }
    Ok(McDeconvolver::new(sample, h, radius, m, seed)?.value(theta))
}

/// Monte Carlo first derivative; same draws as [`deconv_at_mc`] for a given seed.
pub fn deconv_derivative_mc(sample: &SampleMatrix, theta: f64, h: f64, radius: f64, m: usize, seed: u64) -> Result<DeconvEvaluation> {
    if !theta.is_finite() {
        return domain("theta must be finite");
    }
    Ok(McDeconvolver::new(sample, h, radius, m, seed)?.derivative(theta))
}
