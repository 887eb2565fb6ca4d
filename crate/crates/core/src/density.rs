//! The Fourier density estimator
//!
//! ```text
//! f_hat(x) = 1/(n pi^d) * sum_i prod_j sin(R (x_j - X_ij)) / (x_j - X_ij)
//! ```
//!
//! with its derivatives, radius rules, least-squares cross-validation and
//! the plug-in pointwise confidence interval.
//!
//! The estimator is signed. `raw_value` keeps the sign; `clipped_value`
//! applies the configured [`ClipMode`].

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::kernel::{k_deriv_raw, product_kernel_raw, Radius};
use crate::numerics::{csum, z_two_sided, CompensatedSum};
use crate::sample::SampleMatrix;

/// Tail class of the target density's Fourier transform; parameterizes the
/// radius rules.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Smoothness {
    /// `|p_hat(s)| <= C exp(-c1 * sum |s_j|^alpha)`.
    Supersmooth { alpha: f64, c1: f64 },
    /// `|p_hat(s)| <= c prod 1/(1 + |s_j|^beta)`.
    OrdinarySmooth { beta: f64 },
}

impl Smoothness {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Smoothness::Supersmooth { alpha, c1 } => {
                if !(alpha.is_finite() && alpha > 0.0 && c1.is_finite() && c1 > 0.0) {
                    return domain(format!("supersmooth needs alpha > 0 and c1 > 0, got {alpha}, {c1}"));
                }
            }
            Smoothness::OrdinarySmooth { beta } => {
                if !(beta.is_finite() && beta > 1.0) {
                    return domain(format!("ordinary smooth needs beta > 1, got {beta}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum ClipMode {
    #[default]
    None,
    MaxWithZero,
    AbsoluteValue,
}

impl ClipMode {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            ClipMode::None => v,
            ClipMode::MaxWithZero => v.max(0.0),
            ClipMode::AbsoluteValue => v.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EstimatorConfig {
    pub radius: Radius,
    /// Smoothness hint the radius came from, if any.
    pub smoothness: Option<Smoothness>,
    pub clip: ClipMode,
}

impl EstimatorConfig {
    pub fn new(radius: Radius) -> Self {
        Self { radius, smoothness: None, clip: ClipMode::None }
    }

    pub fn with_radius(r: f64) -> Result<Self> {
        Ok(Self::new(Radius::new(r)?))
    }

    /// Radius chosen by [`select_radius`].
    pub fn from_rule(smoothness: Smoothness, d: usize, n: usize) -> Result<Self> {
        let radius = select_radius(smoothness, d, n)?;
        Ok(Self { radius, smoothness: Some(smoothness), clip: ClipMode::None })
    }

    pub fn clip(mut self, clip: ClipMode) -> Self {
        self.clip = clip;
        self
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.radius.value()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEvaluation {
    pub point: Vec<f64>,
    pub raw_value: f64,
    /// `raw_value` after the configured clip (identity under `ClipMode::None`,
    /// which can leave it negative).
    pub clipped_value: f64,
    /// Empirical variance of the kernel terms over `n`: an estimate of `Var f_hat(x)`.
    pub variance_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IntervalEstimate {
    pub point: Vec<f64>,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Nominal coverage `1 - tau`.
    pub level: f64,
    /// True when the half-width collapsed to zero because the plug-in
    /// density was not positive.
    pub degenerate: bool,
}

/// Symmetric tensor of r-th partial derivatives, stored densely (`d^r`
/// entries, row-major in the index tuple).
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeTensor {
    pub order: usize,
    pub d: usize,
    pub entries: Vec<f64>,
}

impl DerivativeTensor {
    pub fn get(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order);
        self.entries[flat_index(idx, self.d)]
    }

    /// First-order tensor as a gradient vector.
    pub fn as_gradient(&self) -> &[f64] {
        assert_eq!(self.order, 1);
        &self.entries
    }
}

fn flat_index(idx: &[usize], d: usize) -> usize {
    idx.iter().fold(0, |acc, &u| acc * d + u)
}

/// Sorted index tuples of length `r` over `0..d` (one per symmetry class).
pub(crate) fn sorted_multi_indices(d: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for u in start..d {
            cur.push(u);
            rec(d, r, u, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, r, 0, &mut Vec::with_capacity(r), &mut out);
    out
}

/// All permutations of a multi-index (with repeats, duplicates harmless).
pub(crate) fn permutations(idx: &[usize]) -> Vec<Vec<usize>> {
    if idx.len() <= 1 {
        return vec![idx.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..idx.len() {
        let mut rest = idx.to_vec();
        let head = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Scatters values computed on sorted multi-indices into a full symmetric tensor.
pub(crate) fn symmetric_tensor(d: usize, r: usize, values: &[(Vec<usize>, f64)]) -> DerivativeTensor {
    let mut entries = vec![0.0; d.pow(r as u32)];
    for (idx, v) in values {
        for p in permutations(idx) {
            entries[flat_index(&p, d)] = *v;
        }
    }
    DerivativeTensor { order: r, d, entries }
}

/// `pi^{-d} prod_j K_R(x_j - X_ij)` for every row, in row order.
pub(crate) fn kernel_terms<'a>(sample: &'a SampleMatrix, x: &[f64], r: f64) -> impl Iterator<Item = f64> + 'a {
    let x = x.to_vec();
    let norm = PI.powi(sample.d() as i32).recip();
    sample.rows().map(move |row| norm * product_kernel_raw(&x, row, r))
}

/// Fourier density estimate at one point.
pub fn density_at(sample: &SampleMatrix, x: &[f64], cfg: &EstimatorConfig) -> Result<DensityEvaluation> {
    sample.check_point(x)?;
    let n = sample.n() as f64;
    let mut sum = CompensatedSum::new();
    let mut sum_sq = CompensatedSum::new();
    for t in kernel_terms(sample, x, cfg.r()) {
        sum.add(t);
        sum_sq.add(t * t);
    }
    let raw = sum.value() / n;
    let variance = if sample.n() > 1 {
        ((sum_sq.value() - n * raw * raw) / (n - 1.0)).max(0.0) / n
    } else {
        0.0
    };
    Ok(DensityEvaluation {
        point: x.to_vec(),
        raw_value: raw,
        clipped_value: cfg.clip.apply(raw),
        variance_estimate: variance,
    })
}

/// [`density_at`] over a list of points; evaluated in parallel, returned in input order.
pub fn density_grid(sample: &SampleMatrix, grid: &[Vec<f64>], cfg: &EstimatorConfig) -> Result<Vec<DensityEvaluation>> {
    grid.par_iter().map(|x| density_at(sample, x, cfg)).collect()
}

/// r-th order derivative tensor of the estimator, r in {1, 2}.
pub fn density_derivative_at(
    sample: &SampleMatrix,
    x: &[f64],
    order: usize,
    cfg: &EstimatorConfig,
) -> Result<DerivativeTensor> {
    if !(1..=2).contains(&order) {
        return domain(format!("density derivative order must be 1 or 2, got {order}"));
    }
    sample.check_point(x)?;
    let d = sample.d();
    let r = cfg.r();
    let norm = (sample.n() as f64 * PI.powi(d as i32)).recip();
    let values: Vec<(Vec<usize>, f64)> = sorted_multi_indices(d, order)
        .into_iter()
        .map(|idx| {
            let mut counts = vec![0u8; d];
            for &u in &idx {
                counts[u] += 1;
            }
            let s = csum(sample.rows().map(|row| {
                let mut p = 1.0;
                for l in 0..d {
                    p *= k_deriv_raw(x[l] - row[l], r, counts[l]);
                }
                p
            }));
            (idx, s * norm)
        })
        .collect();
    Ok(symmetric_tensor(d, order, &values))
}

/// Value, gradient and Hessian (row-major) in one pass over the sample.
pub(crate) fn density_value_grad_hess(sample: &SampleMatrix, x: &[f64], r: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let d = sample.d();
    let norm = (sample.n() as f64 * PI.powi(d as i32)).recip();
    let mut val = CompensatedSum::new();
    let mut grad = vec![CompensatedSum::new(); d];
    let mut hess = vec![CompensatedSum::new(); d * d];
    let mut k0 = vec![0.0; d];
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    for row in sample.rows() {
        for l in 0..d {
            let u = x[l] - row[l];
            k0[l] = k_deriv_raw(u, r, 0);
            k1[l] = k_deriv_raw(u, r, 1);
            k2[l] = k_deriv_raw(u, r, 2);
        }
        let prod_except = |skip: &[usize]| -> f64 {
            (0..d).filter(|l| !skip.contains(l)).map(|l| k0[l]).product()
        };
        val.add(k0.iter().product());
        for a in 0..d {
            grad[a].add(k1[a] * prod_except(&[a]));
            for b in a..d {
                let v = if a == b { k2[a] * prod_except(&[a]) } else { k1[a] * k1[b] * prod_except(&[a, b]) };
                hess[a * d + b].add(v);
            }
        }
    }
    let mut h = vec![0.0; d * d];
    for a in 0..d {
        for b in a..d {
            let v = hess[a * d + b].value() * norm;
            h[a * d + b] = v;
            h[b * d + a] = v;
        }
    }
    (val.value() * norm, grad.iter().map(|g| g.value() * norm).collect(), h)
}

/// Radius from the smoothness class and sample size.
///
/// Supersmooth: `R = (ln n / (2 c1))^(1/alpha)`.
/// Ordinary smooth: `R = n^(1/(d + 2(beta - 1)))`.
pub fn select_radius(smoothness: Smoothness, d: usize, n: usize) -> Result<Radius> {
    smoothness.validate()?;
    if n < 2 {
        return domain(format!("radius rule needs n >= 2, got {n}"));
    }
    if d == 0 {
        return domain("dimension must be positive");
    }
    let n = n as f64;
    let r = match smoothness {
        Smoothness::Supersmooth { alpha, c1 } => (n.ln() / (2.0 * c1)).powf(1.0 / alpha),
        Smoothness::OrdinarySmooth { beta } => n.powf(1.0 / (d as f64 + 2.0 * (beta - 1.0))),
    };
    Radius::new(r)
}

/// Least-squares cross-validation score, closed form via
/// `int K_R(x-a) K_R(x-b) dx = pi K_R(a-b)`.
pub fn lscv_score(sample: &SampleMatrix, radius: Radius) -> Result<f64> {
    let n = sample.n();
    if n < 3 {
        return domain(format!("LSCV needs n >= 3, got {n}"));
    }
    let r = radius.value();
    let d = sample.d();
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = sample.row(i);
            csum(((i + 1)..n).map(|j| product_kernel_raw(xi, sample.row(j), r)))
        })
        .collect();
    let off_diag = 2.0 * csum(row_sums);
    let diag = n as f64 * radius.pow(d);
    let nf = n as f64;
    let pid = PI.powi(d as i32);
    Ok((diag + off_diag) / (nf * nf * pid) - 2.0 * off_diag / (nf * (nf - 1.0) * pid))
}

/// Candidate minimizing [`lscv_score`]; ties go to the smaller radius.
pub fn select_radius_lscv(sample: &SampleMatrix, candidates: &[Radius]) -> Result<Radius> {
    if candidates.is_empty() {
        return domain("LSCV needs at least one candidate radius");
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = (sorted[0], lscv_score(sample, sorted[0])?);
    for &c in &sorted[1..] {
        let s = lscv_score(sample, c)?;
        if s < best.1 {
            best = (c, s);
        }
    }
    Ok(best.0)
}

/// Plug-in interval `f_hat +- z * sqrt(R^d max(f_hat, 0) / (n pi^d))`.
pub fn pointwise_ci(sample: &SampleMatrix, x: &[f64], cfg: &EstimatorConfig, tau: f64) -> Result<IntervalEstimate> {
    check_tau(tau)?;
    let f = density_at(sample, x, cfg)?.raw_value;
    let d = sample.d();
    let half = z_two_sided(tau)
        * (cfg.radius.pow(d) * f.max(0.0) / (sample.n() as f64 * PI.powi(d as i32))).sqrt();
    Ok(IntervalEstimate {
        point: x.to_vec(),
        estimate: f,
        lower: f - half,
        upper: f + half,
        level: 1.0 - tau,
        degenerate: f <= 0.0,
    })
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        domain(format!("tau must lie in (0,1), got {tau}"))
    }
}

/// Sample variance of the kernel terms `pi^{-d} prod K_R(x - X_i)` divided by `R^d`.
/// Tends to `p0(x) / pi^d` as R grows.
pub fn variance_limit_check(sample: &SampleMatrix, x: &[f64], cfg: &EstimatorConfig) -> Result<f64> {
    sample.check_point(x)?;
    let n = sample.n();
    if n < 2 {
        return domain("variance diagnostic needs n >= 2");
    }
    let terms: Vec<f64> = kernel_terms(sample, x, cfg.r()).collect();
    let mean = csum(terms.iter().copied()) / n as f64;
    let ss = csum(terms.iter().map(|t| (t - mean) * (t - mean)));
    Ok(ss / (n as f64 - 1.0) / cfg.radius.pow(sample.d()))
}
