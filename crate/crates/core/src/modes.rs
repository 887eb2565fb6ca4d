//! Mode sets of the Fourier density and deconvolution estimators.
//!
//! Modes are located by gradient ascent with Armijo backtracking on the raw
//! estimator. The classical mean-shift fixed point is not used: the sinc
//! kernel takes negative values, so mean-shift loses its ascent property.
//! Where the Hessian is negative definite the ascent direction is the
//! Newton step, which is still checked by the same backtracking rule.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::deconv::{DeconvOptions, Deconvolver, NoiseModel};
use crate::density::{density_value_grad_hess, EstimatorConfig};
use crate::error::{domain, Result};
use crate::numerics::symmetric_eigenvalues;
use crate::sample::{grid_points, GridAxis, SampleMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum StartSet {
    AllDataPoints,
    Grid(Vec<GridAxis>),
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentConfig {
    pub starts: StartSet,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Defaults to `pi / (2R)` when `None`.
    pub dedupe_radius: Option<f64>,
    /// Backtracking factor in (0, 1).
    pub step_shrink: f64,
    /// Modes below this fraction of the highest converged value are dropped.
    pub ripple_fraction: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            starts: StartSet::AllDataPoints,
            max_iter: 200,
            grad_tol: 1e-7,
            dedupe_radius: None,
            step_shrink: 0.5,
            ripple_fraction: 0.05,
        }
    }
}

impl AscentConfig {
    pub fn with_starts(starts: StartSet) -> Self {
        Self { starts, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return domain("max_iter must be >= 1");
        }
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return domain(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if let Some(r) = self.dedupe_radius {
            if !(r > 0.0 && r.is_finite()) {
                return domain(format!("dedupe_radius must be positive, got {r}"));
            }
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return domain(format!("step_shrink must lie in (0,1), got {}", self.step_shrink));
        }
        if !(0.0..1.0).contains(&self.ripple_fraction) {
            return domain(format!("ripple_fraction must lie in [0,1), got {}", self.ripple_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModeSet {
    pub modes: Vec<Vec<f64>>,
    /// Estimator value at each mode.
    pub values: Vec<f64>,
    pub gradient_norms: Vec<f64>,
    pub hessian_top_eigs: Vec<f64>,
    pub k: usize,
    /// Set when nothing converged.
    pub diagnostic: Option<String>,
}

/// Iterates of one ascent run.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentPath {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub converged: bool,
}

type Vgh = (f64, Vec<f64>, Vec<f64>);

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `A p = g` for symmetric positive definite `A`; `None` if not SPD.
fn cholesky_solve(a: &[f64], g: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            if i == j {
                let v = a[i * d + i] - s;
                if !(v > 0.0) {
                    return None;
                }
                l[i * d + i] = v.sqrt();
            } else {
                l[i * d + j] = (a[i * d + j] - s) / l[j * d + j];
            }
        }
    }
    let mut y = vec![0.0; d];
    for i in 0..d {
        y[i] = (g[i] - (0..i).map(|k| l[i * d + k] * y[k]).sum::<f64>()) / l[i * d + i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        x[i] = (y[i] - (i + 1..d).map(|k| l[k * d + i] * x[k]).sum::<f64>()) / l[i * d + i];
    }
    Some(x)
}

/// Ascent from `start`; `max_step` caps the length of each step.
fn ascend<F>(f: &F, start: &[f64], cfg: &AscentConfig, max_step: f64) -> Result<(AscentPath, Vgh)>
where
    F: Fn(&[f64]) -> Result<Vgh>,
{
    let d = start.len();
    let mut x = start.to_vec();
    let mut cur = f(&x)?;
    let mut path = AscentPath { points: vec![x.clone()], values: vec![cur.0], converged: false };
    for _ in 0..cfg.max_iter {
        let (v, ref g, ref h) = cur;
        let gn = norm(g);
        if gn <= cfg.grad_tol {
            path.converged = true;
            break;
        }
        let neg_h: Vec<f64> = h.iter().map(|x| -x).collect();
        let mut p = cholesky_solve(&neg_h, g, d).unwrap_or_else(|| g.iter().map(|gi| gi / gn * max_step).collect());
        let pn = norm(&p);
        if pn > max_step {
            p.iter_mut().for_each(|pi| *pi *= max_step / pn);
        }
        let slope: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + t * pi).collect();
            let next = f(&trial)?;
            if next.0 >= v + ARMIJO_C * t * slope {
                accepted = Some((trial, next));
                break;
            }
            t *= cfg.step_shrink;
        }
        let Some((nx, next)) = accepted else {
            // No progress possible at working precision.
            path.converged = gn <= cfg.grad_tol;
            break;
        };
        assert!(next.0 >= v, "ascent step decreased the estimator");
        let moved = norm(&nx.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        x = nx;
        cur = next;
        path.points.push(x.clone());
        path.values.push(cur.0);
        if moved == 0.0 {
            path.converged = norm(&cur.1) <= cfg.grad_tol;
            break;
        }
    }
    if !path.converged && norm(&cur.1) <= cfg.grad_tol {
        path.converged = true;
    }
    Ok((path, cur))
}

fn resolve_starts(starts: &StartSet, sample: &SampleMatrix) -> Result<Vec<Vec<f64>>> {
    let pts = match starts {
        StartSet::AllDataPoints => sample.rows().map(<[f64]>::to_vec).collect(),
        StartSet::Grid(axes) => {
            if axes.len() != sample.d() {
                return domain(format!("grid has {} axes, sample has d = {}", axes.len(), sample.d()));
            }
            grid_points(axes)
        }
        StartSet::Explicit(list) => {
            for p in list {
                sample.check_point(p)?;
            }
            list.clone()
        }
    };
    if pts.is_empty() {
        return domain("start set is empty");
    }
    Ok(pts)
}

fn find_modes<F>(f: &F, starts: Vec<Vec<f64>>, cfg: &AscentConfig, r: f64) -> Result<ModeSet>
where
    F: Fn(&[f64]) -> Result<Vgh> + Sync,
{
    cfg.validate()?;
    let max_step = PI / (2.0 * r);
    let dedupe = cfg.dedupe_radius.unwrap_or(PI / (2.0 * r));
    let d = starts[0].len();
    let results: Vec<(AscentPath, Vgh)> =
        starts.par_iter().map(|s| ascend(f, s, cfg, max_step)).collect::<Result<_>>()?;

    let mut candidates: Vec<(Vec<f64>, f64, f64, f64)> = results
        .into_iter()
        .filter(|(p, _)| p.converged)
        .filter_map(|(p, (v, g, h))| {
            let top = symmetric_eigenvalues(&h, d)[0];
            (top < 0.0 && v > 0.0).then(|| (p.points.last().unwrap().clone(), v, norm(&g), top))
        })
        .collect();
    if candidates.is_empty() {
        return Ok(ModeSet {
            modes: vec![],
            values: vec![],
            gradient_norms: vec![],
            hessian_top_eigs: vec![],
            k: 0,
            diagnostic: Some(format!("no start out of {} converged to a local maximum", starts.len())),
        });
    }
    let vmax = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let floor = cfg.ripple_fraction * vmax;
    candidates.retain(|c| c.1 >= floor);
    // Stable sort keeps start order among ties, so the result is deterministic.
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut set = ModeSet {
        modes: vec![],
        values: vec![],
        gradient_norms: vec![],
        hessian_top_eigs: vec![],
        k: 0,
        diagnostic: None,
    };
    for (x, v, gn, top) in candidates {
        let dup = set.modes.iter().any(|m| {
            norm(&m.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>()) <= dedupe
        });
        if !dup {
            set.modes.push(x);
            set.values.push(v);
            set.gradient_norms.push(gn);
            set.hessian_top_eigs.push(top);
        }
    }
    set.k = set.modes.len();
    Ok(set)
}

/// Local maxima of the density estimator.
pub fn find_modes_density(sample: &SampleMatrix, cfg: &EstimatorConfig, ascent: &AscentConfig) -> Result<ModeSet> {
    let r = cfg.r();
    let f = |x: &[f64]| -> Result<Vgh> {
        if x.iter().any(|v| !v.is_finite()) {
            return domain("ascent left the finite domain");
        }
        Ok(density_value_grad_hess(sample, x, r))
    };
    find_modes(&f, resolve_starts(&ascent.starts, sample)?, ascent, r)
}

/// One ascent path on the density estimator, for inspection.
pub fn ascent_path_density(
    sample: &SampleMatrix,
    cfg: &EstimatorConfig,
    ascent: &AscentConfig,
    start: &[f64],
) -> Result<AscentPath> {
    ascent.validate()?;
    sample.check_point(start)?;
    let r = cfg.r();
    let f = |x: &[f64]| -> Result<Vgh> { Ok(density_value_grad_hess(sample, x, r)) };
    Ok(ascend(&f, start, ascent, PI / (2.0 * r))?.0)
}

/// Local maxima of the deconvolution estimator of the mixing density.
pub fn find_modes_mixing(
    sample: &SampleMatrix,
    noise: &NoiseModel,
    cfg: &EstimatorConfig,
    ascent: &AscentConfig,
) -> Result<ModeSet> {
    let starts = resolve_starts(&ascent.starts, sample)?;
    let r = cfg.r();
    // Resolve frequencies for theta anywhere near the data or the starts.
    let spread = (0..sample.d())
        .map(|j| {
            let vals = sample.rows().map(|row| row[j]).chain(starts.iter().map(|s| s[j]));
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            hi - lo
        })
        .fold(0.0, f64::max)
        + 2.0 * PI / r;
    let dc = Deconvolver::new(sample, noise, cfg, &DeconvOptions::default(), spread)?;
    let f = |x: &[f64]| dc.value_grad_hess(x);
    find_modes(&f, starts, ascent, r)
}

/// Hausdorff distance between two finite point sets (Euclidean).
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return domain("hausdorff distance needs two nonempty sets");
    }
    let d = a[0].len();
    if a.iter().chain(b).any(|p| p.len() != d) {
        return domain("points must share one dimension");
    }
    let dist = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let directed = |from: &[Vec<f64>], to: &[Vec<f64>]| {
        from.iter()
            .map(|p| to.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}
