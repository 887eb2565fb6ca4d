//! Modal regression: conditional local modes of the joint Fourier density
//! `f_hat(x, y) = 1/(n pi^{d+1}) sum_i prod_j K_R(x_j - X_ij) K_R(y - Y_i)`
//! in the response direction.
//!
//! For each `x` the modes are roots of the scalar function `y -> df/dy`,
//! found by bracketing sign changes on a grid of spacing `pi / (4R)` and
//! refining with safeguarded Newton steps.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::density::EstimatorConfig;
use crate::error::{domain, Result};
use crate::kernel::{k_deriv_raw, product_kernel_raw};
use crate::modes::AscentConfig;
use crate::numerics::CompensatedSum;
use crate::sample::LabeledSample;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConditionalModeSet {
    pub x: Vec<f64>,
    /// Strictly increasing.
    pub modes_y: Vec<f64>,
    /// Joint density at each mode.
    pub values: Vec<f64>,
    /// `(df/dy, d2f/dy2)` at each mode.
    pub certificates: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModalCurve {
    pub x_grid: Vec<Vec<f64>>,
    pub mode_sets: Vec<ConditionalModeSet>,
}

/// The joint density as a function of `y` at a fixed `x`.
struct Slice<'a> {
    y: &'a [f64],
    w: Vec<f64>,
    r: f64,
    norm: f64,
}

impl<'a> Slice<'a> {
    fn new(data: &'a LabeledSample, x: &[f64], r: f64) -> Self {
        let w = data.x.rows().map(|row| product_kernel_raw(x, row, r)).collect();
        let norm = (data.n() as f64 * PI.powi(data.d() as i32 + 1)).recip();
        Self { y: &data.y, w, r, norm }
    }

    fn eval(&self, y: f64) -> (f64, f64, f64) {
        let mut v = CompensatedSum::new();
        let mut dy = CompensatedSum::new();
        let mut dyy = CompensatedSum::new();
        for (w, yi) in self.w.iter().zip(self.y) {
            if *w == 0.0 {
                continue;
            }
            let u = y - yi;
            v.add(w * k_deriv_raw(u, self.r, 0));
            dy.add(w * k_deriv_raw(u, self.r, 1));
            dyy.add(w * k_deriv_raw(u, self.r, 2));
        }
        (v.value() * self.norm, dy.value() * self.norm, dyy.value() * self.norm)
    }

    fn dy(&self, y: f64) -> f64 {
        let mut dy = CompensatedSum::new();
        for (w, yi) in self.w.iter().zip(self.y) {
            dy.add(w * k_deriv_raw(y - yi, self.r, 1));
        }
        dy.value() * self.norm
    }
}

/// `(f_hat(x, y), df/dy, d2f/dy2)`.
pub fn joint_density_partials(data: &LabeledSample, x: &[f64], y: f64, cfg: &EstimatorConfig) -> Result<(f64, f64, f64)> {
    data.x.check_point(x)?;
    if !y.is_finite() {
        return domain("y must be finite");
    }
    Ok(Slice::new(data, x, cfg.r()).eval(y))
}

/// `[min Y - 3/R, max Y + 3/R]`.
pub fn default_y_range(data: &LabeledSample, cfg: &EstimatorConfig) -> (f64, f64) {
    let lo = data.y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo - 3.0 / cfg.r(), hi + 3.0 / cfg.r())
}

/// Root of `dy` in `[a, b]` with `dy(a) > 0 >= dy(b)`.
fn refine(slice: &Slice<'_>, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> f64 {
    let mut y = 0.5 * (a + b);
    for _ in 0..max_iter.max(100) {
        let (_, g, h) = slice.eval(y);
        if g.abs() <= tol {
            return polish(slice, y, g, h);
        }
        if g > 0.0 {
            a = y;
        } else {
            b = y;
        }
        let newton = y - g / h;
        y = if h < 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            break;
        }
    }
    y
}

/// A few extra Newton steps while they keep shrinking `|dy|`.
fn polish(slice: &Slice<'_>, mut y: f64, mut g: f64, mut h: f64) -> f64 {
    for _ in 0..3 {
        if g == 0.0 || !(h < 0.0) {
            break;
        }
        let next = y - g / h;
        let (_, g2, h2) = slice.eval(next);
        if g2.abs() >= g.abs() {
            break;
        }
        (y, g, h) = (next, g2, h2);
    }
    y
}

/// Conditional modes at `x` within `y_range` (default [`default_y_range`]).
pub fn conditional_modes(
    data: &LabeledSample,
    x: &[f64],
    cfg: &EstimatorConfig,
    search: &AscentConfig,
    y_range: Option<(f64, f64)>,
) -> Result<ConditionalModeSet> {
    data.x.check_point(x)?;
    let (lo, hi) = y_range.unwrap_or_else(|| default_y_range(data, cfg));
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return domain(format!("y range must be finite with positive length, got [{lo}, {hi}]"));
    }
    let r = cfg.r();
    let slice = Slice::new(data, x, r);
    let steps = ((hi - lo) / (PI / (4.0 * r))).ceil().max(1.0) as usize;
    let ys: Vec<f64> = (0..=steps).map(|k| if k == steps { hi } else { lo + (hi - lo) * k as f64 / steps as f64 }).collect();
    let gs: Vec<f64> = ys.iter().map(|&y| slice.dy(y)).collect();

    let mut found: Vec<(f64, f64, f64, f64)> = Vec::new();
    for k in 0..steps {
        if gs[k] > 0.0 && gs[k + 1] <= 0.0 {
            let y = refine(&slice, ys[k], ys[k + 1], search.grad_tol, search.max_iter);
            let (v, g, h) = slice.eval(y);
            if g.abs() <= search.grad_tol && h < 0.0 && v > 0.0 {
                found.push((y, v, g, h));
            } else {
                log::debug!("dropped conditional critical point y={y} (dy={g}, dyy={h}, f={v})");
            }
        }
    }
    let vmax = found.iter().map(|f| f.1).fold(0.0, f64::max);
    found.retain(|f| f.1 > search.ripple_fraction * vmax);

    // Merge modes closer than the dedupe radius, keeping the higher one.
    let dedupe = search.dedupe_radius.unwrap_or(PI / (2.0 * r));
    let mut order: Vec<usize> = (0..found.len()).collect();
    order.sort_by(|&i, &j| found[j].1.total_cmp(&found[i].1));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&k| (found[k].0 - found[i].0).abs() > dedupe) {
            kept.push(i);
        }
    }
    kept.sort_by(|&i, &j| found[i].0.total_cmp(&found[j].0));
    Ok(ConditionalModeSet {
        x: x.to_vec(),
        modes_y: kept.iter().map(|&i| found[i].0).collect(),
        values: kept.iter().map(|&i| found[i].1).collect(),
        certificates: kept.iter().map(|&i| (found[i].2, found[i].3)).collect(),
    })
}

/// [`conditional_modes`] at each grid point, in parallel.
pub fn modal_curve(
    data: &LabeledSample,
    x_grid: &[Vec<f64>],
    cfg: &EstimatorConfig,
    search: &AscentConfig,
    y_range: Option<(f64, f64)>,
) -> Result<ModalCurve> {
    if x_grid.is_empty() {
        return domain("x grid must be nonempty");
    }
    let mode_sets = x_grid
        .par_iter()
        .map(|x| conditional_modes(data, x, cfg, search, y_range))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModalCurve { x_grid: x_grid.to_vec(), mode_sets })
}
