//! The one-dimensional Fourier kernel `K_R(u) = sin(R u) / u`, its
//! derivatives up to order three, and d-dimensional products.
//!
//! `K_R(u) = R * sinc(R u)` with `sinc(t) = sin(t) / t`, so the k-th
//! derivative in `u` is `R^(k+1) * sinc^(k)(R u)`. Near `t = 0` the value
//! uses a short Taylor series; the derivatives use a longer series over
//! `|t| < 1`, where their closed forms lose digits to cancellation.

use crate::error::{domain, Result};

/// Frequency cutoff of the Fourier kernel. Larger radius, less smoothing.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
pub struct Radius(f64);

impl Radius {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            domain(format!("radius must be positive and finite, got {value}"))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `R^d`.
    #[inline]
    pub fn pow(self, d: usize) -> f64 {
        self.0.powi(d as i32)
    }
}

/// A kernel value tagged with the derivative order it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub value: f64,
    pub derivative_order: u8,
}

const VALUE_SERIES_THRESHOLD: f64 = 1e-4;
const DERIV_SERIES_THRESHOLD: f64 = 1.0;
const VALUE_SERIES_TERMS: usize = 6;
const DERIV_SERIES_TERMS: usize = 14;

/// `sin(t)/t` and its first three derivatives in `t`.
#[inline]
pub(crate) fn sinc_t(t: f64, order: u8) -> f64 {
    match order {
        0 => {
            if t.abs() < VALUE_SERIES_THRESHOLD {
                sinc_series(t, 0, VALUE_SERIES_TERMS)
            } else {
                t.sin() / t
            }
        }
        _ if t.abs() < DERIV_SERIES_THRESHOLD => sinc_series(t, order, DERIV_SERIES_TERMS),
        1 => {
            let (s, c) = t.sin_cos();
            (t * c - s) / (t * t)
        }
        2 => {
            let (s, c) = t.sin_cos();
            let t2 = t * t;
            (-t2 * s - 2.0 * t * c + 2.0 * s) / (t2 * t)
        }
        3 => {
            let (s, c) = t.sin_cos();
            let t2 = t * t;
            (-t2 * t * c + 3.0 * t2 * s + 6.0 * t * c - 6.0 * s) / (t2 * t2)
        }
        _ => unreachable!("order checked by callers"),
    }
}

/// Term-by-term derivative of `sum_k (-1)^k t^(2k) / (2k+1)!`.
fn sinc_series(t: f64, order: u8, terms: usize) -> f64 {
    let t2 = t * t;
    let mut acc = 0.0;
    // Coefficient of t^(2k) is (-1)^k / (2k+1)!; build it incrementally.
    let mut coef = 1.0;
    for k in 0..terms {
        if k > 0 {
            coef /= -((2 * k) as f64 * (2 * k + 1) as f64);
        }
        let p = 2 * k;
        if p < order as usize {
            continue;
        }
        // d^order/dt^order t^p = p!/(p-order)! t^(p-order)
        let mut falling = 1.0;
        for j in 0..order as usize {
            falling *= (p - j) as f64;
        }
        let power = p - order as usize;
        let tp = if power % 2 == 0 {
            t2.powi((power / 2) as i32)
        } else {
            t * t2.powi((power / 2) as i32)
        };
        acc += coef * falling * tp;
    }
    acc
}

/// Unchecked `K_R^{(order)}(u)` for internal hot loops.
#[inline]
pub(crate) fn k_deriv_raw(u: f64, r: f64, order: u8) -> f64 {
    r.powi(order as i32 + 1) * sinc_t(r * u, order)
}

/// `K_R(u) = sin(R u) / u`, with `K_R(0) = R`.
pub fn sinc_kernel(u: f64, radius: Radius) -> Result<f64> {
    if !u.is_finite() {
        return domain(format!("kernel argument must be finite, got {u}"));
    }
    Ok(k_deriv_raw(u, radius.value(), 0))
}

/// `d^order/du^order K_R(u)` for `order` in 1..=3.
pub fn sinc_kernel_deriv(u: f64, radius: Radius, order: u8) -> Result<f64> {
    if !(1..=3).contains(&order) {
        return domain(format!("kernel derivative order must be 1, 2 or 3, got {order}"));
    }
    if !u.is_finite() {
        return domain(format!("kernel argument must be finite, got {u}"));
    }
    Ok(k_deriv_raw(u, radius.value(), order))
}

/// Tagged evaluation; `order == 0` is the kernel itself.
pub fn kernel_eval(u: f64, radius: Radius, order: u8) -> Result<KernelEval> {
    let value = if order == 0 {
        sinc_kernel(u, radius)?
    } else {
        sinc_kernel_deriv(u, radius, order)?
    };
    Ok(KernelEval { value, derivative_order: order })
}

/// `prod_j K_R(x_j - xi_j)`.
pub fn product_kernel(x: &[f64], xi: &[f64], radius: Radius) -> Result<f64> {
    if x.len() != xi.len() {
        return domain(format!("dimension mismatch: {} vs {}", x.len(), xi.len()));
    }
    if x.iter().chain(xi).any(|v| !v.is_finite()) {
        return domain("kernel arguments must be finite");
    }
    Ok(product_kernel_raw(x, xi, radius.value()))
}

#[inline]
pub(crate) fn product_kernel_raw(x: &[f64], xi: &[f64], r: f64) -> f64 {
    let mut p = 1.0;
    for (a, b) in x.iter().zip(xi) {
        p *= r * sinc_t(r * (a - b), 0);
    }
    p
}
