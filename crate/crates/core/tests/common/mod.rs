#![allow(dead_code)]

use fourier_smooth::rng::Stream;
use fourier_smooth::sample::SampleMatrix;
use std::f64::consts::PI;

/// `sin(R u) / u`, written out directly.
pub fn sinc(u: f64, r: f64) -> f64 {
    if u == 0.0 {
        r
    } else {
        (r * u).sin() / u
    }
}

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    phi((x - mean) / sd) / sd
}

pub fn normal_draws(n: usize, seed: u64) -> Vec<f64> {
    let mut s = Stream::new(seed, 0);
    (0..n).map(|_| s.normal()).collect()
}

pub fn normal_sample(n: usize, d: usize, seed: u64) -> SampleMatrix {
    SampleMatrix::new(normal_draws(n * d, seed), n, d).unwrap()
}

/// Composite Simpson rule with `panels` (rounded up to even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let m = panels + panels % 2;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// `(1/(n pi^d)) sum_i prod_k sin(R(x_k - X_ik))/(x_k - X_ik)`.
pub fn density_oracle(sample: &SampleMatrix, x: &[f64], r: f64) -> f64 {
    let d = sample.d();
    let s: f64 = sample.rows().map(|row| row.iter().zip(x).map(|(a, b)| sinc(b - a, r)).product::<f64>()).sum();
    s / (sample.n() as f64 * PI.powi(d as i32))
}

/// Evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).collect()
}
