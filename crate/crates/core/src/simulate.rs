//! Seeded generators for the worked examples and the Gaussian-kernel
//! regression baseline they are compared against.
//!
//! Every generator draws from `Stream::new(seed, 0)` in row order, so a
//! `(spec, seed)` pair fixes the data bit for bit.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::markov::{simulate_ar1, simulate_bivariate, MarkovSeries};
use crate::numerics::csum;
use crate::rng::Stream;
use crate::sample::{LabeledSample, SampleMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExampleId {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    Ex5,
    Ex6,
    Ex7,
}

impl ExampleId {
    pub const ALL: [ExampleId; 7] =
        [ExampleId::Ex1, ExampleId::Ex2, ExampleId::Ex3, ExampleId::Ex4, ExampleId::Ex5, ExampleId::Ex6, ExampleId::Ex7];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn default_n(self) -> usize {
        match self {
            ExampleId::Ex1 => 1000,
            ExampleId::Ex2 | ExampleId::Ex3 => 100_000,
            ExampleId::Ex4 | ExampleId::Ex5 | ExampleId::Ex6 => 10_000,
            ExampleId::Ex7 => 9310,
        }
    }

    /// Tunable parameters and their defaults.
    pub fn parameters(self) -> &'static [(&'static str, f64)] {
        match self {
            ExampleId::Ex1 => &[("sigma", 1.0), ("coupling", 0.1)],
            ExampleId::Ex2 | ExampleId::Ex3 => &[("noise", 0.01)],
            ExampleId::Ex4 => &[("h", 0.1), ("weight", 0.6), ("center", 2.0), ("sd", 0.6)],
            ExampleId::Ex5 => &[("sd", 0.6), ("xmax", 2.0)],
            ExampleId::Ex6 => &[("dim", 1.0), ("rho", 0.6), ("rho1", 0.3), ("rho2", 0.7), ("x0", 0.5), ("x0_2", 0.2)],
            ExampleId::Ex7 => &[],
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches("Ex").trim_start_matches("ex");
        match t.parse::<u8>() {
            Ok(k @ 1..=7) => Ok(ExampleId::ALL[k as usize - 1]),
            _ => domain(format!("unknown example '{s}', expected 1..7")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleSpec {
    pub id: ExampleId,
    pub n: usize,
    pub seed: u64,
    pub overrides: BTreeMap<String, f64>,
}

impl ExampleSpec {
    pub fn new(id: ExampleId, seed: u64) -> Self {
        Self { id, n: id.default_n(), seed, overrides: BTreeMap::new() }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn set(mut self, key: &str, value: f64) -> Self {
        self.overrides.insert(key.to_string(), value);
        self
    }

    /// Parameter value after overrides.
    pub fn param(&self, key: &str) -> Result<f64> {
        let default = self.id.parameters().iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        match (self.overrides.get(key), default) {
            (Some(v), Some(_)) => Ok(*v),
            (None, Some(v)) => Ok(v),
            _ => domain(format!("example {} has no parameter '{key}'", self.id)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return domain("example needs n >= 1");
        }
        for (k, v) in &self.overrides {
            if !self.id.parameters().iter().any(|(p, _)| p == k) {
                return domain(format!("example {} has no parameter '{k}'", self.id));
            }
            if !v.is_finite() {
                return domain(format!("parameter '{k}' must be finite, got {v}"));
            }
        }
        let nonneg = |k: &str| -> Result<()> {
            let v = self.param(k)?;
            if v < 0.0 {
                return domain(format!("parameter '{k}' must be >= 0, got {v}"));
            }
            Ok(())
        };
        match self.id {
            ExampleId::Ex1 => {
                nonneg("sigma")?;
                nonneg("coupling")?;
            }
            ExampleId::Ex2 | ExampleId::Ex3 => nonneg("noise")?,
            ExampleId::Ex4 => {
                nonneg("h")?;
                nonneg("sd")?;
                let w = self.param("weight")?;
                if !(0.0..=1.0).contains(&w) {
                    return domain(format!("mixture weight must lie in [0,1], got {w}"));
                }
            }
            ExampleId::Ex5 => {
                nonneg("sd")?;
                if !(self.param("xmax")? > 0.0) {
                    return domain("xmax must be positive");
                }
            }
            ExampleId::Ex6 => {
                let dim = self.param("dim")?;
                if dim != 1.0 && dim != 2.0 {
                    return domain(format!("dim must be 1 or 2, got {dim}"));
                }
                if self.n < 2 {
                    return domain("a series needs n >= 2");
                }
            }
            ExampleId::Ex7 => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Labeled(LabeledSample),
    Sample(SampleMatrix),
    Series(MarkovSeries),
}

impl Generated {
    /// Rows as written to CSV: predictors, then the response if any.
    pub fn header_and_rows(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let xs = |d: usize| (1..=d).map(|j| format!("x{j}")).collect::<Vec<_>>();
        match self {
            Generated::Labeled(l) => {
                let mut h = xs(l.d());
                h.push("y".into());
                let rows = l.x.rows().zip(&l.y).map(|(r, y)| r.iter().copied().chain([*y]).collect()).collect();
                (h, rows)
            }
            Generated::Sample(s) => (xs(s.d()), s.rows().map(<[f64]>::to_vec).collect()),
            Generated::Series(m) => (xs(m.d()), m.data().rows().map(<[f64]>::to_vec).collect()),
        }
    }
}

/// Seeded draw from an example's generating model.
pub fn generate(spec: &ExampleSpec) -> Result<Generated> {
    spec.validate()?;
    let n = spec.n;
    let mut s = Stream::new(spec.seed, 0);
    match spec.id {
        ExampleId::Ex1 => {
            // X1 ~ N(0,1), X2 = X1 + 0.1 Z, Y = X1^2 - 3 X2 + eps.
            let sigma = spec.param("sigma")?;
            let c = spec.param("coupling")?;
            let mut x = Vec::with_capacity(2 * n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let x1 = s.normal();
                let x2 = x1 + c * s.normal();
                let eps = sigma * s.normal();
                x.extend([x1, x2]);
                y.push(x1 * x1 - 3.0 * x2 + eps);
            }
            Ok(Generated::Labeled(LabeledSample::new(SampleMatrix::new(x, n, 2)?, y)?))
        }
        ExampleId::Ex2 | ExampleId::Ex3 => {
            let d = if spec.id == ExampleId::Ex2 { 4 } else { 5 };
            let noise = spec.param("noise")?;
            let mut x = Vec::with_capacity(d * n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let row: Vec<f64> = (0..d).map(|_| s.normal()).collect();
                let eps = s.normal();
                y.push(linear_truth(&row) + noise * eps);
                x.extend(row);
            }
            Ok(Generated::Labeled(LabeledSample::new(SampleMatrix::new(x, n, d)?, y)?))
        }
        ExampleId::Ex4 => {
            let h = spec.param("h")?;
            let w = spec.param("weight")?;
            let c = spec.param("center")?;
            let sd = spec.param("sd")?;
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let mu = if s.uniform() < w { -c } else { c };
                    let theta = mu + sd * s.normal();
                    theta + h * s.normal()
                })
                .collect();
            Ok(Generated::Sample(SampleMatrix::from_column(&x)?))
        }
        ExampleId::Ex5 => {
            let sd = spec.param("sd")?;
            let xmax = spec.param("xmax")?;
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let xi = s.uniform_in(-xmax, xmax);
                let sign = if s.uniform() < 0.5 { -1.0 } else { 1.0 };
                y.push(sign * xi * xi + sd * s.normal());
                x.push(xi);
            }
            Ok(Generated::Labeled(LabeledSample::new(SampleMatrix::from_column(&x)?, y)?))
        }
        ExampleId::Ex6 => {
            let rho = spec.param("rho")?;
            let x0 = spec.param("x0")?;
            if spec.param("dim")? == 1.0 {
                Ok(Generated::Series(simulate_ar1(n, rho, x0, spec.seed)?))
            } else {
                let series = simulate_bivariate(
                    n,
                    rho,
                    spec.param("rho1")?,
                    spec.param("rho2")?,
                    [x0, spec.param("x0_2")?],
                    spec.seed,
                )?;
                Ok(Generated::Series(series))
            }
        }
        ExampleId::Ex7 => domain("example 7 uses an external market index series that is not bundled; pass the data as CSV instead"),
    }
}

/// `sum_j (j/4) x_j`, the regression function of examples 2 and 3.
pub fn linear_truth(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(j, v)| (j as f64 + 1.0) / 4.0 * v).sum()
}

/// Product-Gaussian Nadaraya-Watson estimate with bandwidth `h`.
pub fn gaussian_nw_baseline(data: &LabeledSample, x: &[f64], h: f64) -> Result<f64> {
    data.x.check_point(x)?;
    if !(h.is_finite() && h > 0.0) {
        return domain(format!("bandwidth must be positive, got {h}"));
    }
    let inv = 1.0 / (2.0 * h * h);
    let w: Vec<f64> = data
        .x
        .rows()
        .map(|row| (-inv * row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).exp())
        .collect();
    let sw = csum(w.iter().copied());
    if sw == 0.0 {
        return Err(Error::DegenerateWeights(format!("all Gaussian weights underflow at {x:?} with h = {h}")));
    }
    let y0 = data.y[0];
    Ok(y0 + csum(data.y.iter().zip(&w).map(|(y, w)| (y - y0) * w)) / sw)
}

/// Weighted squared error `sum_k w_k (est_k - truth_k)^2`.
pub fn mise(est: &[f64], truth: &[f64], weights: &[f64]) -> Result<f64> {
    if est.len() != truth.len() || est.len() != weights.len() {
        return domain(format!(
            "length mismatch: {} estimates, {} truth values, {} weights",
            est.len(),
            truth.len(),
            weights.len()
        ));
    }
    Ok(csum(est.iter().zip(truth).zip(weights).map(|((e, t), w)| w * (e - t) * (e - t))))
}
