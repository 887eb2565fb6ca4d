use crate::error::{domain, Result};

/// An `n x d` matrix of observations stored row-major. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl SampleMatrix {
    pub fn new(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return domain(format!("sample must have n >= 1 and d >= 1, got n={n}, d={d}"));
        }
        if data.len() != n * d {
            return domain(format!("expected {} entries for {n}x{d}, got {}", n * d, data.len()));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite entry at row {}, column {}", k / d, k % d));
        }
        Ok(Self { data, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return domain(format!("ragged rows: row {i} has {} entries, expected {d}", rows[i].len()));
        }
        Self::new(rows.concat(), rows.len(), d)
    }

    /// One-dimensional sample.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), values.len(), 1)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Rows selected by index, in the given order (repeats allowed).
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self::new(data, idx.len(), self.d)
    }

    /// Adds `shift` to every row.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.d {
            return domain("shift dimension mismatch");
        }
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| v + shift[k % self.d])
            .collect();
        Self::new(data, self.n, self.d)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.data.iter().map(|v| v * c).collect(), self.n, self.d)
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return domain(format!("point has dimension {}, sample has {}", x.len(), self.d));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return domain(format!("point {x:?} has non-finite coordinates"));
        }
        Ok(())
    }
}

/// Predictors plus a response: the `(X_i, Y_i)` pairs of a regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: SampleMatrix,
    pub y: Vec<f64>,
}

impl LabeledSample {
    pub fn new(x: SampleMatrix, y: Vec<f64>) -> Result<Self> {
        if y.len() != x.n() {
            return domain(format!("response has {} entries, predictors have {} rows", y.len(), x.n()));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite response at row {i}"));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn d(&self) -> usize {
        self.x.d()
    }

    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(self.x.select(idx)?, idx.iter().map(|&i| self.y[i]).collect())
    }
}

/// Evenly spaced points on `[min, max]`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || count == 0 || (count > 1 && !(max > min)) {
            return domain(format!("invalid grid axis {min}:{max}:{count}"));
        }
        Ok(Self { min, max, count })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 }).collect()
    }
}

/// Cartesian product of the axes; the last axis varies fastest.
pub fn grid_points(axes: &[GridAxis]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let pts = axis.points();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                pts.iter().map(move |&p| {
                    let mut v = prefix.clone();
                    v.push(p);
                    v
                })
            })
            .collect();
    }
    out
}
