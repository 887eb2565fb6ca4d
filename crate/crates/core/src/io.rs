//! CSV tables: a header row, then numeric rows.
//!
//! Predictor columns are `x1..xd`; a labeled sample adds a `y` column.
//! Values are written with 17 significant digits so a round trip is exact.

use std::io::{Read, Write};

use crate::error::{domain, Error, Result};
use crate::sample::{LabeledSample, SampleMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn y_column(&self) -> Option<usize> {
        self.header.iter().position(|h| h.trim().eq_ignore_ascii_case("y"))
    }

    /// All columns except `y` (if present) as a sample.
    pub fn to_sample(&self) -> Result<SampleMatrix> {
        let skip = self.y_column();
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| r.iter().enumerate().filter(|(j, _)| Some(*j) != skip).map(|(_, v)| *v).collect())
            .collect();
        if rows.is_empty() {
            return domain("input has no data rows");
        }
        SampleMatrix::from_rows(&rows)
    }

    /// Predictors plus the `y` column (or the last column if none is named `y`).
    pub fn to_labeled(&self) -> Result<LabeledSample> {
        if self.header.len() < 2 {
            return domain("labeled input needs at least one predictor column and a response column");
        }
        let yj = self.y_column().unwrap_or(self.header.len() - 1);
        let x: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| r.iter().enumerate().filter(|(j, _)| *j != yj).map(|(_, v)| *v).collect())
            .collect();
        if x.is_empty() {
            return domain("input has no data rows");
        }
        let y = self.rows.iter().map(|r| r[yj]).collect();
        LabeledSample::new(SampleMatrix::from_rows(&x)?, y)
    }
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        Error::Io(e.to_string())
    } else {
        Error::Domain(format!("malformed CSV: {e}"))
    }
}

pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return domain("CSV header row is missing");
    }
    let mut table = Table::new(header);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let row_no = i + 2;
        if rec.len() != table.header.len() {
            return domain(format!("row {row_no}: expected {} columns, found {}", table.header.len(), rec.len()));
        }
        let mut row = Vec::with_capacity(rec.len());
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Domain(format!("row {row_no}, column {} ('{}'): not a number: '{cell}'", j + 1, table.header[j])))?;
            if !v.is_finite() {
                return domain(format!("row {row_no}, column {} ('{}'): non-finite value", j + 1, table.header[j]));
            }
            row.push(v);
        }
        table.rows.push(row);
    }
    Ok(table)
}

pub fn write_table<W: Write>(writer: W, table: &Table) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Column names `prefix` (d = 1) or `prefix1..prefixd`.
pub fn axis_names(prefix: &str, d: usize) -> Vec<String> {
    if d == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=d).map(|j| format!("{prefix}{j}")).collect()
    }
}
