//! Uniform grid signals and their CSV form.
//!
//! A signal is a vector of samples on an evenly spaced grid; it is the
//! discrete carrier for target data g, iterates u, and derivative signals.
//! CSV round-trips losslessly: floats are written with 17 significant digits.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSignal {
    /// Coordinate of the first node.
    pub t0: f64,
    /// Grid spacing; the i-th node sits at t0 + i*h.
    pub h: f64,
    pub values: Vec<f64>,
}

impl GridSignal {
    pub fn new(t0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() || !t0.is_finite() {
            return Err(Error::validation("grid needs finite t0 and spacing h > 0"));
        }
        if values.len() < 2 {
            return Err(Error::validation("grid needs at least two nodes"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("grid values must be finite"));
        }
        Ok(GridSignal { t0, h, values })
    }

    /// Sample f at n evenly spaced nodes spanning [t0, t1].
    pub fn from_fn(t0: f64, t1: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(t1 > t0) {
            return Err(Error::validation("grid needs t1 > t0"));
        }
        if n < 2 {
            return Err(Error::validation("grid needs at least two nodes"));
        }
        let h = (t1 - t0) / (n - 1) as f64;
        let values = (0..n).map(|i| f(t0 + i as f64 * h)).collect();
        Self::new(t0, h, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn domain_length(&self) -> f64 {
        self.h * (self.len() - 1) as f64
    }

    /// Forward-difference derivative signal on the cell midpoints
    /// (one node fewer, shifted by h/2).
    pub fn derivative_signal(&self) -> Result<GridSignal> {
        if self.len() < 3 {
            return Err(Error::validation("derivative signal needs at least three nodes"));
        }
        let values = self.values.windows(2).map(|w| (w[1] - w[0]) / self.h).collect();
        GridSignal::new(self.t0 + 0.5 * self.h, self.h, values)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.len() * 48 + 16);
        out.push_str("t,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e}", self.t(i), v);
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some(header) if header.eq_ignore_ascii_case("t,value") => {}
            other => {
                return Err(Error::Csv(format!(
                    "expected header 't,value', found {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let mut cols = line.split(',');
            let (t, v) = match (cols.next(), cols.next(), cols.next()) {
                (Some(t), Some(v), None) => (t.trim(), v.trim()),
                _ => return Err(Error::Csv(format!("row {}: expected two columns", row + 2))),
            };
            let parse = |s: &str, what: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Csv(format!("row {}: bad {what} {s:?}", row + 2)))
            };
            ts.push(parse(t, "t")?);
            values.push(parse(v, "value")?);
        }
        if ts.len() < 2 {
            return Err(Error::Csv("need at least two data rows".into()));
        }
        let n = ts.len();
        let t0 = ts[0];
        let h = (ts[n - 1] - t0) / (n - 1) as f64;
        if !(h > 0.0) {
            return Err(Error::Csv("t column must be strictly increasing".into()));
        }
        for (i, &t) in ts.iter().enumerate() {
            let expect = t0 + i as f64 * h;
            if (t - expect).abs() > 1e-9 * expect.abs().max(1.0) {
                return Err(Error::Csv(format!("row {}: grid is not uniform", i + 2)));
            }
        }
        Self::new(t0, h, values)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}
