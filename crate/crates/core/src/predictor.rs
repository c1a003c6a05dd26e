//! One-step-ahead NLMS workload predictor, one filter per origin/destination
//! pair.

use std::collections::VecDeque;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::Matrix;

pub const DEFAULT_ORDER: usize = 30;
pub const DEFAULT_STEP: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictorError {
    #[error("step size {0} outside (0, 2)")]
    Step(f64),
    #[error("filter order must be at least 1")]
    Order,
    #[error("observation {0} is negative or non-finite")]
    Observation(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("trace line {line}: {reason}")]
    Trace { line: usize, reason: String },
}

/// Normalized LMS filter over the last `order` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nlms<T> {
    order: usize,
    step: T,
    coeffs: Vec<T>,
    /// Most recent observation first.
    window: VecDeque<T>,
    last_error: T,
}

impl<T: Float> Nlms<T> {
    pub fn new(order: usize, step: T) -> Result<Self, PredictorError> {
        if order == 0 {
            return Err(PredictorError::Order);
        }
        let two = T::one() + T::one();
        if !(step > T::zero() && step < two) {
            return Err(PredictorError::Step(step.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self {
            order,
            step,
            coeffs: vec![T::zero(); order],
            window: VecDeque::with_capacity(order),
            last_error: T::zero(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    pub fn window(&self) -> impl Iterator<Item = &T> {
        self.window.iter()
    }

    /// Error of the most recent update.
    pub fn last_error(&self) -> T {
        self.last_error
    }

    fn raw_forecast(&self) -> T {
        self.coeffs
            .iter()
            .zip(&self.window)
            .fold(T::zero(), |acc, (&h, &x)| acc + h * x)
    }

    /// Forecast of the next observation, clamped at zero. Missing window
    /// entries during warm-up count as zero.
    pub fn predict_next(&self) -> T {
        self.raw_forecast().max(T::zero())
    }

    /// Adapt the coefficients to `observed` and push it into the window.
    /// With an all-zero window the coefficients are left unchanged.
    pub fn update(&mut self, observed: T) -> Result<(), PredictorError> {
        if !(observed.is_finite() && observed >= T::zero()) {
            return Err(PredictorError::Observation(
                observed.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let error = observed - self.raw_forecast();
        let energy = self.window.iter().fold(T::zero(), |acc, &x| acc + x * x);
        if energy > T::zero() {
            let gain = self.step * error / energy;
            for (h, &x) in self.coeffs.iter_mut().zip(&self.window) {
                *h = *h + gain * x;
            }
        }
        self.last_error = error;
        if self.window.len() == self.order {
            self.window.pop_back();
        }
        self.window.push_front(observed);
        Ok(())
    }
}

/// One filter per (i, j) pair of an n x n load matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorBank {
    n: usize,
    filters: Vec<Nlms<f64>>,
}

impl PredictorBank {
    pub fn new(n: usize, order: usize, step: f64) -> Result<Self, PredictorError> {
        let filter = Nlms::new(order, step)?;
        Ok(Self {
            n,
            filters: vec![filter; n * n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn filter(&self, i: usize, j: usize) -> &Nlms<f64> {
        &self.filters[i * self.n + j]
    }

    /// Feed the latest observed load to every filter, then return the
    /// forecast for the next slot.
    pub fn forecast_matrix(&mut self, observed: &Matrix) -> Result<Matrix, PredictorError> {
        if observed.n() != self.n {
            return Err(PredictorError::Dimension {
                expected: self.n,
                got: observed.n(),
            });
        }
        let mut out = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let f = &mut self.filters[i * self.n + j];
                f.update(observed.get(i, j))?;
                out.set(i, j, f.predict_next());
            }
        }
        Ok(out)
    }

    /// Forecast without feeding a new observation.
    pub fn peek(&self) -> Matrix {
        let mut out = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(i, j, self.filters[i * self.n + j].predict_next());
            }
        }
        out
    }
}

pub const TRACE_HEADER: &str = "slot,i,j,offered";

/// Parse a replay trace with header `slot,i,j,offered` (1-based servers)
/// into one load matrix per slot. Slots missing from the file are zero.
pub fn parse_trace_csv(text: &str, n: usize) -> Result<Vec<Matrix>, PredictorError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        Some((no, h)) => {
            return Err(PredictorError::Trace {
                line: no + 1,
                reason: format!("expected header `{TRACE_HEADER}`, found `{}`", h.trim()),
            })
        }
    }
    let mut out: Vec<Matrix> = Vec::new();
    for (no, line) in lines {
        let err = |reason: String| PredictorError::Trace {
            line: no + 1,
            reason,
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|e| err(format!("`{s}`: {e}")));
        let (slot, i, j) = (idx(f[0])?, idx(f[1])?, idx(f[2])?);
        let v: f64 = f[3].parse().map_err(|e| err(format!("`{}`: {e}", f[3])))?;
        if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
            return Err(err(format!("server id outside 1..={n}")));
        }
        if !(v.is_finite() && v >= 0.0) {
            return Err(err(format!("offered {v} is negative or non-finite")));
        }
        while out.len() <= slot {
            out.push(Matrix::zeros(n));
        }
        out[slot].set(i - 1, j - 1, v);
    }
    Ok(out)
}

/// Write matrices as a replay trace, skipping zero entries.
pub fn trace_to_csv(slots: &[Matrix]) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for (t, m) in slots.iter().enumerate() {
        for i in 0..m.n() {
            for j in 0..m.n() {
                let v = m.get(i, j);
                if v != 0.0 {
                    out.push_str(&format!("{t},{},{},{v}\n", i + 1, j + 1));
                }
            }
        }
    }
    out
}

/// One-step forecasts over a trace: entry `t` is the forecast for slot
/// `t + 1` after observing slot `t`.
pub fn replay(bank: &mut PredictorBank, slots: &[Matrix]) -> Result<Vec<Matrix>, PredictorError> {
    slots.iter().map(|m| bank.forecast_matrix(m)).collect()
}
