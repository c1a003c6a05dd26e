//! Fitting the per-call cost coefficients from load measurements.
//!
//! Each fit is a small LP: minimize the total under-estimation of measured
//! usage, with the two coefficients constrained to sum to the ratio of the
//! largest measured usage to the largest local call count.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, LpOutcome, Relation, Sense};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("no samples")]
    Empty,
    #[error("every sample has zero local calls; the normalization is undefined")]
    DegenerateData,
    #[error("sample {0} has a negative or non-finite field")]
    BadSample(usize),
    #[error("fit LP did not reach an optimum: {0}")]
    Solver(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl From<LpError> for CalibrationError {
    fn from(e: LpError) -> Self {
        Self::Solver(e.to_string())
    }
}

/// One measurement trial: local calls, relayed flow units, CPU and memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSample<S> {
    pub local: S,
    pub relayed: S,
    pub cpu: S,
    pub mem: S,
}

/// Result of one fit: the two coefficients and the residual objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit<S> {
    pub local: S,
    pub relayed: S,
    pub residual: S,
}

fn check<S: Scalar>(samples: &[MeasurementSample<S>]) -> Result<(), CalibrationError> {
    if samples.is_empty() {
        return Err(CalibrationError::Empty);
    }
    for (q, s) in samples.iter().enumerate() {
        let fields = [&s.local, &s.relayed, &s.cpu, &s.mem];
        if fields
            .iter()
            .any(|v| !v.is_finite_value() || **v < S::zero())
        {
            return Err(CalibrationError::BadSample(q + 1));
        }
    }
    if samples.iter().all(|s| s.local.is_zero()) {
        return Err(CalibrationError::DegenerateData);
    }
    Ok(())
}

fn max_of<S: Scalar>(values: impl Iterator<Item = S>) -> S {
    values.fold(S::zero(), |m, v| if v > m { v } else { m })
}

fn fit<S: Scalar>(
    samples: &[MeasurementSample<S>],
    measured: impl Fn(&MeasurementSample<S>) -> S,
) -> Result<Fit<S>, CalibrationError> {
    check(samples)?;
    let scale =
        max_of(samples.iter().map(&measured)) / max_of(samples.iter().map(|s| s.local.clone()));
    let mut lp = LinearProgram::new(Sense::Minimize);
    let a1 = lp.add_nonneg("a1", S::zero())?;
    let a2 = lp.add_nonneg("a2", S::zero())?;
    for (q, s) in samples.iter().enumerate() {
        let x = lp.add_nonneg(format!("x{}", q + 1), S::one())?;
        // measured - a1 * local - a2 * relayed <= x
        lp.add_constraint(
            vec![
                (a1, -s.local.clone()),
                (a2, -s.relayed.clone()),
                (x, -S::one()),
            ],
            Relation::Le,
            -measured(s),
        )?;
    }
    lp.add_constraint(vec![(a1, S::one()), (a2, S::one())], Relation::Eq, scale)?;
    match lp.solve()? {
        LpOutcome::Optimal(sol) => Ok(Fit {
            local: sol.values[a1.0].clone(),
            relayed: sol.values[a2.0].clone(),
            residual: sol.objective,
        }),
        LpOutcome::Infeasible => Err(CalibrationError::Solver("infeasible".into())),
        LpOutcome::Unbounded => Err(CalibrationError::Solver("unbounded".into())),
    }
}

/// CPU coefficients `(alpha1, alpha2)`.
pub fn fit_alpha<S: Scalar>(samples: &[MeasurementSample<S>]) -> Result<Fit<S>, CalibrationError> {
    fit(samples, |s| s.cpu.clone())
}

/// Memory coefficients `(beta1, beta2)`.
pub fn fit_beta<S: Scalar>(samples: &[MeasurementSample<S>]) -> Result<Fit<S>, CalibrationError> {
    fit(samples, |s| s.mem.clone())
}

/// Largest local call count and relayed flow used by the generator.
pub const SAMPLE_MAX_CALLS: u32 = 200;

/// Synthetic measurements `usage = c1 * local + c2 * relayed + noise` with
/// noise uniform in `[-noise, noise]` and results clamped at zero.
///
/// The first sample has `local = relayed = SAMPLE_MAX_CALLS` and no noise,
/// so it carries both maxima and the normalization matches the true
/// coefficients. Two further noiseless samples put all load on one side,
/// which pins the split between the coefficients.
pub fn generate_samples(
    alpha: (f64, f64),
    beta: (f64, f64),
    trials: usize,
    noise: f64,
    seed: u64,
) -> Vec<MeasurementSample<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = SAMPLE_MAX_CALLS as f64;
    let exact = |local: f64, relayed: f64| MeasurementSample {
        local,
        relayed,
        cpu: alpha.0 * local + alpha.1 * relayed,
        mem: beta.0 * local + beta.1 * relayed,
    };
    let mut out = vec![
        exact(top, top),
        exact(top / 2.0, 0.0),
        exact(top / 4.0, top),
    ];
    out.truncate(trials);
    let jitter = |rng: &mut ChaCha8Rng| {
        if noise > 0.0 {
            rng.random_range(-noise..=noise)
        } else {
            0.0
        }
    };
    while out.len() < trials {
        let local = rng.random_range(0..=SAMPLE_MAX_CALLS) as f64;
        let relayed = rng.random_range(0..=SAMPLE_MAX_CALLS) as f64;
        let mut s = exact(local, relayed);
        s.cpu = (s.cpu + jitter(&mut rng)).max(0.0);
        s.mem = (s.mem + jitter(&mut rng)).max(0.0);
        out.push(s);
    }
    out
}

/// Parse CSV with header `c_local,r_out,cpu,mem`.
pub fn parse_samples_csv(text: &str) -> Result<Vec<MeasurementSample<f64>>, CalibrationError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == "c_local,r_out,cpu,mem" => {}
        _ => {
            return Err(CalibrationError::Parse {
                line: 1,
                message: "expected header `c_local,r_out,cpu,mem`".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (no, line) in lines {
        let v = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| CalibrationError::Parse {
                        line: no + 1,
                        message: format!("expected a number, found `{}`", c.trim()),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if v.len() != 4 {
            return Err(CalibrationError::Parse {
                line: no + 1,
                message: format!("expected 4 fields, found {}", v.len()),
            });
        }
        out.push(MeasurementSample {
            local: v[0],
            relayed: v[1],
            cpu: v[2],
            mem: v[3],
        });
    }
    Ok(out)
}

pub fn samples_to_csv(samples: &[MeasurementSample<f64>]) -> String {
    let mut out = String::from("c_local,r_out,cpu,mem\n");
    for s in samples {
        let _ = writeln!(out, "{},{},{},{}", s.local, s.relayed, s.cpu, s.mem);
    }
    out
}
