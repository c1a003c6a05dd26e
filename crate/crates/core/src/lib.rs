//! Load-balanced call admission control for networks of SIP servers.
//!
//! A central controller collects per-server statistics once per slot,
//! solves a multi-commodity flow LP that decides how many calls each
//! server may admit and how they are relayed, and optionally resizes the
//! servers ahead of predicted load.

#![allow(clippy::needless_range_loop)]

pub mod admission;
pub mod autoscale;
pub mod calibration;
pub mod lp;
pub mod network;
pub mod oracle;
pub mod predictor;
pub mod protocol;
pub mod scalar;
pub mod sim;

pub use num_rational::BigRational;

/// Double-precision linear program.
pub type Lp = lp::LinearProgram<f64>;
/// Single-precision linear program.
pub type LpF32 = lp::LinearProgram<f32>;
/// Linear program solved in exact rational arithmetic.
pub type ExactLp = lp::LinearProgram<BigRational>;
/// NLMS filter on `f64` observations.
pub type NlmsPredictor = predictor::Nlms<f64>;
/// Measurement sample with `f64` fields.
pub type Sample = calibration::MeasurementSample<f64>;
/// Measurement sample with exact rational fields.
pub type ExactSample = calibration::MeasurementSample<BigRational>;
