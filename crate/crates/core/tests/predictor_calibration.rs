mod common;

use common::{ar1, nlms_errors as errors};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use vlbcac::calibration::{fit_alpha, fit_beta, generate_samples, MeasurementSample};
use vlbcac::predictor::{Nlms, PredictorError};
use vlbcac::ExactSample;

#[test]
fn constant_signal_error_shrinks_by_one_minus_step() {
    for order in [1, 3, 30] {
        let e = errors(Nlms::new(order, 0.8).unwrap(), &[50.0; 80]);
        // Once the window is full each update removes 80% of the error.
        for k in order..e.len() - 1 {
            let expected = e[order] * 0.2f64.powi((k - order) as i32);
            assert!(
                (e[k] - expected).abs() <= 1e-9,
                "order {order}, step {k}: {} vs {expected}",
                e[k]
            );
        }
    }
    // Order 1 follows the closed form from the first update on.
    let e = errors(Nlms::new(1, 0.8).unwrap(), &[50.0; 20]);
    for (k, v) in e.iter().enumerate().skip(1) {
        assert!((v - 50.0 * 0.2f64.powi(k as i32 - 1)).abs() <= 1e-9);
    }
}

#[test]
fn nlms_beats_last_value_on_ar1() {
    let x = ar1(1000, 100.0, -0.5, 10.0, 11);
    let e = errors(Nlms::new(30, 0.8).unwrap(), &x);
    let tail = x.len() - 100;
    let nlms: f64 = e[tail..].iter().map(|v| v * v).sum::<f64>() / 100.0;
    let naive: f64 = (tail..x.len())
        .map(|t| (x[t] - x[t - 1]).powi(2))
        .sum::<f64>()
        / 100.0;
    assert!(nlms < naive, "NLMS {nlms} vs last value {naive}");
}

#[test]
fn step_outside_open_interval_is_rejected() {
    for mu in [0.0, -0.1, 2.0, 2.5, f64::NAN] {
        assert!(matches!(
            Nlms::<f64>::new(4, mu),
            Err(PredictorError::Step(_))
        ));
    }
    assert!(Nlms::<f64>::new(4, 1.999).is_ok());
}

fn exact(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Noiseless integer samples for integer coefficients (in thousandths).
fn exact_samples(a: (i64, i64), b: (i64, i64), points: &[(i64, i64)]) -> Vec<ExactSample> {
    let k = BigRational::new(BigInt::from(1), BigInt::from(1000));
    points
        .iter()
        .map(|&(c, r)| MeasurementSample {
            local: exact(c),
            relayed: exact(r),
            cpu: (exact(a.0 * c) + exact(a.1 * r)) * &k,
            mem: (exact(b.0 * c) + exact(b.1 * r)) * &k,
        })
        .collect()
}

#[test]
fn paper_coefficients_are_recovered() {
    for (alpha, beta) in [
        ((0.07841, 0.02158), (0.06998, 0.01997)),
        ((0.08012, 0.02329), (0.07169, 0.02168)),
    ] {
        let s = generate_samples(alpha, beta, 40, 0.0, 3);
        let a = fit_alpha(&s).unwrap();
        let b = fit_beta(&s).unwrap();
        assert!((a.local - alpha.0).abs() <= 1e-6 && (a.relayed - alpha.1).abs() <= 1e-6);
        assert!((b.local - beta.0).abs() <= 1e-6 && (b.relayed - beta.1).abs() <= 1e-6);
    }
}

proptest! {
    #[test]
    fn noiseless_data_is_recovered(a1 in 1.0f64..200.0, a2 in 0.0f64..100.0, b1 in 1.0f64..200.0, b2 in 0.0f64..100.0, seed in any::<u64>(), trials in 3usize..40) {
        let (alpha, beta) = ((a1 / 1000.0, a2 / 1000.0), (b1 / 1000.0, b2 / 1000.0));
        let s = generate_samples(alpha, beta, trials, 0.0, seed);
        let a = fit_alpha(&s).unwrap();
        let b = fit_beta(&s).unwrap();
        prop_assert!((a.local - alpha.0).abs() <= 1e-6 && (a.relayed - alpha.1).abs() <= 1e-6, "{a:?} vs {alpha:?}");
        prop_assert!((b.local - beta.0).abs() <= 1e-6 && (b.relayed - beta.1).abs() <= 1e-6, "{b:?} vs {beta:?}");
    }

    #[test]
    fn exact_fit_is_scale_equivariant(
        a in (1i64..200, 0i64..100),
        b in (1i64..200, 0i64..100),
        extra in proptest::collection::vec((0i64..200, 0i64..200), 0..6),
        scale in 1i64..50,
    ) {
        let mut points = vec![(200, 200), (100, 0), (50, 200)];
        points.extend(extra);
        let s = exact_samples(a, b, &points);
        let base = fit_alpha(&s).unwrap();
        let k = exact(scale);
        let scaled: Vec<ExactSample> = s
            .iter()
            .map(|x| MeasurementSample { cpu: &x.cpu * &k, ..x.clone() })
            .collect();
        let fit = fit_alpha(&scaled).unwrap();
        prop_assert_eq!(&fit.local, &(&base.local * &k));
        prop_assert_eq!(&fit.relayed, &(&base.relayed * &k));
        prop_assert_eq!(&fit.residual, &(&base.residual * &k));
        // Exact data is recovered exactly.
        let thousandth = BigRational::new(BigInt::from(1), BigInt::from(1000));
        prop_assert_eq!(base.local, exact(a.0) * &thousandth);
        prop_assert_eq!(base.relayed, exact(a.1) * &thousandth);
        let mem = fit_beta(&s).unwrap();
        prop_assert_eq!(mem.local, exact(b.0) * &thousandth);
    }
}
