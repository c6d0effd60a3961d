mod common;

use common::*;
use firming::pvusa::{fit_pvusa, PvusaParams, WindowOutcome};

#[test]
fn noiseless_fit_is_exact() {
    let err = pvusa_relative_error(&PvusaParams::LIEGE, 0.0, 1);
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn estimates_converge_as_noise_vanishes() {
    let errs: Vec<f64> = [0.01, 0.001, 0.0].iter().map(|&s| pvusa_relative_error(&PvusaParams::LIEGE, s, 5)).collect();
    assert!(errs[0] <= 0.05, "{errs:?}");
    assert!(errs[1] <= errs[0] && errs[2] <= errs[1], "{errs:?}");
}

#[test]
fn other_parameters_are_recovered_too() {
    let p = PvusaParams { a: 0.9, b: -2e-4, c: -4e-3 };
    assert!(pvusa_relative_error(&p, 0.0, 2) <= 1e-6);
    assert!(pvusa_relative_error(&p, 0.01, 2) <= 0.05);
}

#[test]
fn night_windows_carry_the_previous_estimate() {
    let (power, wx) = pvusa_series(&PvusaParams::LIEGE, 0.0, 4);
    let fit = fit_pvusa(&power, &wx, 2.0, 1.0).unwrap();
    assert!(fit.windows.iter().any(|w| w.outcome == WindowOutcome::Skipped));
    let mut seen = None;
    for w in &fit.windows {
        if w.outcome == WindowOutcome::Fitted {
            seen = w.params;
        } else {
            assert_eq!(w.params, seen);
        }
    }
    assert!(fit.fitted_windows() > 0);
}
