mod common;

use common::*;
use firming::scenarios::{fit_copula, sample_scenarios, CopulaModel, ErrorMarginal};
use firming::sim::fit_dataset_copula;
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn dataset_copula_is_reproduced_by_sampling() {
    let (cfg, days) = synthetic_days(151);
    let model = fit_dataset_copula(&days, cfg.system.pv_capacity).unwrap();
    let (worst, min_p) = copula_calibration(&model, 10_000, 3);
    println!("max correlation gap {worst:.4}, smallest rank p-value {min_p:.4}");
    assert!(worst <= 0.05);
    assert!(min_p > 0.01);
}

#[test]
fn sampling_is_seed_deterministic() {
    let (cfg, days) = synthetic_days(40);
    let model = fit_dataset_copula(&days, cfg.system.pv_capacity).unwrap();
    let a = sample_scenarios(&model, &days[3].forecast, 50, 9, cfg.system.pv_capacity).unwrap();
    let b = sample_scenarios(&model, &days[3].forecast, 50, 9, cfg.system.pv_capacity).unwrap();
    assert_eq!(a, b);
    let c = sample_scenarios(&model, &days[3].forecast, 50, 10, cfg.system.pv_capacity).unwrap();
    assert_ne!(a, c);
    assert!(a.values.iter().flatten().all(|v| (0.0..=cfg.system.pv_capacity).contains(v)));
    assert!((a.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
}

#[test]
fn gaussian_marginals_keep_their_spread() {
    let sigma = 5.0;
    let periods = 8;
    let mut r = rng(17);
    let history: Vec<Vec<f64>> = (0..4000)
        .map(|_| (0..periods).map(|_| { let z: f64 = StandardNormal.sample(&mut r); sigma * z }).collect::<Vec<f64>>())
        .collect();
    let fitted = fit_copula(&history, 100.0).unwrap();
    // independent lead times
    let model = CopulaModel {
        marginals: fitted.marginals.clone(),
        correlation: DMatrix::identity(periods, periods),
        cholesky: DMatrix::identity(periods, periods),
    };
    let forecast = vec![50.0; periods];
    let set = sample_scenarios(&model, &forecast, 10_000, 1, 100.0).unwrap();
    for k in 0..periods {
        let dev: Vec<f64> = set.values.iter().map(|v| v[k] - forecast[k]).collect();
        let mean = dev.iter().sum::<f64>() / dev.len() as f64;
        let sd = (dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (dev.len() - 1) as f64).sqrt();
        assert!((sd - sigma).abs() <= 0.05 * sigma, "lead time {k}: {sd}");
    }
}

#[test]
fn point_mass_marginals_return_the_clipped_forecast() {
    let periods = 4;
    let model = CopulaModel {
        marginals: (0..periods)
            .map(|k| ErrorMarginal { lead_time: k, sorted: vec![0.0; 30], degenerate: true })
            .collect(),
        correlation: DMatrix::identity(periods, periods),
        cholesky: DMatrix::identity(periods, periods),
    };
    let forecast = [0.0, 12.0, 120.0, 60.0];
    let set = sample_scenarios(&model, &forecast, 5, 2, 100.0).unwrap();
    for v in &set.values {
        assert_eq!(v, &vec![0.0, 12.0, 100.0, 60.0]);
    }
}
