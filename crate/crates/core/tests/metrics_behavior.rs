//! Behavioral checks on the metrics layer: the spectral norm against a
//! power-iteration oracle, norm inequalities under random inputs, and the
//! aggregate statistics recomputed by hand from the per-trial records.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use zo_frames::{
    run_trials, spectral_norm, Error, Estimand, EstimatorKind, Objective, RandomSource,
};

fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    use rand_core::RngCore;
    let mut rng = RandomSource::new(seed).rng();
    let raw = DMatrix::from_fn(n, n, |_, _| {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * u - 1.0
    });
    (&raw + raw.transpose()) * 0.5
}

fn power_iteration_norm(m: &DMatrix<f64>, iterations: usize) -> f64 {
    let n = m.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 / (i as f64 + 1.0));
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let w = m * &v;
        lambda = w.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        v = w / lambda;
    }
    lambda
}

#[test]
fn spectral_norm_matches_power_iteration_on_random_symmetric_input() {
    for seed in [1u64, 2, 3] {
        let m = random_symmetric(50, seed);
        let direct = spectral_norm(&m).unwrap();
        let oracle = power_iteration_norm(&m, 500);
        assert!(
            (direct - oracle).abs() <= 1e-8 * direct.max(1.0),
            "seed {seed}: {direct} vs {oracle}"
        );
    }
}

#[test]
fn spectral_norm_rejects_asymmetric_and_rectangular_input() {
    let mut m = DMatrix::zeros(3, 3);
    m[(0, 1)] = 1.0;
    let err = spectral_norm(&m).unwrap_err();
    assert!(matches!(err, Error::NotSymmetric { .. }), "{err}");

    let rect = DMatrix::zeros(2, 3);
    let err = spectral_norm(&rect).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectral_norm_is_dominated_by_frobenius(n in 1usize..=12, seed in 0u64..100_000) {
        let m = random_symmetric(n, seed);
        let spectral = spectral_norm(&m).unwrap();
        prop_assert!(spectral <= m.norm() + 1e-12);
        // Absolute homogeneity under scaling.
        let scaled = spectral_norm(&(&m * 2.0)).unwrap();
        prop_assert!((scaled - 2.0 * spectral).abs() <= 1e-10 * spectral.max(1.0));
    }
}

#[test]
fn aggregate_statistics_recompute_from_the_trial_records() {
    let n = 9;
    let f = Objective::exp_sines(n).unwrap();
    let x = DVector::from_element(n, 0.25);
    let stats = run_trials(
        &f,
        &x,
        EstimatorKind::GradStiefel { k: 4 },
        0.05,
        24,
        1_234,
    )
    .unwrap();

    let errors: Vec<f64> = stats
        .per_trial
        .iter()
        .map(|r| r.error_l2.unwrap())
        .collect();
    assert_eq!(errors.len(), 24);
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
        / (errors.len() as f64 - 1.0);
    let min = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let reported = stats.l2_error.unwrap();
    assert!((reported.mean - mean).abs() <= 1e-12 * mean.max(1.0));
    assert!((reported.std - var.sqrt()).abs() <= 1e-12 * var.sqrt().max(1.0));
    assert_eq!(reported.min, min);
    assert_eq!(reported.max, max);
    assert!(min <= mean && mean <= max);

    assert!(stats.error_decomposition_gap().unwrap() >= -1e-12);

    let expected_evals: u64 = stats.per_trial.iter().map(|r| r.n_evals).sum();
    assert_eq!(stats.total_evals, expected_evals);
}

#[test]
fn trial_runs_replay_bitwise_from_the_same_base_seed() {
    let n = 6;
    let f = Objective::exp_sines(n).unwrap();
    let g = Objective::exp_sines(n).unwrap();
    let x = DVector::from_element(n, 0.5);

    let a = run_trials(&f, &x, EstimatorKind::HessSpherical { k: 3 }, 0.02, 12, 77).unwrap();
    let b = run_trials(&g, &x, EstimatorKind::HessSpherical { k: 3 }, 0.02, 12, 77).unwrap();

    assert_eq!(a.per_trial.len(), b.per_trial.len());
    for (ra, rb) in a.per_trial.iter().zip(&b.per_trial) {
        assert_eq!(ra.stream, rb.stream);
        assert_eq!(ra.error_frobenius, rb.error_frobenius);
        assert_eq!(ra.error_spectral, rb.error_spectral);
    }
    match (&a.mean_estimate, &b.mean_estimate) {
        (Estimand::Matrix(ma), Estimand::Matrix(mb)) => assert_eq!(ma, mb),
        _ => panic!("hessian runs must aggregate matrices"),
    }
    assert_eq!(a.empirical_bias, b.empirical_bias);
    assert_eq!(a.empirical_variance, b.empirical_variance);
}

#[test]
fn hessian_trials_record_spectral_below_frobenius() {
    let n = 5;
    let f = Objective::exp_sines(n).unwrap();
    let x = DVector::from_element(n, 0.1);
    let stats = run_trials(&f, &x, EstimatorKind::HessStiefel { k: n }, 0.05, 8, 3).unwrap();
    for record in &stats.per_trial {
        let fro = record.error_frobenius.unwrap();
        let spec = record.error_spectral.unwrap();
        assert!(spec <= fro + 1e-12, "spectral {spec} above frobenius {fro}");
        assert!(record.error_l2.is_none());
        assert!(record.cosine.is_none());
    }
}
