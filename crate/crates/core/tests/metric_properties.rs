use driftlab_core::drift_metrics::{
    drift_duration, drift_magnitude, drift_path_length, hellinger_distance, total_variation_distance, DistanceMetric, MetricsConfig,
};
use driftlab_core::ensemble::ResidualSeries;
use driftlab_core::Timestamp;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const TOL: f64 = 1e-9;

fn oracle_hellinger(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    (s / 2.0).sqrt()
}

fn oracle_tv(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}

fn normalise(w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Probability vectors of a shared length, with some exact zeros.
fn histogram_triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..24).prop_flat_map(|n| {
        let weight = prop_oneof![1 => Just(0.0), 4 => 0.0f64..1.0];
        let vec = prop::collection::vec(weight, n).prop_filter("non-zero mass", |v| v.iter().sum::<f64>() > 1e-6).prop_map(normalise);
        (vec.clone(), vec.clone(), vec)
    })
}

#[test]
fn hand_values() {
    let (p, q) = ([0.5, 0.5], [0.9, 0.1]);
    assert!((hellinger_distance(&p, &q).unwrap() - 0.3250).abs() < 1e-4);
    assert!((total_variation_distance(&p, &q).unwrap() - 0.4).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn distance_axioms((p, q, r) in histogram_triple()) {
        let h = |a: &[f64], b: &[f64]| hellinger_distance(a, b).unwrap();
        let tv = |a: &[f64], b: &[f64]| total_variation_distance(a, b).unwrap();

        prop_assert!((h(&p, &q) - oracle_hellinger(&p, &q)).abs() <= TOL);
        prop_assert!((tv(&p, &q) - oracle_tv(&p, &q)).abs() <= TOL);

        prop_assert!((h(&p, &q) - h(&q, &p)).abs() <= TOL);
        prop_assert!((tv(&p, &q) - tv(&q, &p)).abs() <= TOL);

        for d in [h(&p, &q), tv(&p, &q)] {
            prop_assert!((-TOL..=1.0 + TOL).contains(&d));
        }
        prop_assert!(h(&p, &p).abs() <= TOL);
        prop_assert!(tv(&p, &p).abs() <= TOL);
        if p.iter().zip(&q).any(|(a, b)| (a - b).abs() > 1e-6) {
            prop_assert!(h(&p, &q) > 0.0 && tv(&p, &q) > 0.0);
        }

        prop_assert!(h(&p, &r) <= h(&p, &q) + h(&q, &r) + TOL);
        prop_assert!(tv(&p, &r) <= tv(&p, &q) + tv(&q, &r) + TOL);

        let (hh, t) = (h(&p, &q), tv(&p, &q));
        prop_assert!(hh * hh <= t + TOL);
        prop_assert!(t <= std::f64::consts::SQRT_2 * hh + TOL);
    }
}

#[test]
fn mismatched_lengths_are_rejected() {
    assert!(hellinger_distance(&[1.0], &[0.5, 0.5]).is_err());
    assert!(total_variation_distance(&[1.0], &[0.5, 0.5]).is_err());
}

#[test]
fn duration_of_two_days() {
    let t = Timestamp::parse_rfc3339("2016-03-01T00:00:00Z").unwrap();
    assert_eq!(drift_duration(t, t + 172_800).unwrap(), 172_800);
    assert!(drift_duration(t, t).is_err());
}

fn noisy_series(seed: u64, n: usize, shift_at: usize, shift: f64) -> ResidualSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let values: Vec<f64> = (0..n).map(|i| normal.sample(&mut rng) + if i >= shift_at { shift } else { 0.0 }).collect();
    ResidualSeries::from_residuals(Timestamp::from_unix(0), 600, &values)
}

#[test]
fn single_step_path_equals_magnitude() {
    let series = noisy_series(1, 3000, 1500, 2.0);
    let cfg = MetricsConfig::default();
    let (t, u) = (Timestamp::from_unix(1400 * 600), Timestamp::from_unix(1600 * 600));
    for metric in [DistanceMetric::Hellinger, DistanceMetric::TotalVariation] {
        let m = drift_magnitude(&series, t, u, 300 * 600, metric, &cfg).unwrap();
        let p = drift_path_length(&series, t, u, 1, 300 * 600, metric, &cfg).unwrap();
        assert_eq!(m, p);
    }
}

#[test]
fn path_length_dominates_magnitude_on_random_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cfg = MetricsConfig { bins: 12, min_samples: 20 };
    let mut checked = 0;
    let mut seed = 0;
    while checked < 1000 {
        seed += 1;
        let shift = rng.random_range(-3.0..3.0);
        let series = noisy_series(seed, 2000, rng.random_range(600..1400), shift);
        let t_idx = rng.random_range(300..1200usize);
        let u_idx = t_idx + rng.random_range(1..500usize);
        let window = rng.random_range(60..250i64) * 600;
        let steps = rng.random_range(1..8usize);
        let metric = if rng.random_bool(0.5) { DistanceMetric::Hellinger } else { DistanceMetric::TotalVariation };
        let (t, u) = (Timestamp::from_unix(t_idx as i64 * 600), Timestamp::from_unix(u_idx as i64 * 600));
        let (Ok(m), Ok(p)) = (
            drift_magnitude(&series, t, u, window, metric, &cfg),
            drift_path_length(&series, t, u, steps, window, metric, &cfg),
        ) else {
            continue;
        };
        assert!(p >= m - 1e-12, "path {p} < magnitude {m} (seed {seed})");
        checked += 1;
    }
}
