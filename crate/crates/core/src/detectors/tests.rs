use super::*;
use alloc::vec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ensemble::ResidualEntry;

fn gaussian(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn stepped(seed: u64, n: usize, at: usize, shift: f64) -> Vec<f64> {
    let mut xs = gaussian(seed, n);
    for x in &mut xs[at..] {
        *x += shift;
    }
    xs
}

fn drift_indices(config: &DetectorConfig, xs: &[f64]) -> Vec<usize> {
    let mut d = Detector::new(config.clone()).unwrap();
    xs.iter().enumerate().filter(|(_, &x)| d.step(x).unwrap() == Status::Drift).map(|(i, _)| i).collect()
}

#[test]
fn kinds_have_stable_names() {
    assert_eq!(DetectorKind::ALL.len(), 10);
    for k in DetectorKind::ALL {
        assert_eq!(DetectorKind::from_name(k.name()).unwrap(), k);
        let json = serde_json::to_string(&k).unwrap();
        assert_eq!(json, alloc::format!("\"{}\"", k.name()));
    }
    assert!(matches!(DetectorKind::from_name("DDM"), Err(DetectorError::UnknownKind(_))));
}

#[test]
fn config_serde_roundtrip() {
    for k in DetectorKind::ALL {
        let cfg = DetectorConfig::default_for(k).with_transform(InputTransform::Abs);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: DetectorConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
    let cfg: DetectorConfig = serde_json::from_str(r#"{"kind":"CUSUM","params":{"threshold":5.0}}"#).unwrap();
    let DetectorParams::Cusum(p) = &cfg.params else { panic!("wrong kind") };
    assert_eq!(p.threshold, 5.0);
    assert_eq!(p.allowance, 0.5);
    assert_eq!(cfg.transform, InputTransform::Standardized);
    assert!(serde_json::from_str::<DetectorConfig>(r#"{"kind":"CUSUM","params":{"treshold":5.0}}"#).is_err());
}

#[test]
fn adwin_zero_delta_is_rejected() {
    let cfg = DetectorConfig { params: DetectorParams::Adwin(AdwinParams { delta: 0.0, ..Default::default() }), ..DetectorConfig::default_for(DetectorKind::Adwin) };
    match Detector::new(cfg) {
        Err(DetectorError::Config { kind: DetectorKind::Adwin, parameter: "delta", .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let bad = [
        DetectorParams::Cusum(CusumParams { threshold: -1.0, ..Default::default() }),
        DetectorParams::Gma(GmaParams { smoothing: 0.0, ..Default::default() }),
        DetectorParams::HddmA(HddmAParams { drift_confidence: 0.01, warning_confidence: 0.001, ..Default::default() }),
        DetectorParams::HddmW(HddmWParams { lambda: 1.5, ..Default::default() }),
        DetectorParams::PageHinkley(PageHinkleyParams { alpha: 0.0, ..Default::default() }),
        DetectorParams::Seed(SeedParams { block_size: 1, ..Default::default() }),
        DetectorParams::SeqDrift1(SeqDrift1Params { delta: 1.0, ..Default::default() }),
        DetectorParams::SeqDrift2(SeqDrift2Params { reservoir_size: 0, ..Default::default() }),
        DetectorParams::Stepd(StepdParams { alpha_drift: f64::NAN, ..Default::default() }),
    ];
    for params in bad {
        let cfg = DetectorConfig { params, transform: InputTransform::Raw, standardize_warmup: DEFAULT_WARMUP };
        assert!(matches!(Detector::new(cfg), Err(DetectorError::Config { .. })));
    }
    let cfg = DetectorConfig { standardize_warmup: 1, ..DetectorConfig::default_for(DetectorKind::Cusum) };
    assert!(Detector::new(cfg).is_err());
}

#[test]
fn non_finite_input_is_an_error() {
    let mut d = Detector::new(DetectorConfig::default_for(DetectorKind::Adwin)).unwrap();
    assert!(matches!(d.step(f64::NAN), Err(DetectorError::NonFinite(_))));
    assert!(d.step(f64::INFINITY).is_err());
    assert_eq!(d.samples_seen(), 0);
}

#[test]
fn constant_streams_never_drift() {
    for kind in DetectorKind::ALL {
        for value in [0.0, 5.0, -1234.5] {
            let cfg = DetectorConfig::default_for(kind);
            let mut d = Detector::new(cfg).unwrap();
            for _ in 0..100_000 {
                assert_ne!(d.step(value).unwrap(), Status::Drift, "{kind} on constant {value}");
            }
        }
        let mut raw = Detector::new(DetectorConfig::default_for(kind).with_transform(InputTransform::Raw)).unwrap();
        for _ in 0..100_000 {
            assert_eq!(raw.step(0.0).unwrap(), Status::Stable, "{kind} raw zero");
        }
    }
}

#[test]
fn identical_configs_evolve_identically() {
    let xs = stepped(3, 3000, 1500, 2.0);
    for kind in DetectorKind::ALL {
        let cfg = DetectorConfig::default_for(kind);
        let mut a = Detector::new(cfg.clone()).unwrap();
        let mut b = make_detector(cfg).unwrap();
        assert_eq!(a, b);
        for &x in &xs {
            assert_eq!(a.step_detailed(x).unwrap(), b.step_detailed(x).unwrap());
            assert_eq!(a, b);
        }
    }
}

#[test]
fn reset_restores_fresh_state() {
    let xs = gaussian(9, 700);
    for kind in DetectorKind::ALL {
        let cfg = DetectorConfig::default_for(kind);
        let fresh = Detector::new(cfg.clone()).unwrap();
        let mut d = fresh.clone();
        for &x in &xs {
            d.step(x).unwrap();
        }
        d.reset();
        assert_eq!(d, fresh, "{kind}");
    }
}

#[test]
fn drift_resets_the_detector() {
    let xs = stepped(1, 3000, 1000, 4.0);
    for kind in DetectorKind::ALL {
        let mut d = Detector::new(DetectorConfig::default_for(kind)).unwrap();
        let fresh = d.clone();
        let mut fired = false;
        for &x in &xs {
            if d.step(x).unwrap() == Status::Drift {
                assert_eq!(d, fresh, "{kind}");
                fired = true;
                break;
            }
        }
        assert!(fired, "{kind} missed a 4 sd step");
    }
}

#[test]
fn no_drift_before_minimum_sample_count() {
    for kind in DetectorKind::ALL {
        for transform in [InputTransform::Raw, InputTransform::Standardized] {
            let cfg = DetectorConfig::default_for(kind).with_transform(transform);
            let min = cfg.min_samples();
            let xs: Vec<f64> = (0..5000).map(|i| if i % 97 < 3 { 40.0 } else { (i % 7) as f64 * 3.0 - 9.0 }).collect();
            let mut d = Detector::new(cfg).unwrap();
            let mut since_reset = 0u64;
            for &x in &xs {
                since_reset += 1;
                if d.step(x).unwrap() == Status::Drift {
                    assert!(since_reset >= min, "{kind} {transform:?} fired after {since_reset} < {min}");
                    since_reset = 0;
                }
            }
        }
    }
}

#[test]
fn only_hddm_and_stepd_warn() {
    let xs = stepped(5, 4000, 2000, 0.6);
    for kind in DetectorKind::ALL {
        let mut d = Detector::new(DetectorConfig::default_for(kind)).unwrap();
        let warned = xs.iter().any(|&x| d.step(x).unwrap() == Status::Warning);
        let may_warn = matches!(kind, DetectorKind::HddmA | DetectorKind::HddmW | DetectorKind::Stepd);
        if !may_warn {
            assert!(!warned, "{kind} emitted a warning");
        }
    }
    let mut d = Detector::new(DetectorConfig::default_for(DetectorKind::Stepd)).unwrap();
    assert!(xs.iter().any(|&x| d.step(x).unwrap() == Status::Warning));
}

#[test]
fn cusum_hand_trace() {
    let cfg = DetectorConfig {
        params: DetectorParams::Cusum(CusumParams { threshold: 3.0, allowance: 0.5, two_sided: true, min_instances: 1 }),
        transform: InputTransform::Raw,
        standardize_warmup: DEFAULT_WARMUP,
    };
    let mut d = Detector::new(cfg).unwrap();
    let mut stat = |x: f64| {
        let o = d.step_detailed(x).unwrap();
        (o.status, o.statistic)
    };
    assert_eq!(stat(1.0), (Status::Stable, 0.5));
    assert_eq!(stat(1.5), (Status::Stable, 1.5));
    assert_eq!(stat(-3.0), (Status::Stable, 2.5));
    assert_eq!(stat(1.0), (Status::Stable, 1.0));
    assert_eq!(stat(2.0), (Status::Stable, 2.0));
    assert_eq!(stat(-0.5), (Status::Stable, 1.0));
    assert_eq!(stat(3.0), (Status::Drift, 3.5));
    assert_eq!(d.samples_seen(), 0);
}

#[test]
fn gma_hand_trace() {
    let cfg = DetectorConfig {
        params: DetectorParams::Gma(GmaParams { smoothing: 0.5, threshold: 0.8, min_instances: 1 }),
        transform: InputTransform::Raw,
        standardize_warmup: DEFAULT_WARMUP,
    };
    let mut d = Detector::new(cfg).unwrap();
    assert_eq!(d.step_detailed(1.0).unwrap().statistic, 0.5);
    assert_eq!(d.step_detailed(1.0).unwrap().statistic, 0.75);
    assert_eq!(d.step_detailed(1.0).unwrap(), StepOutcome { status: Status::Drift, statistic: 0.875 });
}

#[test]
fn standardized_transform_uses_previous_samples() {
    let mut t = TransformState::new(InputTransform::Standardized, 3);
    assert_eq!(t.apply(1.0), None);
    assert_eq!(t.apply(2.0), None);
    assert_eq!(t.apply(3.0), None);
    assert_eq!(t.apply(4.0), Some(2.0));
    let mut c = TransformState::new(InputTransform::Standardized, 2);
    c.apply(7.0);
    c.apply(7.0);
    assert_eq!(c.apply(9.0), Some(0.0));
    let mut a = TransformState::new(InputTransform::Abs, 2);
    assert_eq!(a.apply(-2.5), Some(2.5));
}

#[test]
fn moments_merge_matches_direct_computation() {
    let xs = gaussian(4, 37);
    let mut direct = Moments::default();
    for &x in &xs {
        direct.push(x);
    }
    let mut left = Moments::default();
    let mut right = Moments::default();
    xs[..11].iter().for_each(|&x| left.push(x));
    xs[11..].iter().for_each(|&x| right.push(x));
    let merged = left.merge(&right);
    assert_eq!(merged.n, 37.0);
    assert!((merged.mean() - direct.mean()).abs() < 1e-12);
    assert!((merged.variance() - direct.variance()).abs() < 1e-12);
}

#[test]
fn adwin_window_grows_without_change() {
    let mut a = Adwin::new(AdwinParams::default());
    for x in gaussian(2, 5000) {
        assert_eq!(a.update(x).status, Status::Stable);
    }
    assert_eq!(a.width(), 5000);
}

#[test]
fn seed_compression_merges_similar_blocks() {
    let mut s = Seed::new(SeedParams { compress_interval: 4, ..Default::default() });
    for _ in 0..(32 * 4) {
        s.update(1.0);
    }
    assert_eq!(s.block_count(), 1);
}

#[test]
fn run_detector_skips_missing_values() {
    let start = Timestamp::from_unix(0);
    let mut values: Vec<f64> = vec![0.0; 200];
    values.extend(core::iter::repeat_n(50.0, 200));
    let mut series = ResidualSeries::from_residuals(start, 600, &values);
    let cfg = DetectorConfig {
        params: DetectorParams::Cusum(CusumParams { min_instances: 1, ..Default::default() }),
        transform: InputTransform::Raw,
        standardize_warmup: DEFAULT_WARMUP,
    };
    let full = run_detector(&cfg, &series).unwrap();
    assert_eq!(full[0].sample_index, 200);
    assert_eq!(full[0].timestamp, start + 200 * 600);

    let mut entries = series.entries.clone();
    for e in entries.iter_mut().take(50) {
        e.residual = None;
        e.predicted = None;
    }
    series = ResidualSeries::new(entries);
    let gappy = run_detector(&cfg, &series).unwrap();
    assert_eq!(gappy[0].sample_index, 150);
    assert_eq!(gappy[0].timestamp, start + 200 * 600);

    let empty = ResidualSeries::new(vec![ResidualEntry { timestamp: start, actual: 1.0, predicted: None, residual: None, n_members: 0 }]);
    assert_eq!(run_detector(&cfg, &empty), Err(DetectorError::EmptyInput));
    let single = ResidualSeries::from_residuals(start, 600, &[3.0]);
    assert!(run_detector(&DetectorConfig::default_for(DetectorKind::Adwin), &single).unwrap().is_empty());
}

#[test]
fn seqdrift2_depends_only_on_its_seed() {
    let xs = stepped(8, 3000, 1500, 1.0);
    let cfg = |seed| DetectorConfig {
        params: DetectorParams::SeqDrift2(SeqDrift2Params { seed, ..Default::default() }),
        ..DetectorConfig::default_for(DetectorKind::SeqDrift2)
    };
    assert_eq!(drift_indices(&cfg(4), &xs), drift_indices(&cfg(4), &xs));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn standardized_detectors_are_affine_invariant(
        seed in 0u64..1000,
        scale in 0.05f64..200.0,
        offset in -1000.0f64..1000.0,
        kind_ix in 0usize..10,
    ) {
        let kind = DetectorKind::ALL[kind_ix];
        let xs = stepped(seed, 2500, 1200, 2.5);
        let ys: Vec<f64> = xs.iter().map(|x| scale * x + offset).collect();
        let cfg = DetectorConfig::default_for(kind);
        prop_assert_eq!(drift_indices(&cfg, &xs), drift_indices(&cfg, &ys));
    }

    #[test]
    fn events_are_monotone_and_spaced(seed in 0u64..1000, kind_ix in 0usize..10) {
        let kind = DetectorKind::ALL[kind_ix];
        let cfg = DetectorConfig::default_for(kind);
        let xs = stepped(seed, 3000, 1000, 3.0);
        let ix = drift_indices(&cfg, &xs);
        let min = cfg.min_samples() as usize;
        for w in ix.windows(2) {
            prop_assert!(w[1] >= w[0] + min);
        }
    }
}

#[test]
fn run_detector_equals_manual_fold() {
    let xs = stepped(12, 6000, 3000, 1.5);
    let series = ResidualSeries::from_residuals(Timestamp::from_unix(1_000), 600, &xs);
    for kind in DetectorKind::ALL {
        let cfg = DetectorConfig::default_for(kind);
        let events = run_detector(&cfg, &series).unwrap();
        let folded = drift_indices(&cfg, &xs);
        assert_eq!(events.iter().map(|e| e.sample_index as usize).collect::<Vec<_>>(), folded, "{kind}");
        for e in &events {
            assert_eq!(e.detector, kind);
            assert_eq!(e.timestamp, Timestamp::from_unix(1_000) + e.sample_index as i64 * 600);
        }
    }
}

#[test]
fn suffix_after_trigger_replays_identically() {
    let mut xs = stepped(21, 8000, 2000, 3.0);
    for x in &mut xs[5000..] {
        *x -= 6.0;
    }
    for kind in DetectorKind::ALL {
        let cfg = DetectorConfig::default_for(kind);
        let all = drift_indices(&cfg, &xs);
        let Some(&first) = all.first() else { panic!("{kind} never fired") };
        let suffix: Vec<usize> = drift_indices(&cfg, &xs[first + 1..]).into_iter().map(|i| i + first + 1).collect();
        assert_eq!(&all[1..], &suffix[..], "{kind}");
    }
}

#[test]
fn cusum_h5_detects_three_sigma_step_quickly() {
    let cfg = DetectorConfig {
        params: DetectorParams::Cusum(CusumParams { threshold: 5.0, allowance: 0.5, ..Default::default() }),
        ..DetectorConfig::default_for(DetectorKind::Cusum)
    };
    let hits = (0..100)
        .filter(|&s| {
            let xs = stepped(s, 4000, 2000, 3.0);
            drift_indices(&cfg, &xs).into_iter().find(|&i| i >= 2000).is_some_and(|i| i - 2000 <= 50)
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}
