use std::path::Path;

use driftlab::io::detector_config::{default_detector_set, detector_set_to_value, parse_detector_set};
use driftlab::io::model_file::{decode_ensemble, encode_ensemble, load_elm, load_ensemble, save_elm, save_ensemble};
use driftlab::io::tables::{
    parse_scada_csv, read_events_csv, read_residual_csv, read_scada_csv, write_events_csv, write_residual_csv, write_scada_csv,
    write_scada_csv_to,
};
use driftlab::io::{read_jsonl, write_jsonl};
use driftlab_core::detectors::{DetectionEvent, DetectorKind};
use driftlab_core::elm::{train_elm, ElmParams};
use driftlab_core::ensemble::{train_ensemble, EnsembleConfig, ResidualEntry, ResidualSeries};
use driftlab_core::linalg::Matrix;
use driftlab_core::scada::{generate_series, Channel, DriftInjection, DriftKind, GeneratorConfig, InjectionTarget, ScadaRecord, TurbineSeries};
use driftlab_core::Timestamp;
use proptest::prelude::*;

fn record_strategy() -> impl Strategy<Value = ScadaRecord> {
    (-40.0f64..50.0, 0.0f64..40.0, 0.0f64..=1.0, 0.0f64..3000.0).prop_map(|(a, w, t, p)| ScadaRecord {
        timestamp: Timestamp::from_unix(0),
        ambient_temp: a,
        wind_speed: w,
        turbulence: t,
        power: p,
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scada_csv_round_trip(records in prop::collection::vec(record_strategy(), 1..60), start in 0i64..1_000_000) {
        let records: Vec<ScadaRecord> = records
            .into_iter()
            .enumerate()
            .map(|(i, r)| ScadaRecord { timestamp: Timestamp::from_unix(1_451_606_400 + (start + i as i64) * 600), ..r })
            .collect();
        let series = TurbineSeries::new("T", records).unwrap();
        let mut buf = Vec::new();
        write_scada_csv_to(&mut buf, &series).unwrap();
        let back = parse_scada_csv(buf.as_slice(), "T", Path::new("mem")).unwrap();
        prop_assert_eq!(back.dropped, 0);
        prop_assert_eq!(back.series.len(), series.len());
        for (a, b) in series.records().iter().zip(back.series.records()) {
            prop_assert_eq!(a.timestamp, b.timestamp);
            for c in [Channel::AmbientTemp, Channel::WindSpeed, Channel::Turbulence, Channel::Power] {
                prop_assert!(close(a.channel(c), b.channel(c)));
            }
        }
    }
}

#[test]
fn generated_series_survives_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = GeneratorConfig { n_records: 2000, seed: 3, ..GeneratorConfig::default() };
    let (series, _) = generate_series("T01", &config, &[]).unwrap();
    let path = dir.path().join("series/T01.csv");
    write_scada_csv(&path, &series).unwrap();
    let back = read_scada_csv(&path, "T01").unwrap();
    assert_eq!(back.dropped, 0);
    assert_eq!(back.series, series);
}

#[test]
fn bad_rows_are_dropped() {
    let csv = "timestamp,ambient_temp,wind_speed,turbulence,power\n\
               2016-01-01T00:20:00Z,5,7,0.1,800\n\
               2016-01-01T00:00:00Z,5,7,0.1,800\n\
               2016-01-01T00:10:00Z,NaN,7,0.1,800\n\
               not-a-time,5,7,0.1,800\n\
               2016-01-01T00:30:00Z,5,-1,0.1,800\n";
    let import = parse_scada_csv(csv.as_bytes(), "T", Path::new("mem")).unwrap();
    assert_eq!(import.dropped, 3);
    let times: Vec<i64> = import.series.records().iter().map(|r| r.timestamp.unix()).collect();
    assert_eq!(times, vec![1_451_606_400, 1_451_607_600]);
}

#[test]
fn off_grid_spacing_or_duplicate_timestamps_are_errors() {
    let dup = "timestamp,ambient_temp,wind_speed,turbulence,power\n\
               2016-01-01T00:00:00Z,5,7,0.1,800\n\
               2016-01-01T00:00:00Z,5,7,0.1,800\n";
    assert!(parse_scada_csv(dup.as_bytes(), "T", Path::new("mem")).is_err());
    let off = "timestamp,ambient_temp,wind_speed,turbulence,power\n\
               2016-01-01T00:00:00Z,5,7,0.1,800\n\
               2016-01-01T00:03:00Z,5,7,0.1,800\n";
    assert!(parse_scada_csv(off.as_bytes(), "T", Path::new("mem")).is_err());
}

#[test]
fn elm_file_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let x = Matrix::from_row_major(50, 2, (0..100).map(|i| (i as f64 * 0.37).sin()).collect());
    let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.1).cos()).collect();
    let model = train_elm(&x, &y, &ElmParams { hidden_width: 8, input_dim: 2, seed: 9, ..ElmParams::default() }).unwrap();
    let path = dir.path().join("m.elm");
    save_elm(&path, &model).unwrap();
    let back = load_elm(&path).unwrap();
    assert_eq!(back, model);
    for (a, b) in back.output_weights.iter().zip(&model.output_weights) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn ensemble_file_is_bit_exact_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let config = GeneratorConfig { n_records: 9000, seed: 1, ..GeneratorConfig::default() };
    let (series, _) = generate_series("T01", &config, &[]).unwrap();
    let ens_cfg = EnsembleConfig { batch_size: 3000, ..EnsembleConfig::default() };
    let model = train_ensemble(&series, &Channel::PREDICTORS, &ens_cfg, 5).unwrap();
    let path = dir.path().join("models/T01/ensemble.ens");
    save_ensemble(&path, &model).unwrap();
    let back = load_ensemble(&path).unwrap();
    assert_eq!(back, model);
    assert_eq!(encode_ensemble(&back), std::fs::read(&path).unwrap());
}

#[test]
fn corrupt_model_files_are_rejected() {
    assert!(decode_ensemble(b"").is_err());
    assert!(decode_ensemble(b"DLENSMBL\x02\x00\x00\x00").is_err());
    assert!(decode_ensemble(b"NOTMAGIC\x01\x00\x00\x00").is_err());
}

#[test]
fn residual_and_event_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let residuals = ResidualSeries::new(vec![
        ResidualEntry { timestamp: Timestamp::from_unix(0), actual: 812.25, predicted: Some(800.0), residual: Some(12.25), n_members: 3 },
        ResidualEntry { timestamp: Timestamp::from_unix(600), actual: 0.1, predicted: None, residual: None, n_members: 0 },
        ResidualEntry { timestamp: Timestamp::from_unix(1200), actual: 1.0 / 3.0, predicted: Some(0.3), residual: Some(1.0 / 3.0 - 0.3), n_members: 1 },
    ]);
    let path = dir.path().join("r.csv");
    write_residual_csv(&path, &residuals).unwrap();
    assert_eq!(read_residual_csv(&path).unwrap(), residuals);

    let events = vec![
        DetectionEvent { detector: DetectorKind::Cusum, timestamp: Timestamp::from_unix(600), sample_index: 1, statistic: 10.5 },
        DetectionEvent { detector: DetectorKind::HddmW, timestamp: Timestamp::from_unix(1200), sample_index: 2, statistic: 0.1 },
    ];
    let path = dir.path().join("e.csv");
    write_events_csv(&path, &events).unwrap();
    assert_eq!(read_events_csv(&path).unwrap(), events);
}

#[test]
fn injections_and_detector_sets_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inj = vec![DriftInjection {
        kind: DriftKind::Recurring,
        target: InjectionTarget::SensorOffset(Channel::WindSpeed),
        start: Timestamp::from_unix(6000),
        end: Timestamp::from_unix(60000),
        amplitude: 0.5,
        period: Some(3600),
    }];
    let path = dir.path().join("i.jsonl");
    write_jsonl(&path, &inj).unwrap();
    assert_eq!(read_jsonl::<DriftInjection>(&path).unwrap(), inj);

    let set = default_detector_set();
    assert_eq!(set.len(), 10);
    assert_eq!(parse_detector_set(detector_set_to_value(&set)).unwrap(), set);
}
