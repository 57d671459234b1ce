use super::*;
use crate::gnn::ModelConfig;
use crate::graph::{generate_mall, CorridorStyle, MallGraph, MallSpec};
use crate::prob::{AttractionParams, CountMode};

fn mall(n: usize, seed: u64) -> MallGraph {
    generate_mall(&MallSpec::new(n, 2, CorridorStyle::Loop, seed)).unwrap()
}

fn dataset(malls: Vec<MallGraph>, s: usize) -> Dataset {
    build_dataset(malls, s, &AttractionParams::default(), 7, CountMode::Expected).unwrap()
}

#[test]
fn samples_differ_in_assignment() {
    let d = dataset(vec![mall(20, 1)], 2);
    assert_eq!(d.samples.len(), 2);
    assert_ne!(d.samples[0].assignment, d.samples[1].assignment);
    assert_eq!(d.samples[0].assignment.counts(), d.samples[1].assignment.counts());
    for s in &d.samples {
        assert_eq!(s.targets.len(), d.malls[0].num_edges());
        assert_eq!(s.shop_x.rows(), 20);
        assert_eq!(s.graph_x.cols(), 32);
    }
}

#[test]
fn sampled_mode_varies_counts() {
    let d = build_dataset(vec![mall(20, 1)], 6, &AttractionParams::default(), 7, CountMode::Sampled).unwrap();
    let first = d.samples[0].assignment.counts();
    assert!(d.samples.iter().any(|s| s.assignment.counts() != first));
    assert!(d.samples.iter().all(|s| s.assignment.counts().total() == 20));
}

#[test]
fn rebuild_and_save_are_byte_identical() {
    let a = dataset(vec![mall(12, 2), mall(10, 3)], 3);
    let b = dataset(vec![mall(12, 2), mall(10, 3)], 3);
    assert_eq!(a, b);
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    a.save(da.path()).unwrap();
    b.save(db.path()).unwrap();
    for s in &a.samples {
        let f = format!("samples/{}.json", s.key());
        assert_eq!(
            std::fs::read(da.path().join(&f)).unwrap(),
            std::fs::read(db.path().join(&f)).unwrap()
        );
    }
    let back = Dataset::load(da.path()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn sample_file_has_sorted_keys() {
    let d = dataset(vec![mall(5, 4)], 1);
    let dir = tempfile::tempdir().unwrap();
    d.save(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(format!("samples/{}.json", d.samples[0].key()))).unwrap();
    let keys: Vec<usize> = [
        "\"assignment\"",
        "\"graph_features\"",
        "\"mall_id\"",
        "\"nonshop_features\"",
        "\"sample_index\"",
        "\"shop_features\"",
        "\"targets\"",
    ]
    .iter()
    .map(|k| text.find(k).unwrap())
    .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn split_counts_and_membership() {
    let mut d = dataset(vec![mall(8, 5), mall(8, 6)], 10);
    let s = d.split(default_train_count(10), 3).unwrap();
    assert_eq!((s.train.len(), s.test.len()), (16, 4));
    let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..20).collect::<Vec<_>>());
    for p in 0..2 {
        assert_eq!(s.train.iter().filter(|&&i| d.samples[i].mall == p).count(), 8);
    }
    assert_eq!(d.recorded_split().unwrap(), s);
    let mut d2 = d.clone();
    assert_eq!(d2.split(8, 3).unwrap(), s);
    assert_ne!(d2.split(8, 4).unwrap(), s);
    assert!(matches!(d2.split(11, 3), Err(PipelineError::InsufficientSamples { need: 11, .. })));
}

#[test]
fn evaluation_is_batching_invariant() {
    let d = dataset(vec![mall(10, 7), mall(14, 8)], 20);
    let config = ModelConfig::default();
    let store = initial_params(&config, &TrainConfig::default()).unwrap();
    let idx: Vec<usize> = (0..40).collect();
    let together = predict(&d.samples, &idx, &store, &config).unwrap();
    for &i in &[0usize, 17, 33] {
        let alone = predict(&d.samples, &[i], &store, &config).unwrap();
        assert_eq!(alone[0], together[i]);
    }
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let d = dataset(vec![mall(10, 9)], 8);
    let config = ModelConfig::default();
    let cfg = TrainConfig {
        epochs: 3,
        lr: 0.0,
        batch: 8,
        seed: 1,
    };
    let init = initial_params(&config, &cfg).unwrap();
    let idx: Vec<usize> = (0..8).collect();
    let out = train(&d.samples, &idx, &[], &config, &cfg, None).unwrap();
    for (name, t) in init.iter() {
        assert_eq!(out.store.get(name).unwrap(), t);
    }
    let first = out.curve[0].train_l1;
    assert!(out.curve.iter().all(|p| (p.train_l1 - first).abs() < 1e-12 && p.test_l1.is_none()));
}

#[test]
fn training_lowers_train_loss_and_is_deterministic() {
    let mut d = dataset(vec![mall(16, 10)], 20);
    let s = d.split(16, 0).unwrap();
    let config = ModelConfig::default();
    let cfg = TrainConfig {
        epochs: 8,
        batch: 4,
        ..Default::default()
    };
    let a = train(&d.samples, &s.train, &s.test, &config, &cfg, None).unwrap();
    assert_eq!(a.curve.len(), 8);
    assert!(a.curve[7].train_l1 < a.curve[0].train_l1, "{:?}", a.curve);
    let b = train(&d.samples, &s.train, &s.test, &config, &cfg, None).unwrap();
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.store, b.store);
}

#[test]
fn bad_train_config() {
    let d = dataset(vec![mall(6, 11)], 2);
    let config = ModelConfig::default();
    for cfg in [
        TrainConfig {
            epochs: 0,
            ..Default::default()
        },
        TrainConfig {
            batch: 0,
            ..Default::default()
        },
    ] {
        assert!(matches!(
            train(&d.samples, &[0], &[], &config, &cfg, None),
            Err(PipelineError::Config(_))
        ));
    }
    assert!(matches!(
        train(&d.samples, &[], &[], &config, &TrainConfig::default(), None),
        Err(PipelineError::EmptyTrainSplit)
    ));
}

fn row(sample: usize, predicted: f64, actual: f64) -> PredictionRow {
    PredictionRow {
        mall_id: "m".into(),
        sample,
        edge_k: 0,
        edge_u: 0,
        edge_v: 1,
        predicted,
        actual,
        abs_error: (predicted - actual).abs(),
    }
}

#[test]
fn metrics_hand_values() {
    let rows = vec![row(0, 0.5, 0.2), row(0, 0.1, 0.1), row(1, 0.0, 0.6)];
    let m = metrics_from_rows(&rows);
    assert!((m.mae - 0.3).abs() < 1e-15);
    // Sample 0 mean 0.15, sample 1 mean 0.6.
    assert!((m.l1 - 0.375).abs() < 1e-15);
    assert_eq!(m.n_edges, 3);

    let exact = vec![row(0, 0.2, 0.2), row(0, 0.7, 0.7), row(0, 0.1, 0.1)];
    let m = metrics_from_rows(&exact);
    assert_eq!(m.mae, 0.0);
    assert!((m.pearson_r - 1.0).abs() < 1e-12 && m.pearson_defined);

    let constant = vec![row(0, 0.3, 0.2), row(0, 0.3, 0.7)];
    let m = metrics_from_rows(&constant);
    assert_eq!((m.pearson_r, m.pearson_defined), (0.0, false));
}

#[test]
fn pearson_matches_direct_formula() {
    let x = [0.1, 0.4, 0.35, 0.8, 0.05];
    let y = [0.0, 0.5, 0.3, 0.9, 0.2];
    let (mx, my) = (x.iter().sum::<f64>() / 5.0, y.iter().sum::<f64>() / 5.0);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let want = sxy / (sxx * syy).sqrt();
    assert!((pearson(&x, &y).unwrap() - want).abs() < 1e-12);
}

#[test]
fn csv_tables() {
    let curve = vec![
        CurvePoint {
            epoch: 1,
            train_l1: 0.5,
            test_l1: Some(0.25),
        },
        CurvePoint {
            epoch: 2,
            train_l1: 0.125,
            test_l1: None,
        },
    ];
    let text = String::from_utf8(curve_csv(&curve).unwrap()).unwrap();
    assert_eq!(text, "epoch,train_l1,test_l1\n1,0.5,0.25\n2,0.125,\n");

    let rows = vec![row(0, 0.5, 0.25)];
    let text = String::from_utf8(predictions_csv(&rows).unwrap()).unwrap();
    assert_eq!(
        text,
        "mall_id,sample,edge_k,edge_u,edge_v,predicted,actual,abs_error\nm,0,0,0,1,0.5,0.25,0.25\n"
    );
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    write_predictions(&p, &rows).unwrap();
    assert_eq!(read_predictions(&p).unwrap(), rows);
}
