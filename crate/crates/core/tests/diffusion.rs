use synthsel_core::data::{Column, ColumnKind, Dataset, Schema};
use synthsel_core::diffusion::*;
use synthsel_core::numerics::{Matrix, RngStream};

fn quick_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 5,
        hidden_dims: vec![16, 16],
        embedding_dim: 8,
        batch_size: 32,
        seed,
        ..TrainConfig::default()
    }
}

/// Two continuous columns plus a 3-level categorical and a binary response.
fn mixed(n: usize, seed: u64) -> Dataset {
    let schema = Schema::new(
        vec![
            Column::continuous("a"),
            Column::continuous("b"),
            Column::categorical("c", 3),
            Column::categorical("y", 2),
        ],
        3,
    )
    .unwrap();
    let mut rng = RngStream::new(seed, 0).rng();
    let values = Matrix::from_fn(n, 4, |_, j| match j {
        0 | 1 => rng.normal(),
        2 => rng.index(3) as f64,
        _ => rng.index(2) as f64,
    });
    Dataset::new(schema, values).unwrap()
}

fn gaussian_2d(n: usize, seed: u64) -> Dataset {
    let mut rng = RngStream::new(seed, 0).rng();
    let values = Matrix::from_fn(n, 2, |_, _| rng.normal());
    Dataset::new(Schema::regression(1, ColumnKind::Continuous), values).unwrap()
}

/// Central finite differences over every parameter of a tiny network.
fn max_gradcheck_error(net: &mut DenoiserMlp, batch: &TrainBatch) -> f64 {
    let (_, analytic) = loss_and_grad(net, batch);
    let base = net.params();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..base.len() {
        let mut p = base.clone();
        p[k] = base[k] + h;
        net.set_params(&p);
        let up = loss_only(net, batch);
        p[k] = base[k] - h;
        net.set_params(&p);
        let down = loss_only(net, batch);
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic[k].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[k] - numeric).abs() / denom);
    }
    net.set_params(&base);
    worst
}

fn tiny_batch(rng: &mut synthsel_core::numerics::StreamRng, n_gauss: usize, cat_sizes: &[usize], emb: usize) -> TrainBatch {
    let rows = 5;
    let in_dim = n_gauss + cat_sizes.iter().sum::<usize>() + emb;
    TrainBatch {
        rows,
        input: (0..rows * in_dim).map(|_| rng.normal()).collect(),
        eps: (0..rows * n_gauss).map(|_| rng.normal()).collect(),
        targets: (0..rows).flat_map(|_| cat_sizes.iter().map(|&k| rng.index(k)).collect::<Vec<_>>()).collect(),
        cat_sizes: cat_sizes.to_vec(),
    }
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..3 {
        let mut rng = RngStream::new(seed, 5).rng();
        let (ng, cats, emb) = (2, vec![3, 2], 2);
        let data_dim = ng + 5;
        let mut net = DenoiserMlp::new(vec![data_dim + emb, 8, 6, data_dim], &mut rng);
        let batch = tiny_batch(&mut rng, ng, &cats, emb);
        let err = max_gradcheck_error(&mut net, &batch);
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
    // Continuous-only and categorical-only heads.
    let mut rng = RngStream::new(9, 5).rng();
    let mut net = DenoiserMlp::new(vec![5, 8, 3], &mut rng);
    let batch = tiny_batch(&mut rng, 3, &[], 2);
    assert!(max_gradcheck_error(&mut net, &batch) < 1e-4);
    let mut net = DenoiserMlp::new(vec![6, 7, 4], &mut rng);
    let batch = tiny_batch(&mut rng, 0, &[4], 2);
    assert!(max_gradcheck_error(&mut net, &batch) < 1e-4);
}

#[test]
fn training_is_deterministic() {
    let d = mixed(60, 1);
    let a = DiffusionModel::train(&d, &quick_cfg(4)).unwrap();
    let b = DiffusionModel::train(&d, &quick_cfg(4)).unwrap();
    assert_eq!(a, b);
    let c = DiffusionModel::train(&d, &quick_cfg(5)).unwrap();
    assert_ne!(a.net, c.net);
    assert_eq!(a.train_log.len(), 5);
}

#[test]
fn zero_epochs_rejected() {
    let d = gaussian_2d(20, 0);
    let cfg = TrainConfig { epochs: 0, ..quick_cfg(0) };
    let err = DiffusionModel::train(&d, &cfg).unwrap_err();
    assert!(matches!(err, DiffusionError::NoTraining));
    assert!(err.to_string().contains("no training performed"));
    let m = DiffusionModel::train(&d, &quick_cfg(0)).unwrap();
    assert!(matches!(m.fine_tune(&d, &cfg), Err(DiffusionError::NoTraining)));
}

#[test]
fn invalid_configs_rejected() {
    let d = gaussian_2d(20, 0);
    for cfg in [
        TrainConfig { learning_rate: 1.0, ..quick_cfg(0) },
        TrainConfig { batch_size: 0, ..quick_cfg(0) },
        TrainConfig { hidden_dims: vec![], ..quick_cfg(0) },
        TrainConfig { embedding_dim: 3, ..quick_cfg(0) },
        TrainConfig { timesteps: 10, ..quick_cfg(0) },
    ] {
        assert!(matches!(DiffusionModel::train(&d, &cfg), Err(DiffusionError::InvalidConfig(_))), "{cfg:?}");
    }
}

#[test]
fn generation_is_deterministic_and_respects_schema() {
    let d = mixed(80, 2);
    for mode in [CategoricalMode::Multinomial, CategoricalMode::GaussianOnehot] {
        let cfg = TrainConfig {
            categorical_mode: mode,
            ..quick_cfg(1)
        };
        let m = DiffusionModel::train(&d, &cfg).unwrap();
        let g1 = m.generate(200, &mut RngStream::new(3, 1).rng()).unwrap();
        let g2 = m.generate(200, &mut RngStream::new(3, 1).rng()).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(g1.schema(), d.schema());
        assert_eq!(g1.n(), 200);
        for i in 0..200 {
            let c = g1.values()[(i, 2)];
            let y = g1.values()[(i, 3)];
            assert!(c.fract() == 0.0 && (0.0..3.0).contains(&c));
            assert!(y == 0.0 || y == 1.0);
        }
        assert_ne!(g1, m.generate(200, &mut RngStream::new(3, 2).rng()).unwrap());
    }
    assert_eq!(DiffusionModel::train(&d, &quick_cfg(0)).unwrap().n_train, 80);
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let d = mixed(50, 3);
    let m = DiffusionModel::train(&d, &quick_cfg(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_checkpoint(&m, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, m);
    for (a, b) in back.net.params().iter().zip(m.net.params()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    let g1 = m.generate(40, &mut RngStream::new(8, 1).rng()).unwrap();
    let g2 = back.generate(40, &mut RngStream::new(8, 1).rng()).unwrap();
    assert_eq!(g1, g2);
}

#[test]
fn checkpoint_wrong_version_and_truncation() {
    let d = gaussian_2d(30, 4);
    let m = DiffusionModel::train(&d, &quick_cfg(0)).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&m, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();

    let bumped = text.replacen(&format!("\"version\": {CHECKPOINT_VERSION}"), "\"version\": 99", 1);
    assert_ne!(bumped, text);
    match read_checkpoint(bumped.as_bytes()) {
        Err(DiffusionError::CheckpointVersion { found, expected }) => {
            assert_eq!(found, "99");
            assert_eq!(expected, CHECKPOINT_VERSION);
        }
        other => panic!("{other:?}"),
    }
    for cut in [buf.len() / 3, buf.len() / 2, buf.len() - 3] {
        assert!(matches!(read_checkpoint(&buf[..cut]), Err(DiffusionError::CheckpointCorrupt(_))), "cut {cut}");
    }
    // Hex payload cut short inside an otherwise valid document.
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut doc = value.clone();
    let w = doc["weights"][0].as_str().unwrap().to_string();
    doc["weights"][0] = serde_json::Value::String(w[..w.len() - 16].to_string());
    assert!(matches!(
        read_checkpoint(doc.to_string().as_bytes()),
        Err(DiffusionError::CheckpointCorrupt(_))
    ));
}

#[test]
fn fine_tune_checks_schema_and_recomputes_stats() {
    let d = gaussian_2d(60, 5);
    let m = DiffusionModel::train(&d, &quick_cfg(0)).unwrap();
    let other = mixed(60, 5);
    assert!(matches!(m.fine_tune(&other, &quick_cfg(0)), Err(DiffusionError::SchemaMismatch(_))));

    let shifted = Dataset::new(
        d.schema().clone(),
        Matrix::from_fn(60, 2, |i, j| 3.0 * d.values()[(i, j)] + 10.0),
    )
    .unwrap();
    let ft = m.fine_tune(&shifted, &quick_cfg(1)).unwrap();
    assert!((ft.stats.means[0] - (3.0 * m.stats.means[0] + 10.0)).abs() < 1e-9);
    assert!((ft.stats.sds[0] - 3.0 * m.stats.sds[0]).abs() < 1e-9);
    assert_eq!(ft.net.dims, m.net.dims);
}

#[test]
fn fine_tune_on_own_data_is_stable() {
    let d = gaussian_2d(200, 6);
    let cfg = TrainConfig {
        epochs: 30,
        ..quick_cfg(0)
    };
    let m = DiffusionModel::train(&d, &cfg).unwrap();
    let ft = m.fine_tune(&d, &cfg).unwrap();
    let first = ft.train_log[0];
    let last = *ft.train_log.last().unwrap();
    assert!(last <= 2.0 * first, "{first} -> {last}");
}

#[test]
fn training_makes_progress() {
    let d = gaussian_2d(300, 7);
    let cfg = TrainConfig {
        epochs: 40,
        hidden_dims: vec![32, 32],
        ..quick_cfg(0)
    };
    let m = DiffusionModel::train(&d, &cfg).unwrap();
    let tail: f64 = m.train_log[35..].iter().sum::<f64>() / 5.0;
    assert!(tail <= m.train_log[0], "{:?}", m.train_log);
}

#[test]
fn cosine_schedule_trains() {
    let d = gaussian_2d(50, 8);
    let cfg = TrainConfig {
        schedule: ScheduleKind::Cosine,
        ..quick_cfg(0)
    };
    let m = DiffusionModel::train(&d, &cfg).unwrap();
    assert_eq!(m.schedule.kind, ScheduleKind::Cosine);
    assert!(m.generate(10, &mut RngStream::new(0, 1).rng()).is_ok());
}

#[test]
fn overflowing_column_is_rejected() {
    let mut values = gaussian_2d(40, 9).values().clone();
    values[(0, 0)] = 1e200;
    values[(1, 0)] = -1e200;
    let d = Dataset::new(Schema::regression(1, ColumnKind::Continuous), values).unwrap();
    let err = DiffusionModel::train(&d, &quick_cfg(0)).unwrap_err();
    assert!(err.to_string().contains("x1"), "{err}");
}
