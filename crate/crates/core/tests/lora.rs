use mitoforge_core::lora::{
    gradcheck, train_toy, LoraAdapter, Matrix, ToyClassifier, TokenDataset, TrainConfig, GRADCHECK_STEP,
};
use mitoforge_core::rng::Stream;

/// Model with nonzero adapter factors and head so every gradient path is live.
fn live_model(d: usize, heads: usize, rank: usize, seed: u64) -> ToyClassifier {
    let mut model = ToyClassifier::random(d, heads, rank, 2, seed).unwrap();
    let mut s = Stream::new(seed ^ 0xABCD);
    for adapter in [&mut model.layer.lora_q, &mut model.layer.lora_v].into_iter().flatten() {
        adapter.a = Matrix::from_fn(d, rank, |_, _| s.normal(0.0, 0.3));
        adapter.b = Matrix::from_fn(rank, d, |_, _| s.normal(0.0, 0.3));
    }
    model.head = Matrix::from_fn(d, 2, |_, _| s.normal(0.0, 0.5));
    model.bias = vec![s.normal(0.0, 0.1), s.normal(0.0, 0.1)];
    model
}

fn batch(n: usize, tokens: usize, d: usize, seed: u64) -> (Vec<Matrix>, Vec<usize>) {
    let mut s = Stream::new(seed);
    let xs = (0..n).map(|_| Matrix::from_fn(tokens, d, |_, _| s.normal(0.0, 1.0))).collect();
    let ys = (0..n).map(|i| i % 2).collect();
    (xs, ys)
}

#[test]
fn adapter_path_matches_dense_path() {
    for seed in 0..10 {
        let model = live_model(8, 2, 2, seed);
        let mut dense = model.clone();
        dense.layer = model.layer.merged().unwrap();
        let (xs, _) = batch(5, 4, 8, seed + 100);
        let a = model.forward(&xs).unwrap();
        let b = dense.forward(&xs).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }
}

#[test]
fn zeroed_adapters_match_removed_adapters() {
    let model = ToyClassifier::random(8, 4, 3, 2, 17).unwrap();
    let mut bare = model.clone();
    bare.layer.lora_q = None;
    bare.layer.lora_v = None;
    let (xs, _) = batch(6, 5, 8, 3);
    assert!(model.forward(&xs).unwrap().max_abs_diff(&bare.forward(&xs).unwrap()) < 1e-12);
}

#[test]
fn probabilities_are_normalized() {
    let model = live_model(8, 2, 2, 4);
    let (xs, _) = batch(10, 3, 8, 4);
    let p = model.forward(&xs).unwrap();
    for i in 0..p.rows() {
        let row = p.row(i);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
    }
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..20 {
        let model = live_model(8, 2, 2, seed);
        let (xs, ys) = batch(4, 4, 8, seed + 1000);
        let report = gradcheck(&model, &xs, &ys, GRADCHECK_STEP).unwrap();
        assert!(
            report.max_relative_error < 1e-5,
            "seed {seed}: {report:?}"
        );
    }
}

#[test]
fn doubling_scale_doubles_b_gradient_at_zero_b() {
    // Central differences of the loss with respect to b_q at b = 0.
    let fd_grad_b = |scale: f64| {
        let mut model = live_model(8, 2, 2, 5);
        let adapter = model.layer.lora_q.as_mut().unwrap();
        adapter.b = Matrix::zeros(2, 8);
        adapter.scale = scale;
        let (xs, ys) = batch(4, 4, 8, 55);
        let params = model.trainable();
        let b_offset = 8 * 2;
        (0..16)
            .map(|i| {
                let mut probe = model.clone();
                let mut v = params.clone();
                v[b_offset + i] += 1e-5;
                probe.set_trainable(&v);
                let plus = probe.loss(&xs, &ys).unwrap();
                v[b_offset + i] -= 2e-5;
                probe.set_trainable(&v);
                let minus = probe.loss(&xs, &ys).unwrap();
                (plus - minus) / 2e-5
            })
            .collect::<Vec<_>>()
    };
    let one = fd_grad_b(1.0);
    let two = fd_grad_b(2.0);
    assert!(one.iter().any(|g| g.abs() > 1e-6));
    for (g1, g2) in one.iter().zip(&two) {
        assert!((g2 - 2.0 * g1).abs() <= 1e-6 * g1.abs().max(1e-3), "{g1} {g2}");
    }
}

#[test]
fn training_reaches_target_and_keeps_frozen_weights() {
    let d = 8;
    let model = ToyClassifier::random(d, 2, 2, 2, 2024).unwrap();
    let frozen_bits: Vec<Vec<u64>> = model
        .layer
        .frozen()
        .iter()
        .map(|m| m.data().iter().map(|v| v.to_bits()).collect())
        .collect();
    let train = TokenDataset::separable(200, 4, d, 2.0, 0.1, 1);
    let val = TokenDataset::separable(100, 4, d, 2.0, 0.1, 2);
    let cfg = TrainConfig {
        epochs: 200,
        patience: 200,
        seed: 9,
        ..TrainConfig::default()
    };
    let outcome = train_toy(&model, &train, &val, &cfg).unwrap();
    assert!(outcome.best_val_balanced_accuracy >= 0.95, "{}", outcome.best_val_balanced_accuracy);
    for (m, bits) in outcome.model.layer.frozen().iter().zip(&frozen_bits) {
        let now: Vec<u64> = m.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(&now, bits);
    }
    assert_ne!(outcome.model.trainable(), model.trainable());
}

#[test]
fn early_stopping_returns_best_snapshot() {
    let model = ToyClassifier::random(8, 2, 2, 2, 1).unwrap();
    let train = TokenDataset::separable(40, 3, 8, 2.0, 0.1, 3);
    let val = TokenDataset::separable(20, 3, 8, 2.0, 0.1, 4);
    let cfg = TrainConfig {
        lr: 1e-2,
        epochs: 100,
        patience: 3,
        ..TrainConfig::default()
    };
    let outcome = train_toy(&model, &train, &val, &cfg).unwrap();
    assert!(outcome.stopped_early);
    assert!(outcome.history.len() < 100);
    let preds = outcome.model.predict(&val.samples).unwrap();
    let ba = mitoforge_core::ensemble::balanced_accuracy(&preds, &val.labels, 2).unwrap();
    assert_eq!(ba, outcome.best_val_balanced_accuracy);
}

#[test]
fn init_gives_zero_update() {
    let mut s = Stream::new(8);
    let adapter = LoraAdapter::init(6, 6, 3, 1.0, &mut s).unwrap();
    assert!(adapter.delta().data().iter().all(|&v| v == 0.0));
    assert!(adapter.a.data().iter().any(|&v| v != 0.0));
    let std = (adapter.a.data().iter().map(|v| v * v).sum::<f64>() / 18.0).sqrt();
    assert!(std > 0.005 && std < 0.05, "{std}");
}
