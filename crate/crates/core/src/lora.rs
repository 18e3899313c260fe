//! Low-rank adapters on the query and value projections of a toy
//! multi-head self-attention classifier.
//!
//! The frozen projections `W0_Q` and `W0_V` are never modified; the layer
//! uses `W_Q = W0_Q + scale · A_Q B_Q` (likewise for `V`). Only the adapter
//! factors and the classification head receive gradients.
//!
//! A sample is a `tokens x d` matrix. The classifier runs one attention block,
//! mean-pools the tokens, and applies a linear head followed by a softmax.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ensemble::balanced_accuracy;
use crate::error::{invalid, Result};
pub use crate::matrix::Matrix;
use crate::matrix::softmax_in_place;
use crate::rng::Stream;

pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct LoraAdapter {
    pub a: Matrix,
    pub b: Matrix,
    pub scale: f64,
}

impl LoraAdapter {
    /// `a ~ N(0, 0.02²)`, `b = 0`, so the initial update is exactly zero.
    pub fn init(d: usize, k: usize, rank: usize, scale: f64, stream: &mut Stream) -> Result<Self> {
        if rank == 0 {
            return Err(invalid!("adapter rank must be at least 1"));
        }
        Ok(Self {
            a: Matrix::from_fn(d, rank, |_, _| stream.normal(0.0, INIT_STD)),
            b: Matrix::zeros(rank, k),
            scale,
        })
    }

    pub fn new(a: Matrix, b: Matrix, scale: f64) -> Result<Self> {
        if a.cols() != b.rows() || a.cols() == 0 {
            return Err(invalid!(
                "adapter factors {:?} and {:?} do not chain",
                a.shape(),
                b.shape()
            ));
        }
        Ok(Self { a, b, scale })
    }

    pub fn rank(&self) -> usize {
        self.a.cols()
    }

    /// `scale · a · b`
    pub fn delta(&self) -> Matrix {
        self.a.mul_unchecked(&self.b).scaled(self.scale)
    }
}

/// `w0 + scale · a · b`.
pub fn effective_weight(adapter: &LoraAdapter, w0: &Matrix) -> Result<Matrix> {
    if adapter.a.rows() != w0.rows() || adapter.b.cols() != w0.cols() || adapter.a.cols() != adapter.b.rows() {
        return Err(invalid!(
            "adapter {:?}·{:?} does not match frozen weight {:?}",
            adapter.a.shape(),
            adapter.b.shape(),
            w0.shape()
        ));
    }
    w0.add(&adapter.delta())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhsaLayer {
    pub d: usize,
    pub heads: usize,
    pub w0_q: Matrix,
    pub w_k: Matrix,
    pub w0_v: Matrix,
    pub w_o: Matrix,
    pub lora_q: Option<LoraAdapter>,
    pub lora_v: Option<LoraAdapter>,
}

impl MhsaLayer {
    /// Random frozen weights with std `1/√d` and freshly initialized adapters.
    pub fn random(d: usize, heads: usize, rank: usize, scale: f64, stream: &mut Stream) -> Result<Self> {
        if heads == 0 || !d.is_multiple_of(heads) {
            return Err(invalid!("heads ({heads}) must divide d ({d})"));
        }
        let std_dev = 1.0 / libm::sqrt(d as f64);
        let mut frozen = || Matrix::from_fn(d, d, |_, _| stream.normal(0.0, std_dev));
        let (w0_q, w_k, w0_v, w_o) = (frozen(), frozen(), frozen(), frozen());
        Ok(Self {
            d,
            heads,
            w0_q,
            w_k,
            w0_v,
            w_o,
            lora_q: Some(LoraAdapter::init(d, d, rank, scale, stream)?),
            lora_v: Some(LoraAdapter::init(d, d, rank, scale, stream)?),
        })
    }

    pub fn query_weight(&self) -> Result<Matrix> {
        match &self.lora_q {
            Some(a) => effective_weight(a, &self.w0_q),
            None => Ok(self.w0_q.clone()),
        }
    }

    pub fn value_weight(&self) -> Result<Matrix> {
        match &self.lora_v {
            Some(a) => effective_weight(a, &self.w0_v),
            None => Ok(self.w0_v.clone()),
        }
    }

    /// Dense equivalent: adapters folded into the projections and removed.
    pub fn merged(&self) -> Result<Self> {
        Ok(Self {
            w0_q: self.query_weight()?,
            w0_v: self.value_weight()?,
            lora_q: None,
            lora_v: None,
            ..self.clone()
        })
    }

    fn check_adapters(&self) -> Result<()> {
        for (name, adapter) in [("query", &self.lora_q), ("value", &self.lora_v)] {
            if let Some(ad) = adapter {
                let (d, k, r) = (ad.a.rows(), ad.b.cols(), ad.a.cols());
                if d != self.d || k != self.d || ad.b.rows() != r {
                    return Err(invalid!("{name} adapter {:?}·{:?} does not fit width {}", ad.a.shape(), ad.b.shape(), self.d));
                }
            }
        }
        Ok(())
    }

    /// The four frozen matrices, in `q, k, v, o` order.
    pub fn frozen(&self) -> [&Matrix; 4] {
        [&self.w0_q, &self.w_k, &self.w0_v, &self.w_o]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyClassifier {
    pub layer: MhsaLayer,
    /// `d x classes`
    pub head: Matrix,
    pub bias: Vec<f64>,
}

/// Activations of one sample kept for the backward pass.
struct Trace {
    q: Matrix,
    k: Matrix,
    v: Matrix,
    /// Row-softmaxed attention, one `tokens x tokens` matrix per head.
    attn: Vec<Matrix>,
    pooled: Vec<f64>,
    probs: Vec<f64>,
}

/// Gradients of the mean cross-entropy with respect to the trainable tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub a_q: Option<Matrix>,
    pub b_q: Option<Matrix>,
    pub a_v: Option<Matrix>,
    pub b_v: Option<Matrix>,
    pub head: Matrix,
    pub bias: Vec<f64>,
}

impl Gradients {
    /// Flattened in [`ToyClassifier::trainable`] order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in [&self.a_q, &self.b_q, &self.a_v, &self.b_v].into_iter().flatten() {
            out.extend_from_slice(m.data());
        }
        out.extend_from_slice(self.head.data());
        out.extend_from_slice(&self.bias);
        out
    }
}

impl ToyClassifier {
    /// Random frozen attention, fresh adapters, zero head and bias.
    pub fn random(d: usize, heads: usize, rank: usize, classes: usize, seed: u64) -> Result<Self> {
        if classes < 2 {
            return Err(invalid!("need at least two classes"));
        }
        let mut stream = Stream::new(seed);
        Ok(Self {
            layer: MhsaLayer::random(d, heads, rank, 1.0, &mut stream)?,
            head: Matrix::zeros(d, classes),
            bias: vec![0.0; classes],
        })
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    fn check_sample(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.layer.d || x.rows() == 0 {
            return Err(invalid!(
                "sample must be tokens x {} with at least one token, got {:?}",
                self.layer.d,
                x.shape()
            ));
        }
        if !x.is_finite() {
            return Err(invalid!("sample contains non-finite values"));
        }
        Ok(())
    }

    fn trace(&self, x: &Matrix) -> Trace {
        let layer = &self.layer;
        let dh = layer.d / layer.heads;
        let inv_sqrt = 1.0 / libm::sqrt(dh as f64);
        let q = project(x, &layer.w0_q, layer.lora_q.as_ref());
        let k = x.mul_unchecked(&layer.w_k);
        let v = project(x, &layer.w0_v, layer.lora_v.as_ref());
        let mut concat = Matrix::zeros(x.rows(), layer.d);
        let mut attn = Vec::with_capacity(layer.heads);
        for h in 0..layer.heads {
            let cols = h * dh..(h + 1) * dh;
            let (qh, kh, vh) = (q.columns(cols.clone()), k.columns(cols.clone()), v.columns(cols));
            let mut scores = qh.mul_t(&kh).scaled(inv_sqrt);
            for r in 0..scores.rows() {
                let n = scores.cols();
                softmax_in_place(&mut scores.data_mut()[r * n..(r + 1) * n]);
            }
            concat.set_columns(h * dh, &scores.mul_unchecked(&vh));
            attn.push(scores);
        }
        let z = concat.mul_unchecked(&layer.w_o);
        let tokens = x.rows() as f64;
        let pooled: Vec<f64> = (0..layer.d)
            .map(|j| (0..x.rows()).map(|t| z.get(t, j)).sum::<f64>() / tokens)
            .collect();
        let mut probs: Vec<f64> = (0..self.classes())
            .map(|c| self.bias[c] + (0..layer.d).map(|j| pooled[j] * self.head.get(j, c)).sum::<f64>())
            .collect();
        softmax_in_place(&mut probs);
        Trace {
            q,
            k,
            v,
            attn,
            pooled,
            probs,
        }
    }

    /// Class probabilities, one row per sample.
    pub fn forward(&self, batch: &[Matrix]) -> Result<Matrix> {
        self.layer.check_adapters()?;
        let mut out = Matrix::zeros(batch.len(), self.classes());
        for (i, x) in batch.iter().enumerate() {
            self.check_sample(x)?;
            for (c, p) in self.trace(x).probs.into_iter().enumerate() {
                out.set(i, c, p);
            }
        }
        Ok(out)
    }

    /// Argmax labels, ties toward the lower class.
    pub fn predict(&self, batch: &[Matrix]) -> Result<Vec<usize>> {
        let probs = self.forward(batch)?;
        Ok((0..probs.rows()).map(|i| argmax(probs.row(i))).collect())
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, batch: &[Matrix], labels: &[usize]) -> Result<f64> {
        self.check_labels(batch, labels)?;
        let probs = self.forward(batch)?;
        let total: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &y)| -libm::log(probs.get(i, y)))
            .sum();
        Ok(total / batch.len() as f64)
    }

    fn check_labels(&self, batch: &[Matrix], labels: &[usize]) -> Result<()> {
        if batch.len() != labels.len() || batch.is_empty() {
            return Err(invalid!(
                "batch of {} samples with {} labels",
                batch.len(),
                labels.len()
            ));
        }
        if let Some(y) = labels.iter().find(|&&y| y >= self.classes()) {
            return Err(invalid!("label {y} out of range for {} classes", self.classes()));
        }
        Ok(())
    }

    /// Analytic gradients of [`Self::loss`] for the trainable tensors.
    pub fn gradients(&self, batch: &[Matrix], labels: &[usize]) -> Result<Gradients> {
        self.check_labels(batch, labels)?;
        let layer = &self.layer;
        let (d, classes) = (layer.d, self.classes());
        let dh = d / layer.heads;
        let inv_sqrt = 1.0 / libm::sqrt(dh as f64);
        layer.check_adapters()?;
        let inv_n = 1.0 / batch.len() as f64;

        let mut g_head = Matrix::zeros(d, classes);
        let mut g_bias = vec![0.0; classes];
        let mut g_wq = Matrix::zeros(d, d);
        let mut g_wv = Matrix::zeros(d, d);

        for (x, &y) in batch.iter().zip(labels) {
            self.check_sample(x)?;
            let tr = self.trace(x);
            let tokens = x.rows();
            let dlogits: Vec<f64> = (0..classes)
                .map(|c| (tr.probs[c] - if c == y { 1.0 } else { 0.0 }) * inv_n)
                .collect();
            for c in 0..classes {
                g_bias[c] += dlogits[c];
                for j in 0..d {
                    let g = g_head.get(j, c) + tr.pooled[j] * dlogits[c];
                    g_head.set(j, c, g);
                }
            }
            let dpooled: Vec<f64> = (0..d)
                .map(|j| (0..classes).map(|c| self.head.get(j, c) * dlogits[c]).sum())
                .collect();
            // every token row of dZ is dpooled / tokens
            let dz = Matrix::from_fn(tokens, d, |_, j| dpooled[j] / tokens as f64);
            let dconcat = dz.mul_t(&layer.w_o);

            let mut dq = Matrix::zeros(tokens, d);
            let mut dv = Matrix::zeros(tokens, d);
            for (h, a) in tr.attn.iter().enumerate() {
                let cols = h * dh..(h + 1) * dh;
                let d_out = dconcat.columns(cols.clone());
                let vh = tr.v.columns(cols.clone());
                let kh = tr.k.columns(cols.clone());
                let d_attn = d_out.mul_t(&vh);
                dv.set_columns(h * dh, &a.t_mul(&d_out));
                let d_scores = Matrix::from_fn(tokens, tokens, |i, j| {
                    let row_dot: f64 = (0..tokens).map(|t| a.get(i, t) * d_attn.get(i, t)).sum();
                    a.get(i, j) * (d_attn.get(i, j) - row_dot)
                });
                dq.set_columns(h * dh, &d_scores.mul_unchecked(&kh).scaled(inv_sqrt));
            }
            debug_assert_eq!(tr.q.shape(), dq.shape());
            g_wq = g_wq.add(&x.t_mul(&dq))?;
            g_wv = g_wv.add(&x.t_mul(&dv))?;
        }

        let factor_grads = |adapter: &Option<LoraAdapter>, g_w: &Matrix| match adapter {
            Some(ad) => (
                Some(g_w.mul_t(&ad.b).scaled(ad.scale)),
                Some(ad.a.t_mul(g_w).scaled(ad.scale)),
            ),
            None => (None, None),
        };
        let (a_q, b_q) = factor_grads(&layer.lora_q, &g_wq);
        let (a_v, b_v) = factor_grads(&layer.lora_v, &g_wv);
        Ok(Gradients {
            a_q,
            b_q,
            a_v,
            b_v,
            head: g_head,
            bias: g_bias,
        })
    }

    fn trainable_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        let layer = &mut self.layer;
        for ad in [&mut layer.lora_q, &mut layer.lora_v].into_iter().flatten() {
            out.push(ad.a.data_mut());
            out.push(ad.b.data_mut());
        }
        out.push(self.head.data_mut());
        out.push(&mut self.bias);
        out
    }

    /// Trainable values flattened as `a_q, b_q, a_v, b_v, head, bias`.
    pub fn trainable(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for ad in [&self.layer.lora_q, &self.layer.lora_v].into_iter().flatten() {
            out.extend_from_slice(ad.a.data());
            out.extend_from_slice(ad.b.data());
        }
        out.extend_from_slice(self.head.data());
        out.extend_from_slice(&self.bias);
        out
    }

    pub fn set_trainable(&mut self, values: &[f64]) {
        let mut offset = 0;
        for slice in self.trainable_slices_mut() {
            let n = slice.len();
            slice.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        assert_eq!(offset, values.len(), "trainable vector length mismatch");
    }

    /// Redraws every trainable value from `N(0, std²)`, so that no gradient
    /// path is dead at a zero factor.
    pub fn randomize_trainable(&mut self, std_dev: f64, seed: u64) {
        let mut s = Stream::new(seed);
        for slice in self.trainable_slices_mut() {
            for v in slice.iter_mut() {
                *v = s.normal(0.0, std_dev);
            }
        }
    }
}

/// `x · w0 + scale · (x · a) · b`, never forming the dense update.
fn project(x: &Matrix, w0: &Matrix, adapter: Option<&LoraAdapter>) -> Matrix {
    let base = x.mul_unchecked(w0);
    match adapter {
        Some(ad) => {
            let low = x.mul_unchecked(&ad.a).mul_unchecked(&ad.b).scaled(ad.scale);
            base.add(&low).expect("adapter shapes checked")
        }
        None => base,
    }
}

/// Argmax with ties toward the lowest index.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Worst disagreement between analytic and central-difference gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub max_relative_error: f64,
    pub parameter_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub parameters: usize,
}

/// Relative error `|a - n| / max(|a|, |n|, floor)`.
pub const GRADCHECK_FLOOR: f64 = 1e-7;
pub const GRADCHECK_STEP: f64 = 1e-5;

/// Compares [`ToyClassifier::gradients`] against central finite differences
/// of [`ToyClassifier::loss`] for every trainable scalar.
pub fn gradcheck(model: &ToyClassifier, batch: &[Matrix], labels: &[usize], step: f64) -> Result<GradcheckReport> {
    let analytic = model.gradients(batch, labels)?.flatten();
    let base = model.trainable();
    let mut probe = model.clone();
    let mut report = GradcheckReport {
        max_relative_error: 0.0,
        parameter_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        parameters: base.len(),
    };
    let mut values = base.clone();
    for i in 0..base.len() {
        values[i] = base[i] + step;
        probe.set_trainable(&values);
        let plus = probe.loss(batch, labels)?;
        values[i] = base[i] - step;
        probe.set_trainable(&values);
        let minus = probe.loss(batch, labels)?;
        values[i] = base[i];
        let numeric = (plus - minus) / (2.0 * step);
        let a = analytic[i];
        let denom = libm::fabs(a).max(libm::fabs(numeric)).max(GRADCHECK_FLOOR);
        let rel = libm::fabs(a - numeric) / denom;
        if rel > report.max_relative_error {
            report = GradcheckReport {
                max_relative_error: rel,
                parameter_index: i,
                analytic: a,
                numeric,
                parameters: base.len(),
            };
        }
    }
    Ok(report)
}

/// Token sequences with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDataset {
    pub samples: Vec<Matrix>,
    pub labels: Vec<usize>,
}

impl TokenDataset {
    /// Two linearly separable classes: every token coordinate is `±offset`
    /// (minus for class 0, plus for class 1) plus Gaussian noise. Labels
    /// alternate so both classes are present whenever `n >= 2`.
    pub fn separable(n: usize, tokens: usize, d: usize, offset: f64, noise: f64, seed: u64) -> Self {
        let mut s = Stream::new(seed);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let samples = labels
            .iter()
            .map(|&y| {
                let mean = if y == 1 { offset } else { -offset };
                Matrix::from_fn(tokens, d, |_, _| s.normal(mean, noise))
            })
            .collect();
        Self { samples, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Seeds the minibatch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            epochs: 50,
            patience: 10,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_balanced_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Snapshot with the best validation balanced accuracy (earliest on ties).
    pub model: ToyClassifier,
    pub best_epoch: usize,
    pub best_val_balanced_accuracy: f64,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
}

/// Adam on the trainable tensors with early stopping on validation balanced
/// accuracy. Frozen attention weights are never touched.
pub fn train_toy(model: &ToyClassifier, train: &TokenDataset, val: &TokenDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if train.is_empty() || val.is_empty() {
        return Err(invalid!("training and validation sets must be nonempty"));
    }
    if cfg.batch_size == 0 {
        return Err(invalid!("batch size must be at least 1"));
    }
    let classes = model.classes();
    let mut current = model.clone();
    let mut params = current.trainable();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle = Stream::new(cfg.seed);

    let evaluate = |model: &ToyClassifier| -> Result<f64> {
        let preds = model.predict(&val.samples)?;
        balanced_accuracy(&preds, &val.labels, classes)
    };
    let mut best = TrainOutcome {
        model: current.clone(),
        best_epoch: 0,
        best_val_balanced_accuracy: evaluate(&current)?,
        history: Vec::new(),
        stopped_early: false,
    };
    let mut since_improvement = 0;

    for epoch in 1..=cfg.epochs {
        for i in (1..order.len()).rev() {
            order.swap(i, shuffle.index(i + 1));
        }
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Matrix> = chunk.iter().map(|&i| train.samples[i].clone()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
            loss_sum += current.loss(&batch, &labels)? * chunk.len() as f64;
            let grads = current.gradients(&batch, &labels)?.flatten();
            step += 1;
            let bc1 = 1.0 - libm::pow(cfg.beta1, step as f64);
            let bc2 = 1.0 - libm::pow(cfg.beta2, step as f64);
            for j in 0..params.len() {
                let g = grads[j] + cfg.weight_decay * params[j];
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                params[j] -= cfg.lr * m_hat / (libm::sqrt(v_hat) + cfg.eps);
            }
            current.set_trainable(&params);
        }
        let val_ba = evaluate(&current)?;
        best.history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_balanced_accuracy: val_ba,
        });
        if val_ba > best.best_val_balanced_accuracy {
            best.best_val_balanced_accuracy = val_ba;
            best.best_epoch = epoch;
            best.model = current.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if cfg.patience > 0 && since_improvement >= cfg.patience {
                best.stopped_early = true;
                break;
            }
        }
    }
    Ok(best)
}

/// Renders a training history as CSV with header
/// `epoch,train_loss,val_balanced_accuracy`.
pub fn history_csv(history: &[EpochRecord]) -> String {
    use core::fmt::Write;
    let mut out = String::from("epoch,train_loss,val_balanced_accuracy\n");
    for r in history {
        let _ = writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.val_balanced_accuracy);
    }
    out
}
