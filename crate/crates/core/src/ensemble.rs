//! Balanced accuracy, weighted probability blending and Caruana-style
//! ensemble selection.
//!
//! Greedy selection keeps a bag (multiset) of model indices. Each round every
//! candidate is tried as an addition, the blend with weights
//! `multiplicity / bag size` is scored by balanced accuracy, and the best
//! candidate (lowest index on ties) joins the bag. The weights returned are
//! those of the best bag seen in any round (earliest on ties), so extra
//! rounds never lower the fit score.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lora::argmax;

pub const DEFAULT_ITERATIONS: usize = 25;
/// Rows summing to 1 within this tolerance are renormalized on load.
pub const ROW_SUM_TOLERANCE: f64 = 1e-3;
/// Domain assigned to samples with an empty domain tag.
pub const UNKNOWN_DOMAIN: &str = "unknown";

/// One model's class probabilities, one row per sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    model_name: String,
    ids: Vec<String>,
    classes: usize,
    probs: Vec<f64>,
}

impl PredictionMatrix {
    /// Validates `probs` (row-major, `ids.len() x classes`). Rows whose sum is
    /// within [`ROW_SUM_TOLERANCE`] of 1 are renormalized; anything else,
    /// including entries outside `[0, 1]`, is rejected.
    pub fn new(model_name: impl Into<String>, ids: Vec<String>, classes: usize, mut probs: Vec<f64>) -> Result<Self> {
        let model_name = model_name.into();
        if classes < 2 {
            return Err(invalid!("{model_name}: need at least two classes"));
        }
        if probs.len() != ids.len() * classes {
            return Err(invalid!(
                "{model_name}: {} probabilities for {} ids x {classes} classes",
                probs.len(),
                ids.len()
            ));
        }
        check_unique(&ids, &model_name)?;
        for (row, id) in probs.chunks_exact_mut(classes).zip(&ids) {
            if row.iter().any(|p| !(-ROW_SUM_TOLERANCE..=1.0 + ROW_SUM_TOLERANCE).contains(p)) {
                return Err(invalid!("{model_name}: row {id:?} has entries outside [0, 1]"));
            }
            let sum: f64 = row.iter().sum();
            if libm::fabs(sum - 1.0) > ROW_SUM_TOLERANCE {
                return Err(invalid!("{model_name}: row {id:?} sums to {sum}"));
            }
            for p in row.iter_mut() {
                *p = (*p / sum).clamp(0.0, 1.0);
            }
        }
        Ok(Self {
            model_name,
            ids,
            classes,
            probs,
        })
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.classes..(i + 1) * self.classes]
    }

    /// Argmax labels, ties toward the lowest class index.
    pub fn labels(&self) -> Vec<usize> {
        self.probs.chunks_exact(self.classes).map(argmax).collect()
    }

    /// Rows reordered to follow `order`, which must contain exactly this
    /// matrix's ids.
    pub fn aligned_to(&self, order: &[String]) -> Result<Vec<f64>> {
        if order.len() != self.ids.len() {
            return Err(Error::Alignment(alloc::format!(
                "{} has {} rows, expected {}",
                self.model_name,
                self.ids.len(),
                order.len()
            )));
        }
        let index = id_index(&self.ids);
        let mut out = Vec::with_capacity(self.probs.len());
        for id in order {
            let &i = index.get(id.as_str()).ok_or_else(|| {
                Error::Alignment(alloc::format!("{} has no row for id {id:?}", self.model_name))
            })?;
            out.extend_from_slice(self.row(i));
        }
        Ok(out)
    }
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    if id_index(ids).len() != ids.len() {
        return Err(invalid!("{what}: duplicate ids"));
    }
    Ok(())
}

fn id_index(ids: &[String]) -> BTreeMap<&str, usize> {
    ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
}

/// Ground truth for a labeled sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    pub domains: Vec<String>,
    pub classes: usize,
}

impl LabeledSet {
    /// Empty domain tags become [`UNKNOWN_DOMAIN`].
    pub fn new(ids: Vec<String>, labels: Vec<usize>, domains: Vec<String>, classes: usize) -> Result<Self> {
        if ids.len() != labels.len() || ids.len() != domains.len() {
            return Err(invalid!("ids, labels and domains differ in length"));
        }
        check_unique(&ids, "labels")?;
        if let Some(y) = labels.iter().find(|&&y| y >= classes) {
            return Err(invalid!("label {y} out of range for {classes} classes"));
        }
        let domains = domains
            .into_iter()
            .map(|d| if d.is_empty() { UNKNOWN_DOMAIN.to_string() } else { d })
            .collect();
        Ok(Self {
            ids,
            labels,
            domains,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Mean per-class recall. Every class in `0..classes` needs support.
pub fn balanced_accuracy(pred: &[usize], truth: &[usize], classes: usize) -> Result<f64> {
    let confusion = confusion_matrix(pred, truth, classes)?;
    let recalls = class_recalls(&confusion);
    if let Some(c) = recalls.iter().position(Option::is_none) {
        return Err(Error::DegenerateLabels(alloc::format!("class {c} has no samples")));
    }
    Ok(recalls.iter().flatten().sum::<f64>() / classes as f64)
}

/// `confusion[true][predicted]` counts.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    if pred.len() != truth.len() {
        return Err(invalid!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        ));
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= classes || t >= classes {
            return Err(invalid!("class index out of range for {classes} classes"));
        }
        confusion[t][p] += 1;
    }
    Ok(confusion)
}

fn class_recalls(confusion: &[Vec<usize>]) -> Vec<Option<f64>> {
    confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let support: usize = row.iter().sum();
            (support > 0).then(|| row[c] as f64 / support as f64)
        })
        .collect()
}

/// Nonnegative model weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    pub model_names: Vec<String>,
    pub weights: Vec<f64>,
}

impl EnsembleWeights {
    pub fn new(model_names: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if model_names.len() != weights.len() || weights.is_empty() {
            return Err(invalid!(
                "{} model names for {} weights",
                model_names.len(),
                weights.len()
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid!("ensemble weights must be finite and nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if libm::fabs(sum - 1.0) > 1e-9 {
            return Err(invalid!("ensemble weights sum to {sum}, expected 1"));
        }
        Ok(Self { model_names, weights })
    }

    /// Uniform weight on the single model `index` out of `names`.
    pub fn one_hot(model_names: Vec<String>, index: usize) -> Result<Self> {
        let mut weights = vec![0.0; model_names.len()];
        *weights
            .get_mut(index)
            .ok_or_else(|| invalid!("model index {index} out of range"))? = 1.0;
        Self::new(model_names, weights)
    }
}

/// Blended probabilities and their argmax labels, in the first model's id order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub ids: Vec<String>,
    pub classes: usize,
    pub probs: Vec<f64>,
    pub labels: Vec<usize>,
}

impl EnsemblePrediction {
    pub fn into_matrix(self, model_name: impl Into<String>) -> Result<PredictionMatrix> {
        PredictionMatrix::new(model_name, self.ids, self.classes, self.probs)
    }
}

/// `sum_i w_i P_i` over row-major matrices sharing one row order.
fn blend(aligned: &[Vec<f64>], weights: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (probs, &w) in aligned.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(probs) {
            *o += w * p;
        }
    }
    out
}

fn check_library(preds: &[PredictionMatrix]) -> Result<usize> {
    let first = preds.first().ok_or_else(|| invalid!("no prediction matrices given"))?;
    if let Some(p) = preds.iter().find(|p| p.classes != first.classes) {
        return Err(invalid!(
            "{} has {} classes, {} has {}",
            p.model_name,
            p.classes,
            first.model_name,
            first.classes
        ));
    }
    Ok(first.classes)
}

/// Weighted blend of the model library; labels are the argmax with ties
/// toward the lowest class index.
pub fn ensemble_predict(preds: &[PredictionMatrix], weights: &EnsembleWeights) -> Result<EnsemblePrediction> {
    let classes = check_library(preds)?;
    if weights.weights.len() != preds.len() {
        return Err(invalid!(
            "{} weights for {} models",
            weights.weights.len(),
            preds.len()
        ));
    }
    let ids = preds[0].ids.clone();
    let aligned = preds.iter().map(|p| p.aligned_to(&ids)).collect::<Result<Vec<_>>>()?;
    let probs = blend(&aligned, &weights.weights, ids.len() * classes);
    let labels = probs.chunks_exact(classes).map(argmax).collect();
    Ok(EnsemblePrediction {
        ids,
        classes,
        probs,
        labels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    pub chosen: String,
    pub ba: f64,
}

/// Result of [`fit_greedy`]; serializes to the weights JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyFit {
    pub model_names: Vec<String>,
    pub weights: Vec<f64>,
    pub fit_balanced_accuracy: f64,
    pub iterations: usize,
    pub trace: Vec<RoundTrace>,
}

impl GreedyFit {
    pub fn ensemble_weights(&self) -> Result<EnsembleWeights> {
        EnsembleWeights::new(self.model_names.clone(), self.weights.clone())
    }
}

/// Greedy forward selection with replacement maximizing balanced accuracy.
pub fn fit_greedy(preds: &[PredictionMatrix], truth: &LabeledSet, iterations: usize) -> Result<GreedyFit> {
    let classes = check_library(preds)?;
    if iterations == 0 {
        return Err(invalid!("iterations must be at least 1"));
    }
    if classes != truth.classes {
        return Err(invalid!(
            "predictions have {classes} classes, labels have {}",
            truth.classes
        ));
    }
    let aligned = preds.iter().map(|p| p.aligned_to(&truth.ids)).collect::<Result<Vec<_>>>()?;
    let len = truth.len() * classes;
    let m = preds.len();
    let score = |weights: &[f64]| -> Result<f64> {
        let probs = blend(&aligned, weights, len);
        let labels: Vec<usize> = probs.chunks_exact(classes).map(argmax).collect();
        balanced_accuracy(&labels, &truth.labels, classes)
    };

    let mut counts = vec![0usize; m];
    let mut best_counts = counts.clone();
    let mut best_ba = f64::NEG_INFINITY;
    let mut trace = Vec::with_capacity(iterations);
    for round in 1..=iterations {
        let mut chosen = 0;
        let mut chosen_ba = f64::NEG_INFINITY;
        for candidate in 0..m {
            counts[candidate] += 1;
            let ba = score(&normalize(&counts))?;
            counts[candidate] -= 1;
            if ba > chosen_ba {
                chosen_ba = ba;
                chosen = candidate;
            }
        }
        counts[chosen] += 1;
        trace.push(RoundTrace {
            round,
            chosen: preds[chosen].model_name.clone(),
            ba: chosen_ba,
        });
        if chosen_ba > best_ba {
            best_ba = chosen_ba;
            best_counts.clone_from(&counts);
        }
    }
    Ok(GreedyFit {
        model_names: preds.iter().map(|p| p.model_name.clone()).collect(),
        weights: normalize(&best_counts),
        fit_balanced_accuracy: best_ba,
        iterations,
        trace,
    })
}

fn normalize(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Balanced accuracy over the pooled sample set (OBA).
    pub overall_ba: f64,
    /// Per-domain balanced accuracy over the classes present in that domain.
    pub per_domain_ba: BTreeMap<String, f64>,
    /// Unweighted mean of `per_domain_ba`, when domains were requested.
    pub domain_macro_ba: Option<f64>,
    pub per_class_recall: Vec<f64>,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

/// Scores labels given by id against `truth`.
///
/// Every prediction id must be labeled and every labeled id predicted.
pub fn evaluate_labels(ids: &[String], labels: &[usize], truth: &LabeledSet, by_domain: bool) -> Result<EvalReport> {
    if ids.len() != labels.len() {
        return Err(invalid!("{} ids for {} labels", ids.len(), labels.len()));
    }
    let truth_index = id_index(&truth.ids);
    let mut pred = vec![usize::MAX; truth.len()];
    for (id, &label) in ids.iter().zip(labels) {
        let &i = truth_index
            .get(id.as_str())
            .ok_or_else(|| Error::Alignment(alloc::format!("prediction for unknown id {id:?}")))?;
        pred[i] = label;
    }
    if let Some(i) = pred.iter().position(|&p| p == usize::MAX) {
        return Err(Error::Alignment(alloc::format!("no prediction for id {:?}", truth.ids[i])));
    }

    let overall_ba = balanced_accuracy(&pred, &truth.labels, truth.classes)?;
    let confusion = confusion_matrix(&pred, &truth.labels, truth.classes)?;
    let per_class_recall = class_recalls(&confusion).into_iter().map(|r| r.unwrap_or(0.0)).collect();

    let mut per_domain_ba = BTreeMap::new();
    let mut domain_macro_ba = None;
    if by_domain {
        let mut members: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for i in 0..truth.len() {
            let entry = members.entry(truth.domains[i].as_str()).or_default();
            entry.0.push(pred[i]);
            entry.1.push(truth.labels[i]);
        }
        for (domain, (p, t)) in members {
            let recalls = class_recalls(&confusion_matrix(&p, &t, truth.classes)?);
            let present: Vec<f64> = recalls.into_iter().flatten().collect();
            per_domain_ba.insert(domain.to_string(), present.iter().sum::<f64>() / present.len() as f64);
        }
        domain_macro_ba = Some(per_domain_ba.values().sum::<f64>() / per_domain_ba.len() as f64);
    }
    Ok(EvalReport {
        overall_ba,
        per_domain_ba,
        domain_macro_ba,
        per_class_recall,
        confusion,
    })
}

/// [`evaluate_labels`] on the argmax labels of a probability matrix.
pub fn evaluate(pred: &PredictionMatrix, truth: &LabeledSet, by_domain: bool) -> Result<EvalReport> {
    if pred.classes != truth.classes {
        return Err(invalid!(
            "predictions have {} classes, labels have {}",
            pred.classes,
            truth.classes
        ));
    }
    evaluate_labels(&pred.ids, &pred.labels(), truth, by_domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    fn matrix(name: &str, rows: &[[f64; 2]]) -> PredictionMatrix {
        PredictionMatrix::new(name, ids(rows.len()), 2, rows.iter().flatten().copied().collect()).unwrap()
    }

    fn truth(labels: &[usize]) -> LabeledSet {
        LabeledSet::new(ids(labels.len()), labels.to_vec(), vec![String::new(); labels.len()], 2).unwrap()
    }

    #[test]
    fn balanced_accuracy_examples() {
        assert_eq!(balanced_accuracy(&[0, 1, 1, 1], &[0, 0, 1, 1], 2).unwrap(), 0.75);
        assert_eq!(balanced_accuracy(&[0, 1, 2], &[0, 1, 2], 3).unwrap(), 1.0);
        let ba = balanced_accuracy(&[0, 0, 0, 0], &[0, 0, 1, 2], 3).unwrap();
        assert!((ba - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            balanced_accuracy(&[0, 0], &[0, 0], 2),
            Err(Error::DegenerateLabels(_))
        ));
        assert!(balanced_accuracy(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn prediction_rows_are_validated() {
        let renorm = PredictionMatrix::new("m", ids(1), 2, vec![0.3004, 0.7]).unwrap();
        assert!((renorm.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(PredictionMatrix::new("m", ids(1), 2, vec![0.5, 0.6]).is_err());
        assert!(PredictionMatrix::new("m", ids(1), 2, vec![1.5, -0.5]).is_err());
        assert!(PredictionMatrix::new("m", vec!["a".into(), "a".into()], 2, vec![0.5; 4]).is_err());
    }

    #[test]
    fn predict_examples() {
        let a = matrix("a", &[[0.8, 0.2], [0.5, 0.5]]);
        let b = matrix("b", &[[0.4, 0.6], [0.5, 0.5]]);
        let single = ensemble_predict(&[a.clone()], &EnsembleWeights::new(vec!["a".into()], vec![1.0]).unwrap()).unwrap();
        assert_eq!(single.probs, a.probs());
        let w = EnsembleWeights::new(vec!["a".into(), "b".into()], vec![0.5, 0.5]).unwrap();
        let both = ensemble_predict(&[a.clone(), b.clone()], &w).unwrap();
        assert!((both.probs[0] - 0.6).abs() < 1e-15 && (both.probs[1] - 0.4).abs() < 1e-15);
        assert_eq!(both.labels, vec![0, 0]);
        let wrong = EnsembleWeights::new(vec!["a".into()], vec![1.0]).unwrap();
        assert!(matches!(ensemble_predict(&[a, b], &wrong), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn predict_aligns_by_id() {
        let a = matrix("a", &[[0.9, 0.1], [0.2, 0.8]]);
        let b = PredictionMatrix::new("b", vec!["s1".into(), "s0".into()], 2, vec![0.2, 0.8, 0.9, 0.1]).unwrap();
        let w = EnsembleWeights::new(vec!["a".into(), "b".into()], vec![0.5, 0.5]).unwrap();
        let out = ensemble_predict(&[a, b], &w).unwrap();
        assert_eq!(out.labels, vec![0, 1]);
        let c = PredictionMatrix::new("c", vec!["s0".into(), "zz".into()], 2, vec![0.5; 4]).unwrap();
        let w = EnsembleWeights::new(vec!["a".into(), "c".into()], vec![0.5, 0.5]).unwrap();
        let a = matrix("a", &[[0.9, 0.1], [0.2, 0.8]]);
        assert!(matches!(ensemble_predict(&[a, c], &w), Err(Error::Alignment(_))));
    }

    #[test]
    fn weights_validation() {
        assert!(EnsembleWeights::new(vec!["a".into()], vec![0.9]).is_err());
        assert!(EnsembleWeights::new(vec!["a".into(), "b".into()], vec![1.5, -0.5]).is_err());
        assert_eq!(
            EnsembleWeights::one_hot(vec!["a".into(), "b".into()], 1).unwrap().weights,
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn single_model_fit() {
        let a = matrix("a", &[[0.8, 0.2], [0.3, 0.7], [0.6, 0.4]]);
        let fit = fit_greedy(&[a], &truth(&[0, 1, 1]), 7).unwrap();
        assert_eq!(fit.weights, vec![1.0]);
        assert_eq!(fit.trace.len(), 7);
    }

    #[test]
    fn dominant_model_wins() {
        let labels = [0, 0, 1, 1, 1];
        let weak = matrix("weak", &[[0.4, 0.6], [0.7, 0.3], [0.6, 0.4], [0.3, 0.7], [0.8, 0.2]]);
        let perfect = matrix("perfect", &[[0.9, 0.1], [0.6, 0.4], [0.2, 0.8], [0.45, 0.55], [0.1, 0.9]]);
        let fit = fit_greedy(&[weak, perfect], &truth(&labels), 10).unwrap();
        assert_eq!(fit.trace[0].chosen, "perfect");
        assert_eq!(fit.weights, vec![0.0, 1.0]);
        assert_eq!(fit.fit_balanced_accuracy, 1.0);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_greedy(&[], &truth(&[0, 1]), 3), Err(Error::InvalidInput(_))));
        let a = matrix("a", &[[0.8, 0.2], [0.3, 0.7]]);
        assert!(matches!(fit_greedy(&[a], &truth(&[0, 0]), 3), Err(Error::DegenerateLabels(_))));
    }

    #[test]
    fn evaluate_single_domain() {
        let set = LabeledSet::new(ids(4), vec![0, 0, 1, 1], vec!["d0".into(); 4], 2).unwrap();
        let report = evaluate_labels(&ids(4), &[0, 1, 1, 1], &set, true).unwrap();
        assert_eq!(report.per_domain_ba.len(), 1);
        assert_eq!(report.per_domain_ba["d0"], report.overall_ba);
        assert_eq!(report.confusion, vec![vec![1, 1], vec![0, 2]]);
        assert_eq!(report.per_class_recall, vec![0.5, 1.0]);
    }

    #[test]
    fn empty_domain_is_unknown() {
        let set = truth(&[0, 1]);
        let report = evaluate_labels(&ids(2), &[0, 1], &set, true).unwrap();
        assert_eq!(report.per_domain_ba.keys().collect::<Vec<_>>(), vec![UNKNOWN_DOMAIN]);
    }

    #[test]
    fn pooled_oba_differs_from_domain_mean() {
        // d0: one sample per class, both right (BA 1.0).
        // d1: the class-0 sample right, all three class-1 samples wrong (BA 0.5).
        let domains = ["d0", "d0", "d1", "d1", "d1", "d1"];
        let labels = vec![0, 1, 0, 1, 1, 1];
        let preds = [0, 1, 0, 0, 0, 0];
        let set = LabeledSet::new(ids(6), labels, domains.iter().map(|d| d.to_string()).collect(), 2).unwrap();
        let report = evaluate_labels(&ids(6), &preds, &set, true).unwrap();
        assert_eq!(report.per_domain_ba["d0"], 1.0);
        assert_eq!(report.per_domain_ba["d1"], 0.5);
        // pooled: class-0 recall 2/2, class-1 recall 1/4
        assert_eq!(report.overall_ba, 0.625);
        assert_eq!(report.domain_macro_ba, Some(0.75));
    }

    #[test]
    fn evaluate_alignment_errors() {
        let set = truth(&[0, 1]);
        assert!(matches!(
            evaluate_labels(&["s0".into(), "nope".into()], &[0, 1], &set, false),
            Err(Error::Alignment(_))
        ));
        assert!(matches!(
            evaluate_labels(&["s0".into()], &[0], &set, false),
            Err(Error::Alignment(_))
        ));
    }
}
