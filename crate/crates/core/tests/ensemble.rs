use mitoforge_core::ensemble::{
    balanced_accuracy, ensemble_predict, fit_greedy, EnsembleWeights, LabeledSet, PredictionMatrix,
};
use mitoforge_core::rng::Stream;
use proptest::prelude::*;

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

/// Labels with both classes present, and `m` models of varying skill.
fn instance(m: usize, n: usize, seed: u64) -> (Vec<PredictionMatrix>, LabeledSet) {
    let mut s = Stream::new(seed);
    let mut labels: Vec<usize> = (0..n).map(|_| usize::from(s.next_unit() < 0.35)).collect();
    labels[0] = 0;
    labels[1] = 1;
    let truth = LabeledSet::new(ids(n), labels.clone(), vec![String::new(); n], 2).unwrap();
    let models = (0..m)
        .map(|j| {
            let skill = s.uniform(0.2, 1.5);
            let bias = s.uniform(-0.8, 0.8);
            let probs: Vec<f64> = labels
                .iter()
                .flat_map(|&y| {
                    let sign = if y == 1 { 1.0 } else { -1.0 };
                    let logit = skill * sign + bias + s.normal(0.0, 1.0);
                    let p1 = 1.0 / (1.0 + (-logit).exp());
                    [1.0 - p1, p1]
                })
                .collect();
            PredictionMatrix::new(format!("m{j}"), ids(n), 2, probs).unwrap()
        })
        .collect();
    (models, truth)
}

fn single_ba(model: &PredictionMatrix, truth: &LabeledSet) -> f64 {
    balanced_accuracy(&model.labels(), &truth.labels, 2).unwrap()
}

fn blend_ba(models: &[PredictionMatrix], weights: &[f64], truth: &LabeledSet) -> f64 {
    let names = models.iter().map(|m| m.model_name().to_string()).collect();
    let w = EnsembleWeights::new(names, weights.to_vec()).unwrap();
    let pred = ensemble_predict(models, &w).unwrap();
    balanced_accuracy(&pred.labels, &truth.labels, 2).unwrap()
}

/// Best balanced accuracy over the 0.05-step grid of the simplex.
fn grid_optimum(models: &[PredictionMatrix], truth: &LabeledSet) -> f64 {
    let steps = 20usize;
    let mut best = f64::NEG_INFINITY;
    let m = models.len();
    let mut visit = |w: Vec<f64>| best = best.max(blend_ba(models, &w, truth));
    match m {
        1 => visit(vec![1.0]),
        2 => (0..=steps).for_each(|i| visit(vec![i as f64 / 20.0, (steps - i) as f64 / 20.0])),
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let k = steps - i - j;
                    visit(vec![i as f64 / 20.0, j as f64 / 20.0, k as f64 / 20.0]);
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

#[test]
fn greedy_is_close_to_grid_optimum_on_fixed_instance() {
    let (models, truth) = instance(3, 12, 7);
    let fit = fit_greedy(&models, &truth, 25).unwrap();
    for m in &models {
        assert!(fit.fit_balanced_accuracy >= single_ba(m, &truth));
    }
    let grid = grid_optimum(&models, &truth);
    assert!(fit.fit_balanced_accuracy >= grid - 0.02, "greedy {} grid {grid}", fit.fit_balanced_accuracy);
}

#[test]
fn fit_score_equals_blend_score_of_returned_weights() {
    for seed in 0..30 {
        let (models, truth) = instance(4, 40, seed);
        let fit = fit_greedy(&models, &truth, 25).unwrap();
        assert_eq!(fit.fit_balanced_accuracy, blend_ba(&models, &fit.weights, &truth));
        assert_eq!(fit.trace.len(), 25);
        let best_trace = fit.trace.iter().map(|t| t.ba).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best_trace, fit.fit_balanced_accuracy);
    }
}

#[test]
fn permutation_equivariance_on_tie_free_instances() {
    let mut checked = 0;
    for seed in 0..200 {
        let (models, truth) = instance(3, 50, 1000 + seed);
        let fit = fit_greedy(&models, &truth, 6).unwrap();
        // replay the trace and skip instances where any round had a tie
        let mut counts = [0usize; 3];
        let mut tie = false;
        for round in &fit.trace {
            let scores: Vec<f64> = (0..3)
                .map(|c| {
                    let mut trial = counts;
                    trial[c] += 1;
                    let total: usize = trial.iter().sum();
                    let w: Vec<f64> = trial.iter().map(|&t| t as f64 / total as f64).collect();
                    blend_ba(&models, &w, &truth)
                })
                .collect();
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            tie |= scores.iter().filter(|&&s| s == max).count() > 1;
            let chosen: usize = round.chosen[1..].parse().unwrap();
            counts[chosen] += 1;
        }
        if tie {
            continue;
        }
        checked += 1;
        let perm = [2usize, 0, 1];
        let permuted: Vec<_> = perm.iter().map(|&i| models[i].clone()).collect();
        let pfit = fit_greedy(&permuted, &truth, 6).unwrap();
        for (slot, &orig) in perm.iter().enumerate() {
            assert_eq!(pfit.weights[slot], fit.weights[orig], "seed {seed}");
        }
    }
    assert!(checked >= 10, "only {checked} tie-free instances");
}

#[test]
fn concentrated_weights_reproduce_model_labels() {
    let (models, _) = instance(3, 30, 5);
    let names: Vec<String> = models.iter().map(|m| m.model_name().to_string()).collect();
    for i in 0..3 {
        let w = EnsembleWeights::one_hot(names.clone(), i).unwrap();
        assert_eq!(ensemble_predict(&models, &w).unwrap().labels, models[i].labels());
    }
}

#[test]
fn fitting_is_deterministic() {
    let (models, truth) = instance(4, 33, 12);
    assert_eq!(fit_greedy(&models, &truth, 25).unwrap(), fit_greedy(&models, &truth, 25).unwrap());
}

/// Independent per-class tally.
fn brute_force_ba(pred: &[usize], truth: &[usize], classes: usize) -> f64 {
    let mut sum = 0.0;
    for c in 0..classes {
        let members: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == c).collect();
        let hits = members.iter().filter(|&&i| pred[i] == c).count();
        sum += hits as f64 / members.len() as f64;
    }
    sum / classes as f64
}

proptest! {
    #[test]
    fn balanced_accuracy_matches_tally(
        classes in 2usize..=4,
        extra in proptest::collection::vec((0usize..4, 0usize..4), 0..26),
    ) {
        let mut truth: Vec<usize> = (0..classes).collect();
        let mut pred: Vec<usize> = (0..classes).rev().collect();
        for (t, p) in extra {
            truth.push(t % classes);
            pred.push(p % classes);
        }
        let got = balanced_accuracy(&pred, &truth, classes).unwrap();
        prop_assert!((got - brute_force_ba(&pred, &truth, classes)).abs() < 1e-12);
    }

    #[test]
    fn greedy_weights_are_on_simplex_and_dominate(m in 1usize..=4, n in 10usize..=50, seed in any::<u64>()) {
        let (models, truth) = instance(m, n, seed);
        let fit = fit_greedy(&models, &truth, 25).unwrap();
        prop_assert!(fit.weights.iter().all(|&w| w >= 0.0));
        prop_assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let best_single = models.iter().map(|mm| single_ba(mm, &truth)).fold(0.0, f64::max);
        prop_assert!(fit.fit_balanced_accuracy >= best_single);
    }
}
