mod common;

use std::time::Instant;

use toxclass::models::Objective;
use toxclass::neural::{grad_check, Differentiable, DEFAULT_STEP};

#[test]
fn smooth_layers_match_finite_differences() {
    for seed in [1, 2, 3] {
        for (name, report) in common::layer_reports(seed) {
            assert!(report.entries_checked > 0, "{name}");
            assert!(report.max_relative_error < 1e-6, "{name} (seed {seed}): {report:?}");
        }
    }
}

#[test]
fn toy_multilabel_stack_matches_finite_differences() {
    let start = Instant::now();
    let vocab = 15;
    for seed in common::smooth_toy_fixtures(vocab, 2) {
        let examples = common::toy_examples(vocab, seed);
        let mut obj = Objective::new(common::toy_multilabel(vocab), &examples, 1e-3);
        let report = grad_check(&mut obj, DEFAULT_STEP);
        assert!(report.max_relative_error < 1e-4, "fixture {seed}: {report:?}");
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn corrupted_gradient_is_caught() {
    struct Broken(common::LayerProbe<toxclass::neural::Dense>);
    impl Differentiable for Broken {
        fn tensors_mut(&mut self) -> Vec<&mut ndarray::Array2<f64>> {
            self.0.tensors_mut()
        }
        fn loss_and_grad(&mut self) -> (f64, Vec<ndarray::Array2<f64>>) {
            let (l, mut g) = self.0.loss_and_grad();
            g[0][[1, 2]] *= 1.5;
            (l, g)
        }
    }
    let report = grad_check(&mut Broken(common::dense_probe(9)), DEFAULT_STEP);
    assert!(report.max_relative_error > 1e-2);
    assert_eq!(report.worst, (0, 1 * 5 + 2));
}
