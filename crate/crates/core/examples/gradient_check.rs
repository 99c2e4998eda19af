//! Central finite differences against backprop for a small multi-label stack.

use toxclass::corpus::TokenSequence;
use toxclass::embedding::EmbeddingTable;
use toxclass::models::{ConvSpec, Example, MultiLabelClassifier, MultiLabelModelConfig, Objective};
use toxclass::neural::{grad_check, DEFAULT_STEP};

fn main() -> toxclass::Result<()> {
    let cfg = MultiLabelModelConfig {
        embedding_dim: 8,
        max_len: 20,
        conv: vec![ConvSpec { filters: 4, kernel: 4 }, ConvSpec { filters: 3, kernel: 3 }, ConvSpec { filters: 2, kernel: 2 }],
        bilstm_units: 3,
        init_seed: 11,
        ..MultiLabelModelConfig::full()
    };
    println!("sequence lengths through the stack: {:?}", cfg.shape_trace()?);
    let model = MultiLabelClassifier::new(cfg, EmbeddingTable::random(15, 8, 5))?;
    println!("parameters: {}", MultiLabelClassifier::expected_parameter_count(&model.config, 15));

    let examples = vec![
        Example { seq: TokenSequence::from_ids(&(1..15).chain(1..7).collect::<Vec<_>>(), 20), target: vec![1., 0., 0., 1., 0., 0.] },
        Example { seq: TokenSequence::from_ids(&[3, 9, 4, 12, 2, 8, 5, 7, 11, 6, 13, 10, 14], 20), target: vec![0., 1., 1., 0., 0., 1.] },
    ];
    let mut objective = Objective::new(model, &examples, 1e-3);
    let report = grad_check(&mut objective, DEFAULT_STEP);
    println!("checked {} entries", report.entries_checked);
    println!(
        "max relative error {:.2e} at tensor {} element {} (analytic {:.6e}, numeric {:.6e})",
        report.max_relative_error, report.worst.0, report.worst.1, report.analytic_at_worst, report.numeric_at_worst
    );
    Ok(())
}
