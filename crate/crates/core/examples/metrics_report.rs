//! Per-class and weighted metrics, subset accuracy, ROC curve and AUC.

use toxclass::corpus::LabelVector;
use toxclass::metrics::{binary_report, multilabel_report, roc_auc};

fn main() -> toxclass::Result<()> {
    let gold: Vec<LabelVector> = vec![
        [true, false, false, false, false, true],
        [false, true, false, false, false, false],
        [false, false, true, false, false, false],
        [true, false, false, true, false, true],
        [false, false, false, false, true, false],
        [false, true, false, false, false, true],
    ];
    let pred: Vec<LabelVector> = vec![
        [true, false, false, false, false, true],
        [false, true, false, false, false, true],
        [false, false, true, false, false, false],
        [true, false, false, false, false, true],
        [false, false, false, false, true, false],
        [false, false, false, false, false, true],
    ];
    let report = multilabel_report(&pred, &gold)?;
    print!("{}", report.render());
    println!("\nconfusion counts:\n{}", report.confusion_csv()?);

    let scores = [0.91, 0.85, 0.62, 0.58, 0.40, 0.33, 0.20, 0.05];
    let toxic = [true, true, false, true, false, true, false, false];
    let pred: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
    print!("{}", binary_report(&pred, &toxic)?.render());
    let roc = roc_auc(&scores, &toxic)?;
    println!("\nAUC {:.4}\n{}", roc.auc, roc.to_csv());
    Ok(())
}
