//! Word-level explanation of a prediction from any text classifier.

use toxclass::explain::{explain_instance, ExplainConfig, FnClassifier};
use toxclass::neural::sigmoid;

fn main() -> toxclass::Result<()> {
    // a stand-in model: insults push the score up, "please" pulls it down
    let model = FnClassifier {
        names: vec!["insult".to_string()],
        f: |text: &str| {
            let has = |w: &str| f64::from(u8::from(text.split_whitespace().any(|x| x == w)));
            Ok(vec![sigmoid(2.5 * has("idiot") + 1.5 * has("stupid") - 1.0 * has("please") - 1.0)])
        },
    };
    let text = "please stop posting stupid videos you idiot";
    let e = explain_instance(&model, text, 0, &ExplainConfig { k: 4, ..ExplainConfig::binary() })?;
    println!("{text:?}");
    println!("p({}) = {:.3}, surrogate R² = {:.3}, {} samples", e.class, e.probability, e.r2, e.n_samples);
    print!("{}", e.render_bars(30));
    println!("{}", e.to_json()?);
    Ok(())
}
