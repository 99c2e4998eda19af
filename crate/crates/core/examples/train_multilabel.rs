//! Training the six-label CNN-BiLSTM-attention tagger on a planted-keyword corpus.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toxclass::corpus::{build_vocab, tokenize, Label, NUM_LABELS};
use toxclass::embedding::EmbeddingTable;
use toxclass::metrics::multilabel_report;
use toxclass::models::{decide, train, Example, MultiLabelClassifier, MultiLabelModelConfig, TrainingConfig};

const KEYWORDS: [&str; NUM_LABELS] = ["crud", "bigot", "heathen", "stab", "bait", "moron"];
const FILLER: [&str; 10] = ["the", "day", "city", "news", "people", "game", "watch", "rain", "film", "music"];

fn corpus(n: usize, seed: u64) -> Vec<(String, [bool; NUM_LABELS])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut labels = [false; NUM_LABELS];
            labels[rng.gen_range(0..NUM_LABELS)] = true;
            if rng.gen_bool(0.3) {
                labels[rng.gen_range(0..NUM_LABELS)] = true;
            }
            let mut words: Vec<&str> = (0..rng.gen_range(4..10)).map(|_| *FILLER.choose(&mut rng).unwrap()).collect();
            for (j, &on) in labels.iter().enumerate() {
                if on {
                    let at = rng.gen_range(0..=words.len());
                    words.insert(at, KEYWORDS[j]);
                }
            }
            (words.join(" "), labels)
        })
        .collect()
}

fn main() -> toxclass::Result<()> {
    let docs = corpus(400, 1);
    let texts: Vec<&str> = docs.iter().map(|d| d.0.as_str()).collect();
    let vocab = build_vocab(&texts, 1000, 1)?;
    let cfg = MultiLabelModelConfig { init_seed: 3, ..MultiLabelModelConfig::desk() };
    let examples: Vec<Example> = docs
        .iter()
        .map(|(t, l)| Example { seq: tokenize(t, &vocab, cfg.max_len), target: l.map(|b| f64::from(u8::from(b))).to_vec() })
        .collect();
    let (train_set, val_set) = examples.split_at(320);

    let model = MultiLabelClassifier::new(cfg.clone(), EmbeddingTable::random(vocab.len(), cfg.embedding_dim, 9))?;
    let tc = TrainingConfig { learning_rate: 1e-3, epochs: 40, seed: 4, patience: Some(5), ..TrainingConfig::default() };
    let trained = train(model, train_set, val_set, &tc)?;
    for r in trained.history.epochs.iter().step_by(5) {
        println!("epoch {:>3}  train {:.4}  val {:.4}", r.epoch, r.train_loss, r.val_loss.unwrap_or(f64::NAN));
    }

    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for (ex, (_, labels)) in val_set.iter().zip(&docs[320..]) {
        let chosen = decide(&trained.model.predict_proba(&ex.seq)?, 0.5);
        pred.push(std::array::from_fn(|j| chosen.contains(&Label::ALL[j])));
        gold.push(*labels);
    }
    print!("\nvalidation:\n{}", multilabel_report(&pred, &gold)?.render());
    Ok(())
}
