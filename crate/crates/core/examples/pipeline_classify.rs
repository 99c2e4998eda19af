//! Two-stage routing: a toxic/non-toxic gate, then the six-label tagger.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toxclass::corpus::{build_vocab, preprocess, PreprocessConfig, NUM_LABELS};
use toxclass::embedding::EmbeddingTable;
use toxclass::models::{
    train, BinaryClassifier, BinaryModelConfig, Decision, Example, MultiLabelClassifier, MultiLabelModelConfig,
    TextEncoder, TrainingConfig, TwoStage,
};

const KEYWORDS: [&str; NUM_LABELS] = ["crud", "bigot", "heathen", "stab", "bait", "moron"];
const FILLER: [&str; 10] = ["the", "day", "city", "news", "people", "game", "watch", "rain", "film", "music"];

fn main() -> toxclass::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let docs: Vec<(String, [bool; NUM_LABELS])> = (0..400)
        .map(|_| {
            let mut labels = [false; NUM_LABELS];
            if rng.gen_bool(0.5) {
                labels[rng.gen_range(0..NUM_LABELS)] = true;
            }
            let mut words: Vec<&str> = (0..rng.gen_range(4..9)).map(|_| *FILLER.choose(&mut rng).unwrap()).collect();
            for (j, &on) in labels.iter().enumerate() {
                if on {
                    let at = rng.gen_range(0..=words.len());
                    words.insert(at, KEYWORDS[j]);
                }
            }
            (words.join(" "), labels)
        })
        .collect();

    let pre = PreprocessConfig::default();
    let cleaned: Vec<String> = docs.iter().map(|d| preprocess(&d.0, &pre)).collect();
    let encoder = TextEncoder::new(pre, build_vocab(&cleaned, 1000, 1)?);
    let v = encoder.vocab.len();
    let tc = TrainingConfig { learning_rate: 1e-3, epochs: 60, patience: None, ..TrainingConfig::default() };

    let bcfg = BinaryModelConfig { init_seed: 1, ..BinaryModelConfig::desk() };
    let bin_examples: Vec<Example> = cleaned
        .iter()
        .zip(&docs)
        .map(|(t, (_, l))| Example { seq: encoder.encode(t, bcfg.max_len), target: vec![f64::from(u8::from(l.contains(&true)))] })
        .collect();
    let binary = BinaryClassifier::new(bcfg.clone(), EmbeddingTable::random(v, bcfg.embedding_dim, 5))?;
    let binary = train(binary, &bin_examples, &[], &tc)?.model;

    let mcfg = MultiLabelModelConfig { init_seed: 2, ..MultiLabelModelConfig::desk() };
    let ml_examples: Vec<Example> = cleaned
        .iter()
        .zip(&docs)
        .filter(|(_, (_, l))| l.contains(&true))
        .map(|(t, (_, l))| Example { seq: encoder.encode(t, mcfg.max_len), target: l.map(|b| f64::from(u8::from(b))).to_vec() })
        .collect();
    let multilabel = MultiLabelClassifier::new(mcfg.clone(), EmbeddingTable::random(v, mcfg.embedding_dim, 6))?;
    let multilabel = train(multilabel, &ml_examples, &[], &tc)?.model;

    let pipeline = TwoStage::new(encoder, binary, multilabel)?;
    for text in ["the film today was good", "watch the moron in the rain", "that bigot will stab people", "news!"] {
        let out = pipeline.classify(text)?;
        let labels = match &out.decision {
            Decision::NonToxic => "Non-toxic".to_string(),
            Decision::Toxic(l) => l.iter().map(|x| x.name()).collect::<Vec<_>>().join(", "),
        };
        println!("{text:<32} p_toxic {:.3}  {labels}", out.p_toxic);
    }
    Ok(())
}
