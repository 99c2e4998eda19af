//! Cleaning raw comments, building a vocabulary and padding to a fixed length.

use toxclass::corpus::{build_vocab, detokenize, preprocess, tokenize, PreprocessConfig};

fn main() -> toxclass::Result<()> {
    let raw = [
        "Check this out http://spam.example.com!!! 😡 you absolute moron",
        "The match was great, the crowd was loud.",
        "www.example.org is where the heathen bait lives :)",
    ];
    let cfg = PreprocessConfig::default().with_stop_words(["the", "was", "is"]);
    let cleaned: Vec<String> = raw.iter().map(|t| preprocess(t, &cfg)).collect();
    for (r, c) in raw.iter().zip(&cleaned) {
        println!("{r:?}\n  -> {c:?}");
    }

    let vocab = build_vocab(&cleaned, 100, 1)?;
    println!("\nvocabulary: {} entries (hash {})", vocab.len(), &vocab.hash()[..12]);

    let seq = tokenize(&cleaned[0], &vocab, 10);
    println!("ids   {:?}", seq.input_ids);
    println!("mask  {:?}", seq.mask);
    println!("words {:?}", detokenize(&seq, &vocab));

    let unseen = tokenize("crowd of morons", &vocab, 10);
    println!("unseen words map to UNK: {:?}", unseen.real_ids());
    Ok(())
}
