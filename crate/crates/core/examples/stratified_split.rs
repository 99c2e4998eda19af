//! Train/validation/test split that keeps each label's share in every fold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toxclass::corpus::{stratified_split, stats, Document, Label, SplitSpec, NUM_LABELS};

fn main() -> toxclass::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rates = [0.16, 0.12, 0.09, 0.09, 0.10, 0.17];
    let docs: Vec<Document> = (0..1000)
        .map(|i| {
            let labels = std::array::from_fn(|j| rng.gen_bool(rates[j]));
            Document::with_labels(format!("c{i}"), format!("comment {i}"), labels)
        })
        .collect();
    print!("{}", stats(&docs).render());

    let spec = SplitSpec { seed: 7, ..SplitSpec::default() };
    let folds = stratified_split(&docs, &spec)?;
    println!("\n{:<8}{:>6}{}", "fold", "docs", Label::ALL.iter().map(|l| format!("{:>10}", l.name())).collect::<String>());
    for (name, fold) in ["train", "val", "test"].iter().zip(folds.as_array()) {
        let counts: [usize; NUM_LABELS] =
            std::array::from_fn(|j| fold.iter().filter(|&&i| docs[i].labels.unwrap()[j]).count());
        println!("{name:<8}{:>6}{}", fold.len(), counts.iter().map(|c| format!("{c:>10}")).collect::<String>());
    }
    Ok(())
}
