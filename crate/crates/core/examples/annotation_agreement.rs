//! Agreement between two annotators and their accuracy on expert-labelled items.

use toxclass::metrics::{cohens_kappa, trustworthiness};

fn main() -> toxclass::Result<()> {
    // 1 = toxic, 0 = not toxic
    let first = [1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 0];
    let second = [1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 1, 0];
    let expert = [1, 1, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0];
    println!("kappa between annotators: {:.4}", cohens_kappa(&first, &second)?);
    println!("first annotator trustworthiness:  {:.3}", trustworthiness(&first, &expert)?);
    println!("second annotator trustworthiness: {:.3}", trustworthiness(&second, &expert)?);

    // chance-level agreement
    println!("kappa at chance: {}", cohens_kappa(&[1, 1, 0, 0], &[1, 0, 0, 1])?);
    // a single shared category leaves kappa undefined
    match cohens_kappa(&[0, 0, 0], &[0, 0, 0]) {
        Ok(k) => println!("all agree on one category: {k}"),
        Err(e) => println!("all agree on one category: {e}"),
    }
    Ok(())
}
