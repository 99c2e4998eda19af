//! Iterative stratification for multi-label train/validation/test splits.
//!
//! Documents are placed label by label, rarest label first. Each document goes
//! to the fold that still wants the most examples of the label being placed;
//! ties go to the fold with the most free capacity, then to a seeded random
//! pick. Fold capacities are integers derived from the fractions, so fold
//! sizes are exact up to rounding.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Document, NUM_LABELS};
use crate::error::{Error, Result};

const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Share of all documents assigned to training.
    pub train_fraction: f64,
    /// Share of the remainder assigned to validation; the rest is test.
    pub val_fraction_of_rest: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.60, val_fraction_of_rest: 0.60, seed: 42 }
    }
}

impl SplitSpec {
    /// Overall (train, val, test) fractions.
    pub fn fractions(&self) -> Result<[f64; 3]> {
        for (name, f) in [
            ("train_fraction", self.train_fraction),
            ("val_fraction_of_rest", self.val_fraction_of_rest),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {f}")));
            }
        }
        let rest = 1.0 - self.train_fraction;
        let val = rest * self.val_fraction_of_rest;
        Ok([self.train_fraction, val, rest - val])
    }
}

/// Document indices per fold, each list ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Folds {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Folds {
    pub fn as_array(&self) -> [&[usize]; 3] {
        [&self.train, &self.val, &self.test]
    }
}

/// Stratification targets for one document: the six labels, then a toxic
/// indicator and a non-toxic indicator.
pub fn split_labels(doc: &Document) -> Option<Vec<bool>> {
    let toxic = doc.is_toxic()?;
    let mut row = doc.labels.map(|l| l.to_vec()).unwrap_or_else(|| vec![false; NUM_LABELS]);
    row.push(toxic);
    row.push(!toxic);
    Some(row)
}

/// Splits annotated documents into train/validation/test folds.
pub fn stratified_split(documents: &[Document], spec: &SplitSpec) -> Result<Folds> {
    let rows = documents
        .iter()
        .map(|d| {
            split_labels(d)
                .ok_or_else(|| Error::Data(format!("document {:?} carries no labels to stratify on", d.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    stratified_split_labels(&rows, spec)
}

/// Largest-remainder rounding of `fractions * n` to integers summing to `n`.
fn capacities(n: usize, fractions: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut caps: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (raw[a] - raw[a].floor(), raw[b] - raw[b].floor());
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let short = n - caps.iter().sum::<usize>();
    for &j in order.iter().take(short) {
        caps[j] += 1;
    }
    caps
}

/// Picks the best fold among those with free capacity.
fn choose_fold(demand: Option<&[f64]>, capacity: &[usize], rng: &mut ChaCha8Rng) -> usize {
    let open: Vec<usize> = (0..capacity.len()).filter(|&j| capacity[j] > 0).collect();
    let mut best = open.clone();
    if let Some(demand) = demand {
        let top = open.iter().map(|&j| demand[j]).fold(f64::NEG_INFINITY, f64::max);
        best.retain(|&j| demand[j] >= top - TIE_EPS);
    }
    let top_cap = best.iter().map(|&j| capacity[j]).max().expect("some fold has capacity");
    best.retain(|&j| capacity[j] == top_cap);
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.gen_range(0..best.len())]
    }
}

fn assign(
    row: &[bool],
    fold: usize,
    capacity: &mut [usize],
    demand: &mut [Vec<f64>],
    remaining: &mut [usize],
) {
    capacity[fold] -= 1;
    for (l, &on) in row.iter().enumerate() {
        if on {
            demand[l][fold] -= 1.0;
            remaining[l] -= 1;
        }
    }
}

/// Iterative stratification over an arbitrary boolean label matrix.
pub fn stratified_split_labels(rows: &[Vec<bool>], spec: &SplitSpec) -> Result<Folds> {
    if rows.is_empty() {
        return Err(Error::Data("cannot split an empty document set".into()));
    }
    let fractions = spec.fractions()?;
    let n_labels = rows[0].len();
    if rows.iter().any(|r| r.len() != n_labels) {
        return Err(Error::Data("label rows have inconsistent widths".into()));
    }
    let n = rows.len();
    let k = fractions.len();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut capacity = capacities(n, &fractions);
    let label_totals: Vec<usize> = (0..n_labels)
        .map(|l| rows.iter().filter(|r| r[l]).count())
        .collect();
    // demand[l][j]: how many more positives of label l fold j wants
    let mut demand: Vec<Vec<f64>> = label_totals
        .iter()
        .map(|&t| fractions.iter().map(|f| f * t as f64).collect())
        .collect();
    let mut fold_of: Vec<Option<usize>> = vec![None; n];
    let mut remaining = label_totals.clone();

    while let Some(label) = (0..n_labels).filter(|&l| remaining[l] > 0).min_by_key(|&l| (remaining[l], l)) {
        for &doc in &order {
            if fold_of[doc].is_some() || !rows[doc][label] {
                continue;
            }
            let fold = choose_fold(Some(&demand[label]), &capacity, &mut rng);
            assign(&rows[doc], fold, &mut capacity, &mut demand, &mut remaining);
            fold_of[doc] = Some(fold);
        }
    }
    for &doc in &order {
        if fold_of[doc].is_none() {
            let fold = choose_fold(None, &capacity, &mut rng);
            assign(&rows[doc], fold, &mut capacity, &mut demand, &mut remaining);
            fold_of[doc] = Some(fold);
        }
    }

    let mut folds = vec![Vec::new(); k];
    for (doc, f) in fold_of.into_iter().enumerate() {
        folds[f.expect("every document assigned")].push(doc);
    }
    let mut it = folds.into_iter();
    Ok(Folds {
        train: it.next().unwrap(),
        val: it.next().unwrap(),
        test: it.next().unwrap(),
    })
}

/// Writes `train.ids`, `val.ids` and `test.ids` (one document id per line) into `dir`.
pub fn write_split(dir: impl AsRef<Path>, documents: &[Document], folds: &Folds) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, idx) in ["train", "val", "test"].iter().zip(folds.as_array()) {
        let path = dir.join(format!("{name}.ids"));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
        for &i in idx {
            writeln!(f, "{}", documents[i].id).map_err(|e| Error::io(&path, e))?;
        }
        f.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn read_id_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().filter(|l| !l.is_empty()).map(str::to_owned).collect())
}
