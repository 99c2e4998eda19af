//! Local surrogate explanations for text classifiers.
//!
//! Words of the instance are switched off at random, the model is queried on
//! each perturbed text, samples are weighted by their closeness to the
//! original, and a weighted ridge regression over word-presence indicators
//! is fitted on greedily selected words.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::models::{BinaryClassifier, MultiLabelClassifier, Network, TextEncoder};

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_KERNEL_WIDTH: f64 = 0.25;
pub const DEFAULT_RIDGE: f64 = 1e-3;
pub const DEFAULT_K_BINARY: usize = 6;
pub const DEFAULT_K_MULTILABEL: usize = 10;

/// Anything that maps text to a vector of class probabilities.
pub trait TextClassifier {
    fn class_names(&self) -> Vec<String>;
    fn predict_text(&self, text: &str) -> Result<Vec<f64>>;
}

/// Adapts a closure to [`TextClassifier`].
pub struct FnClassifier<F> {
    pub names: Vec<String>,
    pub f: F,
}

impl<F: Fn(&str) -> Result<Vec<f64>>> TextClassifier for FnClassifier<F> {
    fn class_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn predict_text(&self, text: &str) -> Result<Vec<f64>> {
        (self.f)(text)
    }
}

/// The stage-1 gate seen as a two-class model (`non_toxic`, `toxic`).
pub struct BinaryText<'a> {
    pub encoder: &'a TextEncoder,
    pub model: &'a BinaryClassifier,
}

impl TextClassifier for BinaryText<'_> {
    fn class_names(&self) -> Vec<String> {
        vec!["non_toxic".into(), "toxic".into()]
    }

    fn predict_text(&self, text: &str) -> Result<Vec<f64>> {
        let p = self.model.predict_proba(&self.encoder.encode(text, self.model.max_len()))?;
        Ok(vec![1.0 - p, p])
    }
}

pub struct MultiLabelText<'a> {
    pub encoder: &'a TextEncoder,
    pub model: &'a MultiLabelClassifier,
}

impl TextClassifier for MultiLabelText<'_> {
    fn class_names(&self) -> Vec<String> {
        Label::ALL.iter().map(|l| l.name().to_string()).collect()
    }

    fn predict_text(&self, text: &str) -> Result<Vec<f64>> {
        Ok(self.model.predict_proba(&self.encoder.encode(text, self.model.max_len()))?.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// Presence of each distinct word of the instance.
    pub mask: Vec<bool>,
    pub text: String,
    /// Model output on `text`; empty until evaluated.
    pub output: Vec<f64>,
}

/// Distinct words in first-occurrence order.
pub fn distinct_words<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    tokens.iter().map(AsRef::as_ref).filter(|t| seen.insert(*t)).map(str::to_string).collect()
}

/// Mask 0 is all ones; every other mask switches off a uniformly drawn
/// number (1..=m) of uniformly chosen words.
pub fn sample_masks(m: usize, n: usize, seed: u64) -> Result<Vec<Vec<bool>>> {
    if m == 0 {
        return Err(Error::Data("cannot explain an instance with no words".into()));
    }
    if n == 0 {
        return Err(Error::Config("number of samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masks = Vec::with_capacity(n);
    masks.push(vec![true; m]);
    for _ in 1..n {
        let off = rng.gen_range(1..=m);
        let mut mask = vec![true; m];
        for i in sample_indices(&mut rng, m, off) {
            mask[i] = false;
        }
        masks.push(mask);
    }
    Ok(masks)
}

/// Keeps the tokens whose word is active in `mask`, in original order.
pub fn perturbed_text<S: AsRef<str>>(tokens: &[S], words: &[String], mask: &[bool]) -> String {
    let kept: Vec<&str> = tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| words.iter().position(|w| w == t).is_some_and(|i| mask[i]))
        .collect();
    kept.join(" ")
}

/// Distinct words of `tokens` and `n` seeded perturbations (outputs not yet filled).
pub fn sample_perturbations<S: AsRef<str>>(tokens: &[S], n: usize, seed: u64) -> Result<(Vec<String>, Vec<Perturbation>)> {
    let words = distinct_words(tokens);
    let masks = sample_masks(words.len(), n, seed)?;
    let perturbations = masks
        .into_iter()
        .map(|mask| Perturbation { text: perturbed_text(tokens, &words, &mask), mask, output: Vec::new() })
        .collect();
    Ok((words, perturbations))
}

/// `exp(−d²/σ²)` with `d` the cosine distance between `mask` and all ones.
/// The all-zeros mask has no defined cosine and gets weight 0.
pub fn kernel_weight(mask: &[bool], width: f64) -> f64 {
    let active = mask.iter().filter(|&&b| b).count();
    if active == 0 {
        return 0.0;
    }
    let cos = active as f64 / ((active as f64).sqrt() * (mask.len() as f64).sqrt());
    let d = 1.0 - cos;
    (-(d * d) / (width * width)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    /// One coefficient per selected feature, in the order given.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub r2: f64,
    /// Weighted sum of squared residuals.
    pub sse: f64,
}

fn check_inputs(masks: &[Vec<bool>], weights: &[f64], targets: &[f64]) -> Result<()> {
    if masks.is_empty() || masks.len() != weights.len() || masks.len() != targets.len() {
        return Err(Error::Data(format!(
            "surrogate inputs disagree: {} masks, {} weights, {} targets",
            masks.len(),
            weights.len(),
            targets.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Numeric("sample weights must be finite, non-negative and not all zero".into()));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("surrogate targets"));
    }
    Ok(())
}

/// Weighted ridge regression of `targets` on the selected mask columns.
/// The intercept is not penalized.
pub fn fit_surrogate(masks: &[Vec<bool>], features: &[usize], weights: &[f64], targets: &[f64], ridge: f64) -> Result<Surrogate> {
    check_inputs(masks, weights, targets)?;
    if !(ridge >= 0.0) {
        return Err(Error::Config(format!("ridge penalty must be non-negative, got {ridge}")));
    }
    let p = features.len() + 1;
    let mut a = DMatrix::<f64>::zeros(p, p);
    let mut b = DVector::<f64>::zeros(p);
    let mut row = vec![0.0; p];
    for ((mask, &w), &y) in masks.iter().zip(weights).zip(targets) {
        row[0] = 1.0;
        for (j, &f) in features.iter().enumerate() {
            row[j + 1] = f64::from(u8::from(mask[f]));
        }
        for r in 0..p {
            b[r] += w * row[r] * y;
            for c in 0..p {
                a[(r, c)] += w * row[r] * row[c];
            }
        }
    }
    for j in 1..p {
        a[(j, j)] += ridge;
    }
    let beta = a
        .clone()
        .cholesky()
        .map(|ch| ch.solve(&b))
        .or_else(|| a.lu().solve(&b))
        .ok_or_else(|| Error::Numeric("singular surrogate system".into()))?;
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("surrogate solve"));
    }
    let wsum: f64 = weights.iter().sum();
    let mean = weights.iter().zip(targets).map(|(w, y)| w * y).sum::<f64>() / wsum;
    let (mut sse, mut sst) = (0.0, 0.0);
    for ((mask, &w), &y) in masks.iter().zip(weights).zip(targets) {
        let mut yhat = beta[0];
        for (j, &f) in features.iter().enumerate() {
            if mask[f] {
                yhat += beta[j + 1];
            }
        }
        sse += w * (y - yhat) * (y - yhat);
        sst += w * (y - mean) * (y - mean);
    }
    let scale = wsum * mean.abs().max(1.0).powi(2);
    let r2 = if sst <= 1e-24 * scale {
        if sse <= 1e-24 * scale {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - sse / sst
    };
    Ok(Surrogate { coefficients: beta.iter().skip(1).copied().collect(), intercept: beta[0], r2, sse })
}

/// Forward selection: repeatedly add the feature whose inclusion gives the
/// lowest weighted squared error, stopping at `k` features or when no
/// candidate lowers the error.
pub fn select_features(masks: &[Vec<bool>], weights: &[f64], targets: &[f64], k: usize, ridge: f64) -> Result<Vec<usize>> {
    check_inputs(masks, weights, targets)?;
    let m = masks[0].len();
    let mut chosen: Vec<usize> = Vec::with_capacity(k.min(m));
    let mut current = fit_surrogate(masks, &chosen, weights, targets, ridge)?.sse;
    while chosen.len() < k.min(m) {
        let mut best: Option<(usize, f64)> = None;
        for f in (0..m).filter(|f| !chosen.contains(f)) {
            let mut trial = chosen.clone();
            trial.push(f);
            let sse = fit_surrogate(masks, &trial, weights, targets, ridge)?.sse;
            if best.is_none_or(|(_, b)| sse < b) {
                best = Some((f, sse));
            }
        }
        match best {
            Some((f, sse)) if sse < current - 1e-12 * current.max(f64::MIN_POSITIVE) => {
                chosen.push(f);
                current = sse;
            }
            _ => break,
        }
    }
    Ok(chosen)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub n_samples: usize,
    pub k: usize,
    pub seed: u64,
    pub kernel_width: f64,
    pub ridge: f64,
}

impl ExplainConfig {
    pub fn binary() -> Self {
        ExplainConfig { n_samples: DEFAULT_SAMPLES, k: DEFAULT_K_BINARY, seed: 0, kernel_width: DEFAULT_KERNEL_WIDTH, ridge: DEFAULT_RIDGE }
    }

    pub fn multilabel() -> Self {
        ExplainConfig { k: DEFAULT_K_MULTILABEL, ..Self::binary() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordWeight {
    pub word: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub class: String,
    pub class_index: usize,
    /// Model probability for `class` on the unperturbed text.
    pub probability: f64,
    /// Selected words ranked by absolute weight.
    pub features: Vec<WordWeight>,
    pub intercept: f64,
    pub r2: f64,
    pub n_samples: usize,
}

impl Explanation {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One line per word with a bar proportional to its weight.
    pub fn render_bars(&self, width: usize) -> String {
        let mut s = format!("{} (p = {:.4}, r2 = {:.3})\n", self.class, self.probability, self.r2);
        let max = self.features.iter().map(|f| f.weight.abs()).fold(0.0, f64::max);
        let pad = self.features.iter().map(|f| f.word.chars().count()).max().unwrap_or(0);
        for f in &self.features {
            let len = if max > 0.0 { (f.weight.abs() / max * width as f64).round() as usize } else { 0 };
            let bar = if f.weight >= 0.0 { "+".repeat(len) } else { "-".repeat(len) };
            s += &format!("  {:<pad$} {:>+9.4} {}\n", f.word, f.weight, bar);
        }
        s
    }
}

/// Explains one class of `model`'s output on `text` (whitespace-tokenized;
/// pass already cleaned text so perturbations line up with model tokens).
pub fn explain_instance(model: &dyn TextClassifier, text: &str, class_index: usize, cfg: &ExplainConfig) -> Result<Explanation> {
    let names = model.class_names();
    let class = names
        .get(class_index)
        .cloned()
        .ok_or_else(|| Error::Config(format!("class index {class_index} out of range for {} classes", names.len())))?;
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let (words, mut samples) = sample_perturbations(&tokens, cfg.n_samples, cfg.seed)?;
    for s in &mut samples {
        s.output = model.predict_text(&s.text)?;
        if s.output.len() != names.len() {
            return Err(Error::shape("explain", format!("model returned {} outputs for {} classes", s.output.len(), names.len())));
        }
    }
    let masks: Vec<Vec<bool>> = samples.iter().map(|s| s.mask.clone()).collect();
    let weights: Vec<f64> = masks.iter().map(|m| kernel_weight(m, cfg.kernel_width)).collect();
    let targets: Vec<f64> = samples.iter().map(|s| s.output[class_index]).collect();
    let selected = select_features(&masks, &weights, &targets, cfg.k, cfg.ridge)?;
    let fit = fit_surrogate(&masks, &selected, &weights, &targets, cfg.ridge)?;
    let mut features: Vec<(usize, WordWeight)> = selected
        .iter()
        .zip(&fit.coefficients)
        .enumerate()
        .map(|(rank, (&f, &w))| (rank, WordWeight { word: words[f].clone(), weight: w }))
        .collect();
    features.sort_by(|a, b| b.1.weight.abs().total_cmp(&a.1.weight.abs()).then(a.0.cmp(&b.0)));
    Ok(Explanation {
        class,
        class_index,
        probability: targets[0],
        features: features.into_iter().map(|(_, w)| w).collect(),
        intercept: fit.intercept,
        r2: fit.r2,
        n_samples: samples.len(),
    })
}

/// Explanations for every class of a multi-label model, computed independently.
pub fn explain_all(model: &dyn TextClassifier, text: &str, cfg: &ExplainConfig) -> Result<Vec<Explanation>> {
    (0..model.class_names().len()).map(|c| explain_instance(model, text, c, cfg)).collect()
}
