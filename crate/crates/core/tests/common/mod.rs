#![allow(dead_code)]

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toxclass::corpus::{Document, Label, LabelVector, TokenSequence, NUM_LABELS};
use toxclass::embedding::EmbeddingTable;
use toxclass::models::{ConvSpec, Example, InputMode, MultiLabelClassifier, MultiLabelModelConfig};
use toxclass::neural::{
    add_l2_grad, bce, bce_logit_grad, l2_penalty, masked_max_backward, masked_max_over_rows, maxpool1d,
    maxpool1d_backward, sigmoid, Attention, BiLstm, Conv1d, Dense, Differentiable, GradCheckReport, Lstm, Param,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| r.gen_range(-1.0..1.0))
}

// ---------------------------------------------------------------------------
// Finite-difference harnesses

type RunFn<L> = fn(&mut L, &Array2<f64>, &Array2<f64>) -> (f64, Array2<f64>);
type ParamsFn<L> = fn(&mut L) -> Vec<&mut Param>;

/// A layer probed through `loss = Σ R ⊙ layer(X)` with a fixed random `R`.
/// Parameters and the input are all checked.
pub struct LayerProbe<L> {
    pub layer: L,
    pub input: Array2<f64>,
    pub proj: Array2<f64>,
    run: RunFn<L>,
    params: ParamsFn<L>,
}

impl<L> Differentiable for LayerProbe<L> {
    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut v: Vec<&mut Array2<f64>> = (self.params)(&mut self.layer).into_iter().map(|p| &mut p.value).collect();
        v.push(&mut self.input);
        v
    }

    fn loss_and_grad(&mut self) -> (f64, Vec<Array2<f64>>) {
        for p in (self.params)(&mut self.layer) {
            p.zero_grad();
        }
        let (loss, dx) = (self.run)(&mut self.layer, &self.input, &self.proj);
        let mut grads: Vec<Array2<f64>> = (self.params)(&mut self.layer).into_iter().map(|p| p.grad.clone()).collect();
        grads.push(dx);
        (loss, grads)
    }
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn row(v: &Array1<f64>) -> Array2<f64> {
    v.clone().insert_axis(ndarray::Axis(0))
}

pub fn dense_probe(seed: u64) -> LayerProbe<Dense> {
    let mut r = rng(seed);
    LayerProbe {
        layer: Dense::new("d", 5, 4, &mut r),
        input: random_matrix(1, 5, &mut r),
        proj: random_matrix(1, 4, &mut r),
        run: |l, x, p| {
            let y = l.forward(x.row(0)).unwrap();
            let dx = l.backward(x.row(0), p.row(0));
            (dot(&row(&y), p), row(&dx))
        },
        params: |l| l.params_mut().into_iter().collect(),
    }
}

pub fn conv_probe(seed: u64) -> LayerProbe<Conv1d> {
    let mut r = rng(seed);
    LayerProbe {
        layer: Conv1d::new("c", 3, 2, 2, &mut r),
        input: random_matrix(8, 3, &mut r),
        proj: random_matrix(7, 2, &mut r),
        run: |l, x, p| {
            let y = l.forward(x.view()).unwrap();
            let dx = l.backward(x.view(), p.view());
            (dot(&y, p), dx)
        },
        params: |l| l.params_mut().into_iter().collect(),
    }
}

pub fn maxpool_probe(seed: u64) -> LayerProbe<()> {
    let mut r = rng(seed);
    LayerProbe {
        layer: (),
        input: random_matrix(9, 3, &mut r),
        proj: random_matrix(4, 3, &mut r),
        run: |_, x, p| {
            let pooled = maxpool1d(x.view(), 2).unwrap();
            (dot(&pooled.output, p), maxpool1d_backward(&pooled, p.view()))
        },
        params: |_| Vec::new(),
    }
}

pub fn time_max_probe(seed: u64) -> LayerProbe<()> {
    let mut r = rng(seed);
    LayerProbe {
        layer: (),
        input: random_matrix(6, 4, &mut r),
        proj: random_matrix(1, 4, &mut r),
        run: |_, x, p| {
            let tm = masked_max_over_rows(x.view(), &[1, 1, 1, 1, 0, 0]);
            (dot(&row(&tm.values), p), masked_max_backward(&tm, x.nrows(), p.row(0)))
        },
        params: |_| Vec::new(),
    }
}

pub fn lstm_probe(seed: u64, reverse: bool) -> LayerProbe<(Lstm, bool)> {
    let mut r = rng(seed);
    let lstm = Lstm::new("l", 3, 4, &mut r);
    LayerProbe {
        layer: (lstm, reverse),
        input: random_matrix(6, 3, &mut r),
        proj: random_matrix(6, 4, &mut r),
        run: |(l, rev), x, p| {
            let mask = [1, 1, 1, 1, 1, 0];
            let (h, cache) = l.forward(x.view(), &mask, *rev).unwrap();
            let dx = l.backward(x.view(), &cache, p.view());
            (dot(&h, p), dx)
        },
        params: |(l, _)| l.params_mut().into_iter().collect(),
    }
}

pub fn bilstm_probe(seed: u64) -> LayerProbe<BiLstm> {
    let mut r = rng(seed);
    LayerProbe {
        layer: BiLstm::new("b", 3, 4, &mut r),
        input: random_matrix(5, 3, &mut r),
        proj: random_matrix(5, 8, &mut r),
        run: |l, x, p| {
            let mask = [1, 1, 1, 1, 0];
            let (h, cache) = l.forward(x.view(), &mask).unwrap();
            let dx = l.backward_pass(x.view(), &cache, p.view());
            (dot(&h, p), dx)
        },
        params: |l| l.params_mut(),
    }
}

pub fn attention_probe(seed: u64) -> LayerProbe<Attention> {
    let mut r = rng(seed);
    let mut att = Attention::new("a", 3, &mut r);
    att.b.value[[0, 0]] = 0.3;
    LayerProbe {
        layer: att,
        input: random_matrix(4, 3, &mut r),
        proj: random_matrix(1, 3, &mut r),
        run: |l, h, p| {
            let mask = [1, 1, 1, 1];
            let out = l.forward(h.view(), &mask).unwrap();
            let dh = l.backward(h.view(), &out, p.row(0));
            (dot(&row(&out.context), p), dh)
        },
        params: |l| l.params_mut().into_iter().collect(),
    }
}

/// Dense logits, sigmoid, mean BCE against fixed targets plus L2 on the weight.
pub struct BceL2Probe {
    pub layer: Dense,
    pub input: Array2<f64>,
    pub target: Vec<f64>,
    pub lambda: f64,
}

impl Differentiable for BceL2Probe {
    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut v: Vec<&mut Array2<f64>> = self.layer.params_mut().into_iter().map(|p| &mut p.value).collect();
        v.push(&mut self.input);
        v
    }

    fn loss_and_grad(&mut self) -> (f64, Vec<Array2<f64>>) {
        for p in self.layer.params_mut() {
            p.zero_grad();
        }
        let z = self.layer.forward(self.input.row(0)).unwrap();
        let p: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
        let loss = bce(&p, &self.target) + l2_penalty(self.layer.params(), self.lambda);
        let dz = Array1::from(bce_logit_grad(&p, &self.target));
        let dx = self.layer.backward(self.input.row(0), dz.view());
        add_l2_grad(self.layer.params_mut(), self.lambda);
        let mut grads: Vec<Array2<f64>> = self.layer.params().iter().map(|p| p.grad.clone()).collect();
        grads.push(row(&dx));
        (loss, grads)
    }
}

pub fn bce_l2_probe(seed: u64) -> BceL2Probe {
    let mut r = rng(seed);
    BceL2Probe {
        layer: Dense::new("o", 5, 6, &mut r),
        input: random_matrix(1, 5, &mut r),
        target: (0..6).map(|i| f64::from(u8::from(i % 2 == 0))).collect(),
        lambda: 0.05,
    }
}

/// Every smooth-layer check, labelled.
pub fn layer_reports(seed: u64) -> Vec<(&'static str, GradCheckReport)> {
    use toxclass::neural::{grad_check, DEFAULT_STEP};
    let h = DEFAULT_STEP;
    vec![
        ("dense", grad_check(&mut dense_probe(seed), h)),
        ("conv1d", grad_check(&mut conv_probe(seed), h)),
        ("maxpool1d", grad_check(&mut maxpool_probe(seed), h)),
        ("time max", grad_check(&mut time_max_probe(seed), h)),
        ("lstm", grad_check(&mut lstm_probe(seed, false), h)),
        ("lstm (reverse)", grad_check(&mut lstm_probe(seed, true), h)),
        ("bilstm", grad_check(&mut bilstm_probe(seed), h)),
        ("attention", grad_check(&mut attention_probe(seed), h)),
        ("bce + l2", grad_check(&mut bce_l2_probe(seed), h)),
    ]
}

/// The toy multi-label configuration: D=8, L=20, conv kernels 4/3/2.
pub fn toy_multilabel_config() -> MultiLabelModelConfig {
    MultiLabelModelConfig {
        embedding_dim: 8,
        max_len: 20,
        conv: vec![
            ConvSpec { filters: 4, kernel: 4 },
            ConvSpec { filters: 3, kernel: 3 },
            ConvSpec { filters: 2, kernel: 2 },
        ],
        pool: 2,
        bilstm_units: 3,
        attention: true,
        input: InputMode::Sequence,
        init_seed: 11,
    }
}

pub fn toy_multilabel(vocab: usize) -> MultiLabelClassifier {
    MultiLabelClassifier::new(toy_multilabel_config(), EmbeddingTable::random(vocab, 8, 5)).unwrap()
}

pub fn toy_examples(vocab: usize, seed: u64) -> Vec<Example> {
    let mut r = rng(seed);
    [20usize, 13, 6]
        .iter()
        .map(|&len| {
            let ids: Vec<usize> = (0..len).map(|_| r.gen_range(2..vocab)).collect();
            let target = (0..NUM_LABELS).map(|_| f64::from(u8::from(r.gen_bool(0.5)))).collect();
            Example { seq: TokenSequence::from_ids(&ids, 20), target }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Synthetic corpora

pub const KEYWORDS: [&str; NUM_LABELS] = ["crud", "bigot", "heathen", "stab", "bait", "moron"];
pub const FILLER: [&str; 12] = ["the", "a", "day", "city", "news", "people", "today", "game", "watch", "rain", "film", "music"];

fn random_labels(r: &mut ChaCha8Rng, density: f64) -> LabelVector {
    let mut l = [false; NUM_LABELS];
    for b in &mut l {
        *b = r.gen_bool(density);
    }
    if !l.iter().any(|&b| b) {
        l[r.gen_range(0..NUM_LABELS)] = true;
    }
    l
}

/// Documents whose text holds one planted keyword per gold label plus filler.
/// About `toxic_share` of them are toxic; the rest carry no label.
pub fn keyword_corpus(n: usize, toxic_share: f64, seed: u64) -> Vec<Document> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let labels = if r.gen_bool(toxic_share) { random_labels(&mut r, 0.3) } else { [false; NUM_LABELS] };
            let mut words: Vec<&str> = (0..r.gen_range(4..10)).map(|_| *FILLER.choose(&mut r).unwrap()).collect();
            for l in Label::ALL {
                if labels[l.index()] {
                    let at = r.gen_range(0..=words.len());
                    words.insert(at, KEYWORDS[l.index()]);
                }
            }
            Document::with_labels(format!("doc{i:04}"), words.join(" "), labels)
        })
        .collect()
}

pub fn write_csv(path: &Path, docs: &[Document]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    let mut header = vec!["id".to_string(), "text".to_string()];
    header.extend(Label::ALL.iter().map(|l| l.name().to_string()));
    w.write_record(&header).unwrap();
    for d in docs {
        let mut rec = vec![d.id.clone(), d.text.clone()];
        let labels = d.labels.unwrap_or_default();
        rec.extend(labels.iter().map(|&b| u8::from(b).to_string()));
        w.write_record(&rec).unwrap();
    }
    w.flush().unwrap();
}

/// Multi-label documents with skewed, correlated label marginals.
pub fn stratification_corpus(n: usize, seed: u64) -> Vec<Document> {
    let mut r = rng(seed);
    let rates = [0.15, 0.12, 0.09, 0.09, 0.10, 0.17];
    (0..n)
        .map(|i| {
            let mut l = [false; NUM_LABELS];
            for (j, b) in l.iter_mut().enumerate() {
                *b = r.gen_bool(rates[j]);
            }
            if l[0] && r.gen_bool(0.5) {
                l[5] = true;
            }
            Document::with_labels(format!("s{i}"), format!("text {i}"), l)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Brute-force metric oracles

pub struct OracleReport {
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub subset_accuracy: f64,
}

/// Per-label precision, recall and F1 straight from the definitions, then
/// the support-weighted average.
pub fn oracle_report(pred: &[Vec<bool>], gold: &[Vec<bool>]) -> OracleReport {
    let k = gold[0].len();
    let mut acc = [0.0f64; 3];
    let mut total_support = 0usize;
    for j in 0..k {
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fn_ = 0.0;
        for (p, g) in pred.iter().zip(gold) {
            match (p[j], g[j]) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        let support = gold.iter().filter(|g| g[j]).count();
        total_support += support;
        acc[0] += precision * support as f64;
        acc[1] += recall * support as f64;
        acc[2] += f1 * support as f64;
    }
    let norm = |x: f64| if total_support == 0 { 0.0 } else { x / total_support as f64 };
    let exact = pred.iter().zip(gold).filter(|(p, g)| p == g).count();
    OracleReport {
        weighted_precision: norm(acc[0]),
        weighted_recall: norm(acc[1]),
        weighted_f1: norm(acc[2]),
        subset_accuracy: exact as f64 / pred.len() as f64,
    }
}

/// `(p_o − p_e) / (1 − p_e)` over a contingency table; `None` when p_e = 1.
pub fn oracle_kappa(a: &[u8], b: &[u8]) -> Option<f64> {
    let n = a.len() as f64;
    let cats: Vec<u8> = {
        let mut c: Vec<u8> = a.iter().chain(b).copied().collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let p_e: f64 = cats
        .iter()
        .map(|c| {
            let ca = a.iter().filter(|x| *x == c).count() as f64;
            let cb = b.iter().filter(|x| *x == c).count() as f64;
            ca * cb / (n * n)
        })
        .sum();
    if p_e == 1.0 {
        None
    } else {
        Some((p_o - p_e) / (1.0 - p_e))
    }
}

/// Probability that a random positive outscores a random negative, ties half.
pub fn oracle_auc(scores: &[f64], gold: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &gi) in gold.iter().enumerate() {
        if !gi {
            continue;
        }
        for (j, &gj) in gold.iter().enumerate() {
            if gj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Random metric instance: `n ≤ 50` rows of `k` labels, prediction noise varies.
pub fn random_instance(r: &mut ChaCha8Rng) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
    let n = r.gen_range(1..=50);
    let k = r.gen_range(1..=NUM_LABELS);
    let density = r.gen_range(0.05..0.7);
    let flip = r.gen_range(0.0..0.6);
    let gold: Vec<Vec<bool>> = (0..n).map(|_| (0..k).map(|_| r.gen_bool(density)).collect()).collect();
    let pred = gold.iter().map(|g| g.iter().map(|&b| if r.gen_bool(flip) { !b } else { b }).collect()).collect();
    (pred, gold)
}

// ---------------------------------------------------------------------------
// Explanation oracle

/// Weighted least squares with intercept on all `m` features over every
/// non-empty mask, by Gaussian elimination on the normal equations.
pub fn exhaustive_wls(m: usize, f: &dyn Fn(&[bool]) -> f64, width: f64) -> Vec<f64> {
    let dim = m + 1;
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for bits in 1u32..(1 << m) {
        let mask: Vec<bool> = (0..m).map(|i| bits >> i & 1 == 1).collect();
        let active = mask.iter().filter(|&&x| x).count() as f64;
        let d = 1.0 - (active / m as f64).sqrt();
        let w = (-(d * d) / (width * width)).exp();
        let mut x = vec![1.0];
        x.extend(mask.iter().map(|&on| f64::from(u8::from(on))));
        let y = f(&mask);
        for i in 0..dim {
            b[i] += w * x[i] * y;
            for j in 0..dim {
                a[i][j] += w * x[i] * x[j];
            }
        }
    }
    solve(a, b)[1..].to_vec()
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// A planted linear-presence target over `m` words: a few words carry
/// coefficients with distinct magnitudes, the rest carry none.
pub struct PlantedLinear {
    pub words: Vec<String>,
    pub coef: Vec<f64>,
    pub bias: f64,
}

impl PlantedLinear {
    pub fn sample(seed: u64) -> Self {
        let mut r = rng(seed);
        let m = r.gen_range(4..=12);
        let s = r.gen_range(1..=3.min(m));
        let words: Vec<String> = (0..m).map(|i| format!("w{i}")).collect();
        let mut coef = vec![0.0; m];
        let mut idx: Vec<usize> = (0..m).collect();
        idx.shuffle(&mut r);
        let mut mags = [0.45, 0.3, 0.15];
        mags.shuffle(&mut r);
        for (t, &i) in idx.iter().take(s).enumerate() {
            let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            coef[i] = sign * (mags[t] + r.gen_range(-0.03..0.03));
        }
        PlantedLinear { words, coef, bias: r.gen_range(0.2..0.5) }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.coef.len()).filter(|&i| self.coef[i] != 0.0).collect()
    }

    pub fn eval_mask(&self, mask: &[bool]) -> f64 {
        self.bias + mask.iter().zip(&self.coef).filter(|(on, _)| **on).map(|(_, c)| c).sum::<f64>()
    }

    pub fn eval_text(&self, text: &str) -> f64 {
        let present: Vec<bool> = self.words.iter().map(|w| text.split_whitespace().any(|t| t == w)).collect();
        self.eval_mask(&present)
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

/// Smallest distance from a non-differentiable point in the conv/pool stack:
/// a live pre-activation near zero or two positive pool competitors nearly
/// tied. Finite differences only apply when this is well above the step.
pub fn stack_kink_margin(model: &MultiLabelClassifier, examples: &[Example]) -> f64 {
    let mut margin = f64::INFINITY;
    for ex in examples {
        let mut x = model.embedding.embed_sequence(&ex.seq).unwrap().matrix;
        let mut len = ex.seq.true_length;
        let pool = model.config.pool;
        for conv in &model.convs {
            let pre = conv.forward(x.view()).unwrap();
            let valid = len.min(pre.nrows());
            for t in 0..valid {
                for &v in pre.row(t) {
                    margin = margin.min(v.abs());
                }
            }
            let act = Array2::from_shape_fn(pre.dim(), |(t, c)| if t < valid { pre[[t, c]].max(0.0) } else { 0.0 });
            for w in 0..pre.nrows() / pool {
                for c in 0..pre.ncols() {
                    let mut vals: Vec<f64> = (0..pool).map(|p| act[[w * pool + p, c]]).filter(|&v| v > 0.0).collect();
                    vals.sort_by(|a, b| b.total_cmp(a));
                    if vals.len() > 1 {
                        margin = margin.min(vals[0] - vals[1]);
                    }
                }
            }
            len = valid.div_ceil(pool).min(pre.nrows() / pool);
            x = maxpool1d(act.view(), pool).unwrap().output;
        }
    }
    margin
}

/// Seeds of the first `count` toy fixtures whose kink margin is at least ten
/// finite-difference steps.
pub fn smooth_toy_fixtures(vocab: usize, count: usize) -> Vec<u64> {
    let model = toy_multilabel(vocab);
    (0..)
        .filter(|&s| stack_kink_margin(&model, &toy_examples(vocab, s)) >= 10.0 * toxclass::neural::DEFAULT_STEP)
        .take(count)
        .collect()
}

pub struct OverfitOutcome {
    pub epochs: usize,
    pub subset_accuracy: f64,
    pub seconds: f64,
}

/// Trains the desk-scale multi-label model on a planted keyword corpus at
/// lr 1e-3 until train subset accuracy reaches `target` or 200 epochs pass.
pub fn overfit_planted(n_docs: usize, target: f64, seed: u64, batch_size: usize) -> OverfitOutcome {
    overfit_with(MultiLabelModelConfig::desk(), n_docs, target, seed, batch_size)
}

pub fn overfit_with(base: MultiLabelModelConfig, n_docs: usize, target: f64, seed: u64, batch_size: usize) -> OverfitOutcome {
    use toxclass::corpus::{build_vocab, tokenize};
    use toxclass::metrics::multilabel_report;
    use toxclass::models::{decide, train_batch, TrainingConfig};
    use toxclass::neural::AdamState;

    let start = std::time::Instant::now();
    let docs = keyword_corpus(n_docs, 1.0, seed);
    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
    let vocab = build_vocab(&texts, 1000, 1).unwrap();
    let cfg = MultiLabelModelConfig { init_seed: seed, ..base };
    let examples: Vec<Example> = docs
        .iter()
        .map(|d| Example {
            seq: tokenize(&d.text, &vocab, cfg.max_len),
            target: d.labels.unwrap().iter().map(|&b| f64::from(u8::from(b))).collect(),
        })
        .collect();
    let gold: Vec<LabelVector> = docs.iter().map(|d| d.labels.unwrap()).collect();
    let mut model = MultiLabelClassifier::new(cfg.clone(), EmbeddingTable::random(vocab.len(), cfg.embedding_dim, seed)).unwrap();
    let tc = TrainingConfig { learning_rate: 1e-3, seed, batch_size, ..TrainingConfig::default() };
    let mut adam = AdamState::new(tc.adam());
    let mut r = rng(tc.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut accuracy = 0.0;
    let mut epochs = 0;
    while epochs < 200 {
        epochs += 1;
        order.shuffle(&mut r);
        for chunk in order.chunks(tc.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &examples[i]).collect();
            train_batch(&mut model, &mut adam, &batch, tc.l2, &mut r).unwrap();
        }
        let pred: Vec<LabelVector> = examples
            .iter()
            .map(|ex| {
                let mut v = [false; NUM_LABELS];
                for l in decide(&model.predict_proba(&ex.seq).unwrap(), 0.5) {
                    v[l.index()] = true;
                }
                v
            })
            .collect();
        accuracy = multilabel_report(&pred, &gold).unwrap().subset_accuracy;
        if std::env::var("OVERFIT_TRACE").is_ok() && epochs % 10 == 0 {
            eprintln!("epoch {epochs}: {accuracy:.3}");
        }
        if accuracy >= target {
            break;
        }
    }
    OverfitOutcome { epochs, subset_accuracy: accuracy, seconds: start.elapsed().as_secs_f64() }
}

// ---------------------------------------------------------------------------
// Command-line runs

/// Runs one command line (without the program name) and captures stdout.
pub fn cli(args: &[&str]) -> toxclass::error::Result<String> {
    use clap::Parser;
    let cli = toxclass::cli::Cli::try_parse_from(std::iter::once("toxclass").chain(args.iter().copied()))
        .map_err(|e| toxclass::error::Error::Config(e.to_string()))?;
    let mut out = Vec::new();
    toxclass::cli::run(cli, &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

/// Writes a keyword corpus and a small desk config into `dir`; returns the config path.
pub fn desk_project(dir: &Path, n_docs: usize, epochs: usize) -> std::path::PathBuf {
    write_csv(&dir.join("data.csv"), &keyword_corpus(n_docs, 0.6, 3));
    let config = dir.join("run.toml");
    let text = format!(
        "preset = \"desk\"\nseed = 7\noutput_dir = {:?}\n\n[dataset]\npath = {:?}\nid_column = \"id\"\n\n[training]\nepochs = {epochs}\nlearning_rate = 0.001\n",
        dir.join("out").display().to_string(),
        dir.join("data.csv").display().to_string(),
    );
    std::fs::write(&config, text).unwrap();
    config
}

/// prepare, split, both trainings and every evaluation for the project in `dir`.
pub fn full_run(dir: &Path) -> toxclass::error::Result<()> {
    let config = desk_project(dir, 120, 3);
    let c = config.to_str().unwrap();
    for cmd in [
        vec!["prepare"],
        vec!["split"],
        vec!["train-binary"],
        vec!["train-multilabel"],
        vec!["evaluate", "--stage", "binary"],
        vec!["evaluate", "--stage", "multilabel"],
        vec!["evaluate", "--stage", "pipeline"],
    ] {
        let mut args = vec!["-c", c];
        args.extend(cmd);
        cli(&args)?;
    }
    Ok(())
}

/// Every file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, acc: &mut std::collections::BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(base, &p, acc);
            } else {
                acc.insert(p.strip_prefix(base).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut acc = std::collections::BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}
