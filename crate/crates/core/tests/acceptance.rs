//! Acceptance run: one PASS/FAIL/SKIP line per criterion, nonzero exit on any FAIL.
//!
//! Criteria 9 and 10 need the public dataset (`TOXCLASS_PUBLIC_DATASET`,
//! optionally `TOXCLASS_PUBLIC_CONFIG` for its column layout); criterion 10
//! also needs an exported embedding table (`TOXCLASS_EMBEDDINGS`).

mod common;

use std::cell::Cell;
use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use toxclass::cli::RunConfig;
use toxclass::corpus::{ingest, stats, stratified_split, Label, SplitSpec, TokenSequence, NUM_LABELS};
use toxclass::embedding::EmbeddingTable;
use toxclass::explain::{explain_instance, ExplainConfig, FnClassifier, DEFAULT_KERNEL_WIDTH};
use toxclass::metrics::{class_report, cohens_kappa, roc_auc};
use toxclass::models::{
    route, BinaryClassifier, BinaryModelConfig, Decision, MultiLabelClassifier, MultiLabelModelConfig, Objective,
    Thresholds,
};
use toxclass::neural::{bce, grad_check, Attention, BiLstm, Lstm, DEFAULT_STEP};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn outcome(r: Result<String, String>) -> Outcome {
    match r {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

fn gradients() -> Outcome {
    outcome((|| {
        let start = Instant::now();
        let mut worst_layer = 0.0f64;
        for seed in [1, 2, 3] {
            for (name, report) in common::layer_reports(seed) {
                ensure(report.entries_checked > 0, format!("{name}: nothing checked"))?;
                ensure(report.max_relative_error < 1e-6, format!("{name} seed {seed}: {:e}", report.max_relative_error))?;
                worst_layer = worst_layer.max(report.max_relative_error);
            }
        }
        let vocab = 15;
        let mut worst_stack = 0.0f64;
        for seed in common::smooth_toy_fixtures(vocab, 2) {
            let examples = common::toy_examples(vocab, seed);
            let mut obj = Objective::new(common::toy_multilabel(vocab), &examples, 1e-3);
            let report = grad_check(&mut obj, DEFAULT_STEP);
            ensure(report.max_relative_error < 1e-4, format!("toy stack fixture {seed}: {:e}", report.max_relative_error))?;
            worst_stack = worst_stack.max(report.max_relative_error);
        }
        let secs = start.elapsed().as_secs_f64();
        ensure(secs < 60.0, format!("took {secs:.1}s"))?;
        Ok(format!("layers max rel err {worst_layer:.1e}, toy stack {worst_stack:.1e}, {secs:.1}s"))
    })())
}

fn fixed_points() -> Outcome {
    outcome((|| {
        let x = common::random_matrix(7, 5, &mut common::rng(3));
        let mask = [1, 1, 1, 1, 1, 0, 0];
        for reverse in [false, true] {
            let (h, _) = Lstm::zeros("l", 5, 4).forward(x.view(), &mask, reverse).map_err(|e| e.to_string())?;
            ensure(h.iter().all(|&v| v == 0.0), "LSTM state not zero")?;
        }
        let (h, _) = BiLstm::zeros("b", 5, 4).forward(x.view(), &mask).map_err(|e| e.to_string())?;
        ensure(h.iter().all(|&v| v == 0.0), "BiLSTM state not zero")?;

        let h: Array2<f64> = common::random_matrix(5, 3, &mut common::rng(8));
        let att = Attention::zeros("a", 3).forward(h.view(), &[1; 5]).map_err(|e| e.to_string())?;
        ensure(att.alpha.iter().all(|a| (a - 0.2).abs() < 1e-15), "attention weights not uniform")?;
        let mean = h.mean_axis(ndarray::Axis(0)).unwrap();
        ensure(att.context.iter().zip(&mean).all(|(z, m)| (z - m).abs() < 1e-12), "context is not the mean")?;

        let seq = TokenSequence::from_ids(&[3, 4, 5, 6], 32);
        let b = BinaryClassifier::zeroed(BinaryModelConfig::desk(), EmbeddingTable::random(10, 32, 1))
            .map_err(|e| e.to_string())?;
        ensure(b.predict_proba(&seq).map_err(|e| e.to_string())? == 0.5, "binary output")?;
        let m = MultiLabelClassifier::zeroed(MultiLabelModelConfig::desk(), EmbeddingTable::random(10, 32, 1))
            .map_err(|e| e.to_string())?;
        ensure(m.predict_proba(&seq).map_err(|e| e.to_string())? == [0.5; 6], "multi-label output")?;
        let l = bce(&[0.5], &[1.0]);
        ensure((l - std::f64::consts::LN_2).abs() < 1e-12, format!("BCE(0.5, 1) = {l}"))?;
        Ok("all fixed points hold".into())
    })())
}

fn metric_oracles() -> Outcome {
    outcome((|| {
        let mut r = common::rng(2024);
        for i in 0..1000 {
            let (pred, gold) = common::random_instance(&mut r);
            let names: Vec<String> = (0..gold[0].len()).map(|j| format!("c{j}")).collect();
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            let ours = class_report(&names, &pred, &gold).map_err(|e| e.to_string())?;
            let o = common::oracle_report(&pred, &gold);
            for (a, b) in [
                (ours.weighted_precision, o.weighted_precision),
                (ours.weighted_recall, o.weighted_recall),
                (ours.weighted_f1, o.weighted_f1),
                (ours.subset_accuracy, o.subset_accuracy),
            ] {
                ensure((a - b).abs() <= 1e-12, format!("aggregate instance {i}: {a} vs {b}"))?;
            }
        }
        let mut r = common::rng(7);
        for i in 0..1000 {
            let n = r.gen_range(1..=50);
            let cats = r.gen_range(2..=4u8);
            let agree = r.gen_range(0.0..1.0);
            let a: Vec<u8> = (0..n).map(|_| r.gen_range(0..cats)).collect();
            let b: Vec<u8> = a.iter().map(|&x| if r.gen_bool(agree) { x } else { r.gen_range(0..cats) }).collect();
            match (common::oracle_kappa(&a, &b), cohens_kappa(&a, &b)) {
                (Some(k), Ok(ours)) => ensure((k - ours).abs() <= 1e-12, format!("kappa instance {i}"))?,
                (None, Ok(ours)) => ensure(ours == 1.0, format!("kappa instance {i}: degenerate gave {ours}"))?,
                (None, Err(_)) => {}
                (Some(_), Err(e)) => return Err(format!("kappa instance {i}: {e}")),
            }
        }
        let mut r = common::rng(11);
        for i in 0..1000 {
            let n = r.gen_range(2..=50);
            let levels = r.gen_range(2..=20);
            let gold: Vec<bool> = (0..n).map(|_| r.gen_bool(0.4)).collect();
            if gold.iter().all(|&g| g) || gold.iter().all(|&g| !g) {
                continue;
            }
            let scores: Vec<f64> = (0..n).map(|_| r.gen_range(0..levels) as f64 / levels as f64).collect();
            let ours = roc_auc(&scores, &gold).map_err(|e| e.to_string())?.auc;
            ensure((ours - common::oracle_auc(&scores, &gold)).abs() <= 1e-12, format!("AUC instance {i}"))?;
        }
        ensure(cohens_kappa(&[1, 1, 0, 0], &[1, 0, 0, 1]).map_err(|e| e.to_string())? == 0.0, "kappa worked example")?;
        let gold = [[true, false], [true, false], [true, false], [false, true]];
        let pred = [[true, false], [true, false], [false, false], [false, true]];
        let w = class_report(&["a", "b"], &pred, &gold).map_err(|e| e.to_string())?.weighted_f1;
        ensure((w - 0.85).abs() < 1e-15, format!("weighted F1 worked example gave {w}"))?;
        Ok("3000 random instances and both worked examples agree".into())
    })())
}

fn stratification() -> Outcome {
    outcome((|| {
        let docs = common::stratification_corpus(600, 5);
        let spec = SplitSpec { train_fraction: 0.6, val_fraction_of_rest: 0.6, seed: 17 };
        let folds = stratified_split(&docs, &spec).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for (fold, frac) in folds.as_array().iter().zip([0.6, 0.24, 0.16]) {
            ensure((fold.len() as f64 - frac * 600.0).abs() <= 1.0, format!("fold size {}", fold.len()))?;
            for j in 0..NUM_LABELS {
                let total = docs.iter().filter(|d| d.labels.unwrap()[j]).count() as f64;
                let got = fold.iter().filter(|&&i| docs[i].labels.unwrap()[j]).count() as f64;
                worst = worst.max((got - frac * total).abs());
            }
        }
        ensure(worst <= 2.0, format!("label count off by {worst:.2}"))?;
        let all: HashSet<usize> = folds.as_array().iter().flat_map(|f| f.iter().copied()).collect();
        ensure(all.len() == 600, "folds do not partition the corpus")?;
        let again = stratified_split(&docs, &spec).map_err(|e| e.to_string())?;
        ensure(again == folds, "same seed gave different folds")?;
        let sizes: Vec<usize> = folds.as_array().iter().map(|f| f.len()).collect();
        Ok(format!("fold sizes {sizes:?}, worst label deviation {worst:.2}"))
    })())
}

fn overfit() -> Outcome {
    outcome((|| {
        let mut parts = Vec::new();
        for n in [40, 60, 100] {
            let o = common::overfit_planted(n, 0.95, 1, 16);
            ensure(
                o.subset_accuracy >= 0.95 && o.epochs <= 200 && o.seconds < 300.0,
                format!("{n} docs: accuracy {:.3} after {} epochs, {:.1}s", o.subset_accuracy, o.epochs, o.seconds),
            )?;
            parts.push(format!("{n} docs: {} epochs {:.1}s", o.epochs, o.seconds));
        }
        Ok(parts.join(", "))
    })())
}

fn lime_fidelity() -> Outcome {
    outcome((|| {
        let mut recovered = 0;
        let mut min_r2 = f64::INFINITY;
        for seed in 0..100 {
            let planted = common::PlantedLinear::sample(seed);
            let model = FnClassifier { names: vec!["target".to_string()], f: |t: &str| Ok(vec![planted.eval_text(t)]) };
            let cfg = ExplainConfig { seed, ..ExplainConfig::binary() };
            let e = explain_instance(&model, &planted.text(), 0, &cfg).map_err(|e| e.to_string())?;
            let support = planted.support();
            let top: Vec<&str> = e.features.iter().take(support.len()).map(|w| w.word.as_str()).collect();
            let ok = support.iter().all(|&i| {
                let word = &planted.words[i];
                top.contains(&word.as_str())
                    && e.features
                        .iter()
                        .find(|w| &w.word == word)
                        .is_some_and(|w| w.weight.signum() == planted.coef[i].signum())
            });
            recovered += usize::from(ok);
            min_r2 = min_r2.min(e.r2);
            let oracle = common::exhaustive_wls(planted.words.len(), &|m| planted.eval_mask(m), DEFAULT_KERNEL_WIDTH);
            let best = (0..oracle.len()).max_by(|&a, &b| oracle[a].abs().total_cmp(&oracle[b].abs())).unwrap();
            ensure(planted.words[best] == e.features[0].word, format!("seed {seed}: top feature differs from oracle"))?;
        }
        ensure(min_r2 >= 0.9, format!("minimum R² {min_r2:.3}"))?;
        ensure(recovered >= 95, format!("support recovered in {recovered}/100"))?;
        Ok(format!("support recovered in {recovered}/100, minimum R² {min_r2:.3}"))
    })())
}

fn routing() -> Outcome {
    outcome((|| {
        let mut r = common::rng(99);
        let (mut fallback, mut negatives) = (0, 0);
        for i in 0..10_000 {
            let thr = if i % 2 == 0 {
                Thresholds::default()
            } else {
                Thresholds { binary: r.gen_range(0.05..0.95), label: r.gen_range(0.05..0.95) }
            };
            let p: f64 = r.gen();
            let scale: f64 = r.gen_range(0.1..1.0);
            let probs: [f64; 6] = std::array::from_fn(|_| r.gen::<f64>() * scale);
            let called = Cell::new(false);
            let out = route(p, thr, || {
                called.set(true);
                Ok(probs)
            })
            .map_err(|e| e.to_string())?;
            if p < thr.binary {
                negatives += 1;
                ensure(out.decision == Decision::NonToxic && !called.get(), format!("draw {i}: negative got labels"))?;
            } else {
                ensure(!out.decision.labels().is_empty(), format!("draw {i}: positive got no labels"))?;
                if probs.iter().all(|&q| q < thr.label) {
                    fallback += 1;
                    let best = (0..6).fold(0, |b, k| if probs[k] > probs[b] { k } else { b });
                    ensure(out.decision.labels() == [Label::ALL[best]], format!("draw {i}: fallback label"))?;
                }
            }
        }
        ensure(fallback > 0, "fallback never exercised")?;
        Ok(format!("{negatives} stage-1 negatives, {fallback} fallback decisions"))
    })())
}

fn determinism() -> Outcome {
    outcome((|| {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        common::full_run(a.path()).map_err(|e| e.to_string())?;
        common::full_run(b.path()).map_err(|e| e.to_string())?;
        let sa = common::snapshot(&a.path().join("out"));
        let sb = common::snapshot(&b.path().join("out"));
        ensure(sa.keys().eq(sb.keys()), "different file sets")?;
        for (k, v) in &sa {
            ensure(v == &sb[k], format!("{k} differs"))?;
        }
        Ok(format!("{} artifacts byte-identical", sa.len()))
    })())
}

fn public_config() -> Result<Option<RunConfig>, String> {
    let Ok(data) = std::env::var("TOXCLASS_PUBLIC_DATASET") else {
        return Ok(None);
    };
    let config = std::env::var("TOXCLASS_PUBLIC_CONFIG").ok();
    let set = format!("dataset.path={}", toml::Value::String(data));
    RunConfig::load(config.as_deref().map(std::path::Path::new), &[set]).map(Some).map_err(|e| e.to_string())
}

fn dataset_statistics() -> Outcome {
    let cfg = match public_config() {
        Ok(Some(c)) => c,
        Ok(None) => return Outcome::Skip("TOXCLASS_PUBLIC_DATASET not set".into()),
        Err(e) => return Outcome::Fail(e),
    };
    outcome((|| {
        let docs = ingest(cfg.dataset.require_path().map_err(|e| e.to_string())?, &cfg.dataset.format().map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let s = stats(&docs);
        let got = (s.total, s.toxic, s.non_toxic, s.per_class);
        let want = (16073, 8488, 7585, [2505, 1898, 1418, 1419, 1643, 2719]);
        ensure(got == want, format!("got {got:?}, expected {want:?}"))?;
        Ok(format!("{got:?}"))
    })())
}

fn full_scale_training() -> Outcome {
    let cfg = match public_config() {
        Ok(Some(c)) => c,
        Ok(None) => return Outcome::Skip("TOXCLASS_PUBLIC_DATASET not set".into()),
        Err(e) => return Outcome::Fail(e),
    };
    let Ok(emb) = std::env::var("TOXCLASS_EMBEDDINGS") else {
        return Outcome::Skip("TOXCLASS_EMBEDDINGS not set".into());
    };
    outcome((|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config = std::env::var("TOXCLASS_PUBLIC_CONFIG").ok();
        let sets = [
            format!("dataset.path={}", toml::Value::String(cfg.dataset.require_path().unwrap().display().to_string())),
            "embedding.source=\"file\"".to_string(),
            format!("embedding.path={}", toml::Value::String(emb)),
            format!("output_dir={}", toml::Value::String(dir.path().display().to_string())),
        ];
        let run = |cmd: &[&str]| {
            let mut args: Vec<String> = Vec::new();
            if let Some(c) = &config {
                args.extend(["-c".to_string(), c.clone()]);
            }
            for s in &sets {
                args.extend(["--set".to_string(), s.clone()]);
            }
            args.extend(cmd.iter().map(|s| s.to_string()));
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            common::cli(&refs).map_err(|e| e.to_string())
        };
        for cmd in [&["prepare"][..], &["split"], &["train-multilabel"], &["evaluate", "--stage", "multilabel"]] {
            run(cmd)?;
        }
        let text = std::fs::read_to_string(dir.path().join("eval/multilabel/report.json")).map_err(|e| e.to_string())?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let f1 = v["multilabel"]["weighted_f1"].as_f64().ok_or("report has no weighted F1")?;
        ensure((f1 - 0.86).abs() <= 0.10, format!("weighted F1 {f1:.4}"))?;
        Ok(format!("weighted F1 {f1:.4}"))
    })())
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("gradient checks", gradients),
        ("analytic fixed points", fixed_points),
        ("metric oracles", metric_oracles),
        ("split stratification", stratification),
        ("overfit smoke test", overfit),
        ("explanation fidelity", lime_fidelity),
        ("pipeline routing", routing),
        ("determinism", determinism),
        ("dataset statistics", dataset_statistics),
        ("full-scale training", full_scale_training),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| f == &id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match result {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} [{id:>2}] {name}: {detail} ({secs:.1}s)");
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
