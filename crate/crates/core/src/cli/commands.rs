use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{EmbeddingKind, RunConfig};
use super::data::{
    decision_names, fold_docs, parse_names, read_jsonl, write_jsonl, write_text, Layout, PredictionRecord, PreparedDoc,
};
use crate::corpus::{build_vocab, ingest, DatasetFormat, FileKind, stats, stratified_split, write_split, Document, Label, LabelVector, Vocabulary};
use crate::embedding::{load_table, EmbeddingTable};
use crate::error::{Error, Result};
use crate::explain::{explain_instance, BinaryText, Explanation, MultiLabelText, TextClassifier};
use crate::metrics::{binary_report, cohens_kappa, multilabel_report, roc_auc, trustworthiness, ClassReport};
use crate::models::{
    decide, load_checkpoint, save_checkpoint, train, BinaryClassifier, Classifier, ModelKind, MultiLabelClassifier,
    Network, TextEncoder, TrainedModel, TwoStage,
};

fn say(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn json_pretty<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn layout(cfg: &RunConfig) -> Result<Layout> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    Ok(Layout::new(&cfg.output_dir))
}

fn load_prepared(l: &Layout) -> Result<Vec<PreparedDoc>> {
    let p = l.prepared();
    if !p.exists() {
        return Err(Error::Data(format!("{} not found; run `prepare` first", p.display())));
    }
    read_jsonl(&p)
}

#[derive(Serialize)]
struct PrepareSummary {
    documents: usize,
    vocab_size: usize,
    vocab_hash: String,
    empty_after_cleaning: usize,
}

pub fn prepare(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let l = layout(cfg)?;
    let docs = ingest(cfg.dataset.require_path()?, &cfg.dataset.format()?)?;
    if docs.is_empty() {
        return Err(Error::Data("dataset has no rows".into()));
    }
    let pre = cfg.preprocess.build()?;
    let cleaned: Vec<String> = docs.iter().map(|d| crate::corpus::preprocess(&d.text, &pre)).collect();
    let vocab = build_vocab(&cleaned, cfg.vocab.max_size, cfg.vocab.min_freq)?;
    let prepared: Vec<PreparedDoc> = docs
        .iter()
        .zip(&cleaned)
        .map(|(d, text)| PreparedDoc {
            id: d.id.clone(),
            text: text.clone(),
            toxic: d.toxic,
            labels: d.labels,
            tokens: text.split_whitespace().map(|w| vocab.id(w)).collect(),
        })
        .collect();
    write_jsonl(&l.prepared(), &prepared)?;
    vocab.save(l.vocab())?;
    let summary = PrepareSummary {
        documents: prepared.len(),
        vocab_size: vocab.len(),
        vocab_hash: vocab.hash(),
        empty_after_cleaning: prepared.iter().filter(|d| d.tokens.is_empty()).count(),
    };
    write_text(&l.root.join("prepare.json"), &json_pretty(&summary)?)?;
    say(out, &format!("prepared {} documents, vocabulary of {} tokens\n", summary.documents, summary.vocab_size))
}

pub fn split(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let l = layout(cfg)?;
    let docs: Vec<Document> = load_prepared(&l)?.iter().map(PreparedDoc::document).collect();
    let folds = stratified_split(&docs, &cfg.split_spec())?;
    write_split(l.split_dir(), &docs, &folds)?;
    say(out, &format!("train {}, val {}, test {}\n", folds.train.len(), folds.val.len(), folds.test.len()))
}

fn build_embedding(cfg: &RunConfig, vocab: &Vocabulary, dim: usize) -> Result<EmbeddingTable> {
    let table = match cfg.embedding.source {
        EmbeddingKind::Random => EmbeddingTable::random(vocab.len(), dim, cfg.embedding_seed()),
        EmbeddingKind::File => {
            let path = cfg.embedding.path.as_ref().ok_or_else(|| Error::Config("embedding.path is not set".into()))?;
            load_table(path, vocab)?
        }
    };
    if table.dim() != dim {
        return Err(Error::Config(format!("embedding file has dimension {}, model expects {dim}", table.dim())));
    }
    Ok(table)
}

fn fold_examples<F>(l: &Layout, docs: &[PreparedDoc], fold: &str, keep: impl Fn(&PreparedDoc) -> Result<bool>, make: F) -> Result<Vec<crate::models::Example>>
where
    F: Fn(&PreparedDoc) -> Result<crate::models::Example>,
{
    let mut v = Vec::new();
    for d in fold_docs(docs, &l.fold(fold))? {
        if keep(d)? {
            v.push(make(d)?);
        }
    }
    Ok(v)
}

fn finish_training(
    l: &Layout,
    stage: &str,
    model: TrainedModel,
    out: &mut dyn Write,
) -> Result<()> {
    save_checkpoint(&model, l.checkpoint(stage))?;
    write_text(&l.history(stage), &json_pretty(&model.history)?)?;
    let last = model.history.epochs.last().expect("epoch 0 always recorded");
    say(
        out,
        &format!(
            "{stage}: {} epochs, best epoch {}, final train loss {:.6}{}\n",
            model.history.epochs.len() - 1,
            model.history.best_epoch,
            last.train_loss,
            last.val_loss.map(|v| format!(", val loss {v:.6}")).unwrap_or_default()
        ),
    )
}

pub fn train_binary(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let l = layout(cfg)?;
    let docs = load_prepared(&l)?;
    let vocab = Vocabulary::load(l.vocab())?;
    let len = cfg.binary.max_len;
    let train_set = fold_examples(&l, &docs, "train", |_| Ok(true), |d| d.binary_example(len))?;
    let val_set = fold_examples(&l, &docs, "val", |_| Ok(true), |d| d.binary_example(len))?;
    let model = BinaryClassifier::new(cfg.binary.clone(), build_embedding(cfg, &vocab, cfg.binary.embedding_dim)?)?;
    let tc = cfg.training_config();
    let trained = train(model, &train_set, &val_set, &tc)?;
    let tm = TrainedModel { classifier: Classifier::Binary(trained.model), training: tc, vocab_hash: vocab.hash(), history: trained.history };
    finish_training(&l, "binary", tm, out)
}

pub fn train_multilabel(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let l = layout(cfg)?;
    let docs = load_prepared(&l)?;
    let vocab = Vocabulary::load(l.vocab())?;
    let len = cfg.multilabel.max_len;
    let toxic = |d: &PreparedDoc| d.gold_toxic();
    let train_set = fold_examples(&l, &docs, "train", toxic, |d| d.multilabel_example(len))?;
    let val_set = fold_examples(&l, &docs, "val", toxic, |d| d.multilabel_example(len))?;
    let model = MultiLabelClassifier::new(cfg.multilabel.clone(), build_embedding(cfg, &vocab, cfg.multilabel.embedding_dim)?)?;
    let tc = cfg.training_config();
    let trained = train(model, &train_set, &val_set, &tc)?;
    let tm = TrainedModel { classifier: Classifier::MultiLabel(trained.model), training: tc, vocab_hash: vocab.hash(), history: trained.history };
    finish_training(&l, "multilabel", tm, out)
}

/// Paths to the artifacts `classify`, `evaluate` and `explain` read.
#[derive(Debug, Clone, Default)]
pub struct ModelPaths {
    pub vocab: Option<PathBuf>,
    pub binary: Option<PathBuf>,
    pub multilabel: Option<PathBuf>,
}

struct Loaded {
    encoder: TextEncoder,
    vocab_hash: String,
}

fn load_encoder(cfg: &RunConfig, l: &Layout, paths: &ModelPaths) -> Result<Loaded> {
    let vocab = Vocabulary::load(paths.vocab.clone().unwrap_or_else(|| l.vocab()))?;
    let vocab_hash = vocab.hash();
    Ok(Loaded { encoder: TextEncoder::new(cfg.preprocess.build()?, vocab), vocab_hash })
}

fn checked(model: TrainedModel, vocab_hash: &str, path: &Path) -> Result<Classifier> {
    if model.vocab_hash != vocab_hash {
        return Err(Error::Checkpoint(format!("{} was trained with a different vocabulary", path.display())));
    }
    Ok(model.classifier)
}

fn load_binary(l: &Layout, paths: &ModelPaths, hash: &str) -> Result<BinaryClassifier> {
    let p = paths.binary.clone().unwrap_or_else(|| l.checkpoint("binary"));
    checked(load_checkpoint(&p, Some(ModelKind::Binary))?, hash, &p)?.into_binary()
}

fn load_multilabel(l: &Layout, paths: &ModelPaths, hash: &str) -> Result<MultiLabelClassifier> {
    let p = paths.multilabel.clone().unwrap_or_else(|| l.checkpoint("multilabel"));
    checked(load_checkpoint(&p, Some(ModelKind::MultiLabel))?, hash, &p)?.into_multilabel()
}

/// Documents to classify: a CSV/TSV file read with the configured id and
/// text columns, a JSON-lines file with `text` (and optional `id`) fields, or
/// plain text with one document per line.
pub fn read_inputs(cfg: &RunConfig, path: &Path) -> Result<Vec<(String, String)>> {
    #[derive(serde::Deserialize)]
    struct Row {
        id: Option<serde_json::Value>,
        text: String,
    }
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext == "csv" || ext == "tsv" {
        let delimiter = if ext == "csv" { ',' } else { '\t' };
        let format = DatasetFormat { kind: FileKind::Delimited { delimiter }, ..cfg.dataset.format()? }.unlabeled();
        return Ok(ingest(path, &format)?.into_iter().map(|d| (d.id, d.text)).collect());
    }
    if ext == "jsonl" || ext == "json" {
        let rows: Vec<Row> = read_jsonl(path)?;
        Ok(rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let id = match r.id {
                    Some(serde_json::Value::String(s)) => s,
                    Some(v) => v.to_string(),
                    None => i.to_string(),
                };
                (id, r.text)
            })
            .collect())
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(text.lines().enumerate().filter(|(_, t)| !t.trim().is_empty()).map(|(i, t)| (i.to_string(), t.to_string())).collect())
    }
}

pub fn classify(cfg: &RunConfig, paths: &ModelPaths, inputs: &[(String, String)], output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let l = Layout::new(&cfg.output_dir);
    let loaded = load_encoder(cfg, &l, paths)?;
    let binary = load_binary(&l, paths, &loaded.vocab_hash)?;
    let multilabel = load_multilabel(&l, paths, &loaded.vocab_hash)?;
    let pipeline = TwoStage::new(loaded.encoder, binary, multilabel)?.with_thresholds(cfg.thresholds)?;
    let mut records = Vec::with_capacity(inputs.len());
    for (id, text) in inputs {
        let r = pipeline.classify(text)?;
        records.push(PredictionRecord {
            id: Some(id.clone()),
            labels: decision_names(&r.decision),
            p_toxic: Some(r.p_toxic),
            label_probs: r.label_probs,
            gold: None,
        });
    }
    match output {
        Some(p) => {
            write_jsonl(p, &records)?;
            let toxic = records.iter().filter(|r| r.labels.first().is_some_and(|x| x != super::data::NON_TOXIC)).count();
            say(out, &format!("classified {} documents, {toxic} toxic\n", records.len()))
        }
        None => {
            for r in &records {
                say(out, &(serde_json::to_string(r)? + "\n"))?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Binary,
    MultiLabel,
    Pipeline,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Binary => "binary",
            Stage::MultiLabel => "multilabel",
            Stage::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LabelAuc {
    pub class: String,
    /// `None` when the gold column holds a single class.
    pub auc: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct EvaluationReport {
    pub source: String,
    pub instances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary: Option<ClassReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary_auc: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multilabel: Option<ClassReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_auc: Option<Vec<LabelAuc>>,
}

#[derive(Default)]
struct EvalRows {
    pred_toxic: Vec<bool>,
    gold_toxic: Vec<bool>,
    p_toxic: Vec<Option<f64>>,
    pred_labels: Vec<LabelVector>,
    gold_labels: Vec<LabelVector>,
    label_probs: Vec<Option<[f64; 6]>>,
}

fn write_evaluation(dir: &Path, source: &str, rows: &EvalRows, with_binary: bool, with_labels: bool, out: &mut dyn Write) -> Result<()> {
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let mut summary = String::new();
    let instances = rows.gold_toxic.len().max(rows.gold_labels.len());
    let mut report = EvaluationReport { source: source.into(), instances, binary: None, binary_auc: None, multilabel: None, label_auc: None };
    if with_binary {
        let r = binary_report(&rows.pred_toxic, &rows.gold_toxic)?;
        files.push((dir.join("confusion_binary.csv"), r.confusion_csv()?));
        summary += &format!("binary (toxic vs non-toxic)\n{}", r.render());
        if let Some(scores) = rows.p_toxic.iter().copied().collect::<Option<Vec<f64>>>() {
            let auc = match roc_auc(&scores, &rows.gold_toxic) {
                Ok(curve) => {
                    files.push((dir.join("roc_binary.csv"), curve.to_csv()));
                    summary += &format!("AUC {:.4}\n", curve.auc);
                    Some(curve.auc)
                }
                Err(_) => None,
            };
            report.binary_auc = Some(auc);
        }
        report.binary = Some(r);
    }
    if with_labels {
        let r = multilabel_report(&rows.pred_labels, &rows.gold_labels)?;
        files.push((dir.join("confusion_multilabel.csv"), r.confusion_csv()?));
        summary += &format!("multi-label\n{}", r.render());
        if let Some(probs) = rows.label_probs.iter().copied().collect::<Option<Vec<[f64; 6]>>>() {
            let mut aucs = Vec::new();
            for label in Label::ALL {
                let scores: Vec<f64> = probs.iter().map(|p| p[label.index()]).collect();
                let gold: Vec<bool> = rows.gold_labels.iter().map(|g| g[label.index()]).collect();
                let auc = match roc_auc(&scores, &gold) {
                    Ok(curve) => {
                        files.push((dir.join(format!("roc_{}.csv", label.name())), curve.to_csv()));
                        Some(curve.auc)
                    }
                    Err(_) => None,
                };
                aucs.push(LabelAuc { class: label.name().into(), auc });
            }
            report.label_auc = Some(aucs);
        }
        report.multilabel = Some(r);
    }
    write_text(&dir.join("report.json"), &json_pretty(&report)?)?;
    for (p, body) in files {
        write_text(&p, &body)?;
    }
    say(out, &summary)?;
    say(out, &format!("wrote {}\n", dir.join("report.json").display()))
}

pub fn evaluate(cfg: &RunConfig, paths: &ModelPaths, stage: Stage, fold: &str, out: &mut dyn Write) -> Result<()> {
    let l = layout(cfg)?;
    let docs = load_prepared(&l)?;
    let selected = fold_docs(&docs, &l.fold(fold))?;
    let loaded = load_encoder(cfg, &l, paths)?;
    let mut rows = EvalRows::default();
    let thr = cfg.thresholds;
    match stage {
        Stage::Binary => {
            let model = load_binary(&l, paths, &loaded.vocab_hash)?;
            for d in selected {
                let p = model.predict_proba(&d.sequence(model.max_len()))?;
                rows.p_toxic.push(Some(p));
                rows.pred_toxic.push(p >= thr.binary);
                rows.gold_toxic.push(d.gold_toxic()?);
            }
        }
        Stage::MultiLabel => {
            let model = load_multilabel(&l, paths, &loaded.vocab_hash)?;
            for d in selected {
                if !d.gold_toxic()? {
                    continue;
                }
                let probs = model.predict_proba(&d.sequence(model.max_len()))?;
                let mut pred = [false; 6];
                for lab in decide(&probs, thr.label) {
                    pred[lab.index()] = true;
                }
                rows.pred_labels.push(pred);
                rows.gold_labels.push(d.labels.unwrap_or([false; 6]));
                rows.label_probs.push(Some(probs));
            }
            if rows.gold_labels.is_empty() {
                return Err(Error::Data(format!("fold {fold} has no toxic documents to evaluate")));
            }
        }
        Stage::Pipeline => {
            let binary = load_binary(&l, paths, &loaded.vocab_hash)?;
            let multilabel = load_multilabel(&l, paths, &loaded.vocab_hash)?;
            for d in selected {
                let p = binary.predict_proba(&d.sequence(binary.max_len()))?;
                let r = crate::models::route(p, thr, || multilabel.predict_proba(&d.sequence(multilabel.max_len())))?;
                rows.p_toxic.push(Some(p));
                rows.pred_toxic.push(r.decision.is_toxic());
                rows.gold_toxic.push(d.gold_toxic()?);
                let mut pred = [false; 6];
                for lab in r.decision.labels() {
                    pred[lab.index()] = true;
                }
                rows.pred_labels.push(pred);
                rows.gold_labels.push(d.labels.unwrap_or([false; 6]));
                rows.label_probs.push(None);
            }
        }
    }
    let with_binary = stage != Stage::MultiLabel;
    let with_labels = stage != Stage::Binary;
    write_evaluation(&l.eval_dir(stage.name()), &format!("{} on {fold}", stage.name()), &rows, with_binary, with_labels, out)
}

/// Scores a predictions file (the `classify` output format). Gold comes from
/// each record's `gold` field or, failing that, from the prepared data by id.
pub fn evaluate_predictions(cfg: &RunConfig, predictions: &Path, out: &mut dyn Write) -> Result<()> {
    let l = layout(cfg)?;
    let records: Vec<PredictionRecord> = read_jsonl(predictions)?;
    if records.is_empty() {
        return Err(Error::Data(format!("{} holds no predictions", predictions.display())));
    }
    let prepared = if records.iter().any(|r| r.gold.is_none()) { load_prepared(&l)? } else { Vec::new() };
    let index: HashMap<&str, &PreparedDoc> = prepared.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut rows = EvalRows::default();
    let mut issues = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let pred = match parse_names(&r.labels) {
            Ok(p) => p,
            Err(e) => {
                issues.push(crate::error::RowIssue { row: i + 1, reason: e });
                continue;
            }
        };
        let gold = match (&r.gold, &r.id) {
            (Some(g), _) => parse_names(g),
            (None, Some(id)) => index
                .get(id.as_str())
                .and_then(|d| d.labels.or_else(|| d.toxic.filter(|t| !t).map(|_| [false; 6])))
                .ok_or_else(|| format!("no gold labels for id {id:?}")),
            (None, None) => Err("record has neither gold labels nor an id".into()),
        };
        let gold = match gold {
            Ok(g) => g,
            Err(e) => {
                issues.push(crate::error::RowIssue { row: i + 1, reason: e });
                continue;
            }
        };
        rows.pred_toxic.push(pred.iter().any(|&b| b));
        rows.gold_toxic.push(gold.iter().any(|&b| b));
        rows.p_toxic.push(r.p_toxic);
        rows.pred_labels.push(pred);
        rows.gold_labels.push(gold);
        rows.label_probs.push(r.label_probs);
    }
    if !issues.is_empty() {
        return Err(Error::Validation(issues));
    }
    write_evaluation(&l.eval_dir("predictions"), &predictions.display().to_string(), &rows, true, true, out)
}

pub fn explain(
    cfg: &RunConfig,
    paths: &ModelPaths,
    stage: Stage,
    text: &str,
    classes: &[String],
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let l = Layout::new(&cfg.output_dir);
    let loaded = load_encoder(cfg, &l, paths)?;
    let cleaned = loaded.encoder.clean(text);
    let mut explanations: Vec<Explanation> = Vec::new();
    let mut run = |model: &dyn TextClassifier, k: usize, default: &[&str]| -> Result<()> {
        let names = model.class_names();
        let wanted: Vec<String> = if classes.is_empty() { default.iter().map(|s| s.to_string()).collect() } else { classes.to_vec() };
        for c in &wanted {
            let idx = names
                .iter()
                .position(|n| n.eq_ignore_ascii_case(c))
                .ok_or_else(|| Error::Config(format!("unknown class {c:?}; expected one of {names:?}")))?;
            explanations.push(explain_instance(model, &cleaned, idx, &cfg.explain_config(k))?);
        }
        Ok(())
    };
    match stage {
        Stage::Binary => {
            let model = load_binary(&l, paths, &loaded.vocab_hash)?;
            run(&BinaryText { encoder: &loaded.encoder, model: &model }, cfg.explain.k_binary, &["toxic"])?;
        }
        _ => {
            let model = load_multilabel(&l, paths, &loaded.vocab_hash)?;
            let all: Vec<&str> = Label::ALL.iter().map(|l| l.name()).collect();
            run(&MultiLabelText { encoder: &loaded.encoder, model: &model }, cfg.explain.k_multilabel, &all)?;
        }
    }
    let json = json_pretty(&explanations)?;
    match output {
        Some(p) => {
            write_text(p, &json)?;
            for e in &explanations {
                say(out, &e.render_bars(30))?;
            }
            Ok(())
        }
        None => say(out, &json),
    }
}

pub fn dataset_stats(cfg: &RunConfig, output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let docs = ingest(cfg.dataset.require_path()?, &cfg.dataset.format()?)?;
    let s = stats(&docs);
    if let Some(p) = output {
        write_text(p, &json_pretty(&s)?)?;
    }
    say(out, &s.render())
}

#[derive(Debug, Serialize)]
pub struct ClassKappa {
    pub class: String,
    pub items: usize,
    pub kappa: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct AgreementReport {
    pub items: usize,
    pub kappa: Vec<ClassKappa>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trustworthiness: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_items: Option<usize>,
}

type Annotation = (Option<bool>, Option<LabelVector>);

fn annotations(cfg: &RunConfig, path: &Path) -> Result<Vec<(String, Annotation)>> {
    Ok(ingest(path, &cfg.dataset.format()?)?.into_iter().map(|d| (d.id.clone(), (d.is_toxic(), d.labels))).collect())
}

pub fn kappa(cfg: &RunConfig, first: &Path, second: &Path, expert: Option<&Path>, output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let a = annotations(cfg, first)?;
    let b: HashMap<String, Annotation> = annotations(cfg, second)?.into_iter().collect();
    let pairs: Vec<(&String, &Annotation, &Annotation)> = a.iter().filter_map(|(id, x)| b.get(id).map(|y| (id, x, y))).collect();
    if pairs.is_empty() {
        return Err(Error::Data("the two annotation files share no document ids".into()));
    }
    let mut kappas = Vec::new();
    let toxic: Vec<(bool, bool)> = pairs.iter().filter_map(|(_, x, y)| Some((x.0?, y.0?))).collect();
    let (t1, t2): (Vec<bool>, Vec<bool>) = toxic.into_iter().unzip();
    kappas.push(ClassKappa { class: "toxic".into(), items: t1.len(), kappa: cohens_kappa(&t1, &t2).ok() });
    for label in Label::ALL {
        let (l1, l2): (Vec<bool>, Vec<bool>) =
            pairs.iter().filter_map(|(_, x, y)| Some((x.1?[label.index()], y.1?[label.index()]))).unzip();
        kappas.push(ClassKappa { class: label.name().into(), items: l1.len(), kappa: cohens_kappa(&l1, &l2).ok() });
    }
    let mut report = AgreementReport { items: pairs.len(), kappa: kappas, trustworthiness: None, control_items: None };
    if let Some(e) = expert {
        let gold = annotations(cfg, e)?;
        let a_map: HashMap<&String, &Annotation> = a.iter().map(|(id, x)| (id, x)).collect();
        let mut rows: [Vec<Annotation>; 3] = Default::default();
        for (id, g) in &gold {
            if let (Some(x), Some(y)) = (a_map.get(id), b.get(id)) {
                rows[0].push(**x);
                rows[1].push(*y);
                rows[2].push(*g);
            }
        }
        if rows[2].is_empty() {
            return Err(Error::Data("no control items shared with the expert file".into()));
        }
        report.trustworthiness = Some([trustworthiness(&rows[0], &rows[2])?, trustworthiness(&rows[1], &rows[2])?]);
        report.control_items = Some(rows[2].len());
    }
    let mut summary = format!("{} doubly annotated items\n", report.items);
    for k in &report.kappa {
        summary += &format!(
            "  {:<10} kappa {}\n",
            k.class,
            k.kappa.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into())
        );
    }
    if let Some([x, y]) = report.trustworthiness {
        summary += &format!("trustworthiness: first {x:.4}, second {y:.4}\n");
    }
    let json = json_pretty(&report)?;
    match output {
        Some(p) => {
            write_text(p, &json)?;
            say(out, &summary)
        }
        None => say(out, &json),
    }
}
