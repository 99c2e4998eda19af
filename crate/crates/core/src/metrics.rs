//! Evaluation: confusion counts, precision/recall/F1, weighted reports,
//! ROC/AUC, Cohen's kappa and annotator trustworthiness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabelVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix2x2 {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix2x2 {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total()).0
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Data(format!("prediction count {a} does not match gold count {b}")));
    }
    Ok(())
}

pub fn confusion(pred: &[bool], gold: &[bool]) -> Result<ConfusionMatrix2x2> {
    check_lengths(pred.len(), gold.len())?;
    let mut c = ConfusionMatrix2x2::default();
    for (&p, &g) in pred.iter().zip(gold) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// `num/den`, or `(0, true)` when the denominator is zero.
fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when any of the three hit a zero denominator and was reported as 0.
    pub zero_division: bool,
}

pub fn prf(c: &ConfusionMatrix2x2) -> Prf {
    let (precision, zp) = ratio(c.tp, c.tp + c.fp);
    let (recall, zr) = ratio(c.tp, c.tp + c.fn_);
    let (f1, zf) = if precision + recall == 0.0 { (0.0, true) } else { (2.0 * precision * recall / (precision + recall), false) };
    Prf { precision, recall, f1, zero_division: zp || zr || zf }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold positives.
    pub support: usize,
    pub confusion: ConfusionMatrix2x2,
    pub zero_division: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub instances: usize,
    pub classes: Vec<ClassMetrics>,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    /// Fraction of rows whose whole label vector matches.
    pub subset_accuracy: f64,
    pub mean_label_accuracy: f64,
    /// True when total support is zero and the weighted figures are reported as 0.
    pub zero_support: bool,
}

impl ClassReport {
    pub fn class(&self, name: &str) -> Option<&ClassMetrics> {
        self.classes.iter().find(|c| c.class == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// `class,tp,fp,fn,tn` rows.
    pub fn confusion_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Data(format!("csv write: {e}"));
        w.write_record(["class", "tp", "fp", "fn", "tn"]).map_err(csv_err)?;
        for c in &self.classes {
            let m = c.confusion;
            w.write_record([c.class.clone(), m.tp.to_string(), m.fp.to_string(), m.fn_.to_string(), m.tn.to_string()])
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(format!("csv write: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Fixed-width table for terminals.
    pub fn render(&self) -> String {
        let mut s = format!("{:<12} {:>9} {:>9} {:>9} {:>9} {:>8}\n", "class", "accuracy", "precision", "recall", "f1", "support");
        for c in &self.classes {
            s += &format!(
                "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8}\n",
                c.class, c.accuracy, c.precision, c.recall, c.f1, c.support
            );
        }
        s += &format!(
            "{:<12} {:>9} {:>9.4} {:>9.4} {:>9.4}\n",
            "weighted", "", self.weighted_precision, self.weighted_recall, self.weighted_f1
        );
        s += &format!("subset accuracy {:.4}, mean per-label accuracy {:.4}\n", self.subset_accuracy, self.mean_label_accuracy);
        s
    }
}

/// Per-class metrics and support-weighted aggregates over `k` binary columns.
pub fn class_report<P, G>(names: &[&str], pred: &[P], gold: &[G]) -> Result<ClassReport>
where
    P: AsRef<[bool]>,
    G: AsRef<[bool]>,
{
    check_lengths(pred.len(), gold.len())?;
    if pred.is_empty() {
        return Err(Error::Data("cannot evaluate an empty prediction set".into()));
    }
    let k = names.len();
    for (i, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.as_ref().len() != k || g.as_ref().len() != k {
            return Err(Error::Data(format!("row {} has {} predicted / {} gold columns, expected {k}", i + 1, p.as_ref().len(), g.as_ref().len())));
        }
    }
    let mut classes = Vec::with_capacity(k);
    for (j, name) in names.iter().enumerate() {
        let pc: Vec<bool> = pred.iter().map(|r| r.as_ref()[j]).collect();
        let gc: Vec<bool> = gold.iter().map(|r| r.as_ref()[j]).collect();
        let conf = confusion(&pc, &gc)?;
        let m = prf(&conf);
        classes.push(ClassMetrics {
            class: name.to_string(),
            accuracy: conf.accuracy(),
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            support: conf.tp + conf.fn_,
            confusion: conf,
            zero_division: m.zero_division,
        });
    }
    let total: usize = classes.iter().map(|c| c.support).sum();
    let weighted = |f: fn(&ClassMetrics) -> f64| -> f64 {
        if total == 0 {
            0.0
        } else {
            classes.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / total as f64
        }
    };
    let exact = pred.iter().zip(gold).filter(|(p, g)| p.as_ref() == g.as_ref()).count();
    Ok(ClassReport {
        instances: pred.len(),
        weighted_precision: weighted(|c| c.precision),
        weighted_recall: weighted(|c| c.recall),
        weighted_f1: weighted(|c| c.f1),
        subset_accuracy: exact as f64 / pred.len() as f64,
        mean_label_accuracy: classes.iter().map(|c| c.accuracy).sum::<f64>() / k as f64,
        zero_support: total == 0,
        classes,
    })
}

/// Report over the six toxicity labels, in label order.
pub fn multilabel_report(pred: &[LabelVector], gold: &[LabelVector]) -> Result<ClassReport> {
    let names: Vec<&str> = Label::ALL.iter().map(|l| l.name()).collect();
    class_report(&names, pred, gold)
}

/// Two-class report (non-toxic, toxic), each class weighted by its own support.
pub fn binary_report(pred: &[bool], gold: &[bool]) -> Result<ClassReport> {
    let p: Vec<[bool; 2]> = pred.iter().map(|&x| [!x, x]).collect();
    let g: Vec<[bool; 2]> = gold.iter().map(|&x| [!x, x]).collect();
    class_report(&["non_toxic", "toxic"], &p, &g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Scores `>= threshold` are called positive; the first point uses `+inf`.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// `threshold,fpr,tpr` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            s += &format!("{:?},{:?},{:?}\n", p.threshold, p.fpr, p.tpr);
        }
        s
    }
}

/// Threshold sweep over distinct scores (tied scores share one step) and
/// trapezoidal AUC.
pub fn roc_auc(scores: &[f64], gold: &[bool]) -> Result<RocCurve> {
    check_lengths(scores.len(), gold.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score in ROC input".into()));
    }
    let pos = gold.iter().filter(|&&g| g).count();
    let neg = gold.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Numeric("ROC/AUC undefined: gold labels contain a single class".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if gold[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = *points.last().expect("non-empty");
        let point = RocPoint { threshold: s, fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64 };
        auc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / 2.0;
        points.push(point);
    }
    Ok(RocCurve { points, auc })
}

/// Cohen's kappa between two annotators over any label type.
pub fn cohens_kappa<T: Ord>(a1: &[T], a2: &[T]) -> Result<f64> {
    check_lengths(a1.len(), a2.len())?;
    if a1.is_empty() {
        return Err(Error::Data("kappa over zero items".into()));
    }
    let n = a1.len() as f64;
    let agree = a1.iter().zip(a2).filter(|(x, y)| x == y).count();
    let p_o = agree as f64 / n;
    let mut marg: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    for x in a1 {
        marg.entry(x).or_default().0 += 1;
    }
    for y in a2 {
        marg.entry(y).or_default().1 += 1;
    }
    let p_e: f64 = marg.values().map(|&(c1, c2)| (c1 as f64 / n) * (c2 as f64 / n)).sum();
    if p_e == 1.0 {
        return if agree == a1.len() {
            Ok(1.0)
        } else {
            Err(Error::Numeric("kappa undefined: chance agreement is 1".into()))
        };
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Fraction of control items on which the annotator matches the expert.
pub fn trustworthiness<T: PartialEq>(annotator: &[T], expert: &[T]) -> Result<f64> {
    check_lengths(annotator.len(), expert.len())?;
    if annotator.is_empty() {
        return Err(Error::Data("trustworthiness over zero control items".into()));
    }
    let agree = annotator.iter().zip(expert).filter(|(a, e)| a == e).count();
    Ok(agree as f64 / annotator.len() as f64)
}
