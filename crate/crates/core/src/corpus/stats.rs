use serde::{Deserialize, Serialize};

use super::{Document, Label, NUM_LABELS};

/// Per-class counts and totals in the layout of the dataset summary table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub toxic: usize,
    pub non_toxic: usize,
    /// Documents without a toxic flag or labels.
    pub unlabeled: usize,
    /// Positive count per label, in label order.
    pub per_class: [usize; NUM_LABELS],
    /// `cardinality[k]` = number of labelled documents carrying exactly k labels.
    pub cardinality: [usize; NUM_LABELS + 1],
}

impl DatasetStats {
    pub fn class_count(&self, label: Label) -> usize {
        self.per_class[label.index()]
    }

    /// Plain-text table, one class per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<12}{:>10}\n", "class", "instances"));
        for l in Label::ALL {
            out.push_str(&format!("{:<12}{:>10}\n", l.name(), self.class_count(l)));
        }
        out.push_str(&format!("{:<12}{:>10}\n", "toxic", self.toxic));
        out.push_str(&format!("{:<12}{:>10}\n", "non-toxic", self.non_toxic));
        out.push_str(&format!("{:<12}{:>10}\n", "total", self.total));
        out
    }
}

pub fn stats(documents: &[Document]) -> DatasetStats {
    let mut s = DatasetStats { total: documents.len(), ..DatasetStats::default() };
    for d in documents {
        match d.is_toxic() {
            Some(true) => s.toxic += 1,
            Some(false) => s.non_toxic += 1,
            None => s.unlabeled += 1,
        }
        if let Some(labels) = d.labels {
            let mut k = 0;
            for (count, &on) in s.per_class.iter_mut().zip(labels.iter()) {
                if on {
                    *count += 1;
                    k += 1;
                }
            }
            s.cardinality[k] += 1;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty() {
        assert_eq!(stats(&[]), DatasetStats::default());
    }

    #[test]
    fn one_multi_label_document() {
        let d = Document::with_labels("1", "x", [true, false, false, false, false, true]);
        let s = stats(&[d]);
        assert_eq!(s.class_count(Label::Vulgar), 1);
        assert_eq!(s.class_count(Label::Insult), 1);
        assert_eq!(s.class_count(Label::Hate), 0);
        assert_eq!(s.toxic, 1);
        assert_eq!(s.cardinality[2], 1);
    }

    #[test]
    fn totals_add_up() {
        let docs = vec![
            Document::with_labels("1", "a", [true, true, false, false, false, false]),
            Document::with_labels("2", "b", [false; 6]),
            Document::unlabeled("3", "c"),
            Document { id: "4".into(), text: "d".into(), toxic: Some(true), labels: None },
        ];
        let s = stats(&docs);
        assert_eq!(s.total, 4);
        assert_eq!(s.toxic + s.non_toxic + s.unlabeled, s.total);
        assert_eq!(s.toxic, 2);
        assert!(s.per_class.iter().sum::<usize>() >= 1);
        assert!(s.render().contains("vulgar"));
    }
}
