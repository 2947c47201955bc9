//! Per-class precision, recall, F1 and PR-AUC with micro and macro averages.

use serde::{Deserialize, Serialize};

use crate::model::{predict_section, ModelError, ModelParams};
use crate::text::{ClassLabel, Section};

/// Per-class counts from single-label predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: Vec<usize>,
    pub fp: Vec<usize>,
    pub fn_: Vec<usize>,
}

impl ConfusionCounts {
    pub fn new(classes: usize) -> Self {
        ConfusionCounts {
            tp: vec![0; classes],
            fp: vec![0; classes],
            fn_: vec![0; classes],
        }
    }

    /// Panics if a label is out of range or the slices differ in length.
    pub fn from_labels(gold: &[usize], pred: &[usize], classes: usize) -> Self {
        assert_eq!(gold.len(), pred.len(), "one prediction per gold label");
        let mut c = ConfusionCounts::new(classes);
        for (&g, &p) in gold.iter().zip(pred) {
            if g == p {
                c.tp[g] += 1;
            } else {
                c.fp[p] += 1;
                c.fn_[g] += 1;
            }
        }
        c
    }

    pub fn classes(&self) -> usize {
        self.tp.len()
    }

    /// Instances with gold class `c`.
    pub fn support(&self, c: usize) -> usize {
        self.tp[c] + self.fn_[c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 from counts; every `0/0` is 0.
pub fn prf_from(tp: usize, fp: usize, fn_: usize) -> Prf {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf { precision, recall, f1 }
}

pub fn prf(counts: &ConfusionCounts) -> Vec<Prf> {
    (0..counts.classes())
        .map(|c| prf_from(counts.tp[c], counts.fp[c], counts.fn_[c]))
        .collect()
}

/// Step-wise average precision: the mean, over positives, of the precision
/// at the rank where each positive is retrieved in descending-score order.
///
/// Tied scores form one retrieval step: every positive in a tie group is
/// credited with the precision at the end of the group, the value a
/// threshold at that score produces, so the result does not depend on input
/// order. `None` (with a warning) when there are no positives.
pub fn pr_auc(scores: &[f64], gold: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), gold.len(), "one score per instance");
    let positives = gold.iter().filter(|g| **g).count();
    if positives == 0 {
        log::warn!("average precision undefined without positive instances");
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut seen, mut hits, mut sum) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let mut group_hits = 0;
        while i < order.len() && scores[order[i]] == s {
            group_hits += usize::from(gold[order[i]]);
            seen += 1;
            i += 1;
        }
        hits += group_hits;
        sum += group_hits as f64 * hits as f64 / seen as f64;
    }
    Some(sum / positives as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Absent when the class has no positive instance.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: ClassLabel,
    pub support: usize,
    #[serde(flatten)]
    pub metrics: MetricsRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: Vec<ClassMetrics>,
    pub macro_avg: MetricsRow,
    pub micro_avg: MetricsRow,
    pub micro_includes_none: bool,
    pub instances: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricsOptions {
    /// Pool the `None` class into the micro averages.
    pub micro_includes_none: bool,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            micro_includes_none: true,
        }
    }
}

/// Full report from gold labels and per-instance class distributions.
///
/// Predictions are arg-max (lowest class index on ties). Macro averages are
/// unweighted means over all six classes; the macro AUC averages only the
/// classes whose AUC is defined. Micro P/R/F1 pool the counts, micro AUC is
/// the average precision of the flattened one-vs-rest score matrix.
pub fn micro_macro(gold: &[ClassLabel], probs: &[Vec<f64>], options: MetricsOptions) -> MetricsReport {
    assert_eq!(gold.len(), probs.len(), "one distribution per instance");
    let k = ClassLabel::COUNT;
    let g: Vec<usize> = gold.iter().map(|l| l.index()).collect();
    let pred: Vec<usize> = probs.iter().map(|p| crate::model::argmax(p)).collect();
    let counts = ConfusionCounts::from_labels(&g, &pred, k);
    let per_class = prf(&counts);

    let mut classes = Vec::with_capacity(k);
    for (c, label) in ClassLabel::ALL.into_iter().enumerate() {
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let is_pos: Vec<bool> = g.iter().map(|&x| x == c).collect();
        let auc = if is_pos.iter().any(|b| *b) {
            pr_auc(&scores, &is_pos)
        } else {
            None
        };
        let p = per_class[c];
        classes.push(ClassMetrics {
            label,
            support: counts.support(c),
            metrics: MetricsRow {
                precision: p.precision,
                recall: p.recall,
                f1: p.f1,
                auc,
            },
        });
    }

    let mean = |f: fn(&MetricsRow) -> f64| classes.iter().map(|c| f(&c.metrics)).sum::<f64>() / k as f64;
    let aucs: Vec<f64> = classes.iter().filter_map(|c| c.metrics.auc).collect();
    let macro_avg = MetricsRow {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        auc: (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
    };

    let pooled: Vec<usize> = (0..k)
        .filter(|&c| options.micro_includes_none || c != ClassLabel::None.index())
        .collect();
    let sum = |v: &[usize]| pooled.iter().map(|&c| v[c]).sum::<usize>();
    let micro = prf_from(sum(&counts.tp), sum(&counts.fp), sum(&counts.fn_));
    let mut flat_scores = Vec::with_capacity(probs.len() * pooled.len());
    let mut flat_gold = Vec::with_capacity(probs.len() * pooled.len());
    for (p, &gc) in probs.iter().zip(&g) {
        for &c in &pooled {
            flat_scores.push(p[c]);
            flat_gold.push(gc == c);
        }
    }
    let micro_auc = if flat_gold.iter().any(|b| *b) {
        pr_auc(&flat_scores, &flat_gold)
    } else {
        None
    };
    let correct = counts.tp.iter().sum::<usize>();
    MetricsReport {
        classes,
        macro_avg,
        micro_avg: MetricsRow {
            precision: micro.precision,
            recall: micro.recall,
            f1: micro.f1,
            auc: micro_auc,
        },
        micro_includes_none: options.micro_includes_none,
        instances: gold.len(),
        accuracy: ratio(correct, gold.len()),
    }
}

/// Predicts every labeled sentence of `sections` and scores the result.
pub fn evaluate_model(
    params: &ModelParams,
    sections: &[Section],
    options: MetricsOptions,
) -> Result<MetricsReport, ModelError> {
    let mut gold = Vec::new();
    let mut probs = Vec::new();
    for section in sections.iter().filter(|s| !s.sentences.is_empty()) {
        let encoded: Vec<_> = section.sentences.iter().map(|s| params.embeddings.encode(s)).collect();
        let preds = predict_section(params, &encoded)?;
        for (p, s) in preds.into_iter().zip(&section.sentences) {
            if let Some(label) = s.label {
                gold.push(label);
                probs.push(p.probs);
            }
        }
    }
    Ok(micro_macro(&gold, &probs, options))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

/// Aligned text table: one row per class plus macro and micro averages,
/// four columns (P, R, F1, AUC) per model.
pub fn render_table(models: &[(&str, &MetricsReport)]) -> String {
    const LABEL_W: usize = 16;
    const COL_W: usize = 6;
    let block = 4 * COL_W;
    let mut out = String::new();
    out.push_str(&format!("{:LABEL_W$}", ""));
    for (name, _) in models {
        out.push_str(&format!(" | {name:^block$}"));
    }
    out.push('\n');
    out.push_str(&format!("{:LABEL_W$}", "Gold Class"));
    for _ in models {
        out.push_str(" | ");
        for h in ["P", "R", "F1", "AUC"] {
            out.push_str(&format!("{h:>COL_W$}"));
        }
    }
    out.push('\n');
    out.push_str(&"-".repeat(LABEL_W + models.len() * (block + 3)));
    out.push('\n');
    let mut row = |label: &str, pick: &dyn Fn(&MetricsReport) -> MetricsRow| {
        out.push_str(&format!("{label:LABEL_W$}"));
        for (_, r) in models {
            let m = pick(r);
            out.push_str(" | ");
            for v in [Some(m.precision), Some(m.recall), Some(m.f1), m.auc] {
                out.push_str(&format!("{:>COL_W$}", cell(v)));
            }
        }
        out.push('\n');
    };
    for (i, label) in ClassLabel::ALL.iter().enumerate() {
        row(label.display_name(), &|r: &MetricsReport| r.classes[i].metrics);
    }
    row("Macro-average", &|r: &MetricsReport| r.macro_avg);
    row("Micro-average", &|r: &MetricsReport| r.micro_avg);
    out
}

impl MetricsReport {
    pub fn to_table(&self, model: &str) -> String {
        render_table(&[(model, self)])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_is_harmonic_mean() {
        let p = prf_from(1, 1, 0);
        assert_eq!((p.precision, p.recall), (0.5, 1.0));
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(prf_from(0, 0, 0), Prf { precision: 0.0, recall: 0.0, f1: 0.0 });
    }

    #[test]
    fn average_precision_examples() {
        let ap = pr_auc(&[0.9, 0.8, 0.3], &[true, false, true]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(pr_auc(&[0.9, 0.8, 0.1], &[true, true, false]), Some(1.0));
        assert_eq!(pr_auc(&[0.2], &[true]), Some(1.0));
        assert_eq!(pr_auc(&[0.2, 0.4], &[false, false]), None);
    }

    #[test]
    fn ties_are_order_independent() {
        let a = pr_auc(&[0.5, 0.5, 0.1], &[true, false, true]).unwrap();
        let b = pr_auc(&[0.5, 0.5, 0.1], &[false, true, true]).unwrap();
        assert_eq!(a, b);
        assert!((a - (0.5 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    fn one_hot(c: usize) -> Vec<f64> {
        let mut v = vec![0.0; 6];
        v[c] = 1.0;
        v
    }

    #[test]
    fn perfect_predictions() {
        let gold: Vec<ClassLabel> = ClassLabel::ALL.iter().cycle().take(18).copied().collect();
        let probs: Vec<Vec<f64>> = gold.iter().map(|g| one_hot(g.index())).collect();
        let r = micro_macro(&gold, &probs, MetricsOptions::default());
        assert_eq!(r.macro_avg.f1, 1.0);
        assert_eq!(r.micro_avg.f1, 1.0);
        assert_eq!(r.macro_avg.auc, Some(1.0));
    }

    #[test]
    fn micro_equals_accuracy() {
        let gold = [ClassLabel::None, ClassLabel::Obligation, ClassLabel::Prohibition, ClassLabel::None];
        let probs = vec![one_hot(0), one_hot(2), one_hot(2), one_hot(1)];
        let r = micro_macro(&gold, &probs, MetricsOptions::default());
        assert_eq!(r.micro_avg.precision, 0.5);
        assert_eq!(r.micro_avg.recall, 0.5);
        assert_eq!(r.micro_avg.f1, 0.5);
        assert_eq!(r.accuracy, 0.5);
    }

    #[test]
    fn table_has_eight_rows_of_four_columns() {
        let gold = [ClassLabel::None, ClassLabel::Obligation];
        let probs = vec![one_hot(0), one_hot(0)];
        let r = micro_macro(&gold, &probs, MetricsOptions::default());
        let t = r.to_table("BILSTM");
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3 + 8);
        assert!(lines[3].starts_with("None"));
        assert!(lines[10].starts_with("Micro-average"));
        for l in &lines[3..] {
            assert_eq!(l.split('|').nth(1).unwrap().split_whitespace().count(), 4);
        }
    }
}
