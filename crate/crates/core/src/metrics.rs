//! Imbalance-aware evaluation of a trained ensemble on a labelled split.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::boost::{argmax, BoostedEnsemble};
use crate::confusion::{build_confusion, ConfusionMatrix, MatrixForm};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Geometric mean of the per-class recalls on the diagonal of a
/// probabilistic confusion matrix; 0 as soon as one class is never
/// recognized.
pub fn g_mean(c: &ConfusionMatrix) -> Result<f64> {
    if c.form() != MatrixForm::Probabilistic {
        return Err(Error::InvalidInput("G-mean needs a probabilistic confusion matrix".into()));
    }
    let diag = c.diagonal();
    if diag.contains(&0.0) {
        return Ok(0.0);
    }
    let mean_log = diag.iter().map(|r| r.ln()).sum::<f64>() / diag.len() as f64;
    Ok(mean_log.exp())
}

/// Hand–Till multi-class AUC with the list of classes it averaged over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mauc {
    pub value: f64,
    /// Classes with no example among the labels; their pairs are skipped.
    pub skipped_classes: Vec<usize>,
}

/// Hand–Till MAUC over score rows.
///
/// For a pair of classes `(l, j)`, `Â(l|j)` is the probability that a random
/// class-`l` example has a higher column-`l` score than a random class-`j`
/// example, counting ties as ½. The result averages `(Â(l|j) + Â(j|l))/2`
/// over all pairs of classes present in `labels`.
pub fn mauc(scores: &[Vec<f64>], labels: &[usize], k: usize) -> Result<Mauc> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} score rows for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if labels.len() < 2 {
        return Err(Error::InvalidInput("MAUC needs at least 2 examples".into()));
    }
    if let Some(row) = scores.iter().find(|r| r.len() != k) {
        return Err(Error::InvalidInput(format!("score row of width {} for K = {k}", row.len())));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::InvalidInput(format!("label {y} out of range for K = {k}")));
    }
    if scores.iter().flatten().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &y) in labels.iter().enumerate() {
        members[y].push(i);
    }
    let present: Vec<usize> = (0..k).filter(|&c| !members[c].is_empty()).collect();
    let skipped_classes: Vec<usize> = (0..k).filter(|&c| members[c].is_empty()).collect();
    if present.len() < 2 {
        return Err(Error::InvalidInput("MAUC needs at least 2 classes present".into()));
    }

    let mut total = 0.0;
    for (a, &l) in present.iter().enumerate() {
        for &j in &present[a + 1..] {
            let a_lj = pairwise_auc(scores, &members[l], &members[j], l);
            let a_jl = pairwise_auc(scores, &members[j], &members[l], j);
            total += 0.5 * (a_lj + a_jl);
        }
    }
    let kp = present.len() as f64;
    Ok(Mauc {
        value: 2.0 * total / (kp * (kp - 1.0)),
        skipped_classes,
    })
}

/// `Â(l|j)` by the rank-sum formula with mid-ranks for ties.
fn pairwise_auc(scores: &[Vec<f64>], pos: &[usize], neg: &[usize], column: usize) -> f64 {
    let mut pooled: Vec<(f64, bool)> = pos
        .iter()
        .map(|&i| (scores[i][column], true))
        .chain(neg.iter().map(|&i| (scores[i][column], false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        // Ranks start..end (1-based start+1..=end) share their average.
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let n_pos = pooled[start..end].iter().filter(|p| p.1).count();
        rank_sum += mid_rank * n_pos as f64;
        start = end;
    }
    let np = pos.len() as f64;
    let nn = neg.len() as f64;
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

/// Everything measured for one ensemble on one test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub examples: usize,
    pub accuracy: f64,
    pub per_class_recall: Vec<f64>,
    pub g_mean: f64,
    pub mauc: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mauc_skipped_classes: Vec<usize>,
    pub probabilistic: ConfusionMatrix,
    pub error_focused: ConfusionMatrix,
    pub operator_norm: f64,
    pub l1_risk: f64,
}

/// Scores `test` with `e` and computes every metric from the result.
///
/// `test` must use the model's schema and, like every [`Dataset`], contains
/// each class at least once.
pub fn evaluate(e: &BoostedEnsemble, test: &Dataset) -> Result<EvaluationReport> {
    e.check_dataset(test)?;
    let scores = e.score_dataset(test)?;
    let predictions: Vec<usize> = scores.iter().map(|s| argmax(s)).collect();
    let labels = test.labels();
    let k = test.num_classes();

    let probabilistic = build_confusion(labels, &predictions, test.class_counts())?;
    let error_focused = probabilistic.error_focus()?;
    let correct = labels.iter().zip(&predictions).filter(|(y, p)| y == p).count();
    let m = mauc(&scores, labels, k)?;
    Ok(EvaluationReport {
        examples: test.len(),
        accuracy: correct as f64 / test.len() as f64,
        per_class_recall: probabilistic.diagonal(),
        g_mean: g_mean(&probabilistic)?,
        mauc: m.value,
        mauc_skipped_classes: m.skipped_classes,
        operator_norm: error_focused.operator_norm(),
        l1_risk: error_focused.l1_risk(test.priors())?,
        probabilistic,
        error_focused,
    })
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "examples        {}", self.examples)?;
        writeln!(f, "accuracy        {:.4}", self.accuracy)?;
        writeln!(f, "G-mean          {:.4}", self.g_mean)?;
        writeln!(f, "MAUC            {:.4}", self.mauc)?;
        writeln!(f, "||C||           {:.4}", self.operator_norm)?;
        writeln!(f, "l1 risk         {:.4}", self.l1_risk)?;
        let recalls: Vec<String> = self.per_class_recall.iter().map(|r| format!("{r:.3}")).collect();
        writeln!(f, "recall          {}", recalls.join(" "))?;
        writeln!(f, "error-focused confusion matrix")?;
        let k = self.error_focused.num_classes();
        for l in 0..k {
            let row: Vec<String> = self.error_focused.row(l).iter().map(|v| format!("{v:.3}")).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        Ok(())
    }
}
