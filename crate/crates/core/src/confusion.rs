//! Confusion matrices and the norm quantities built on them.
//!
//! A probabilistic confusion matrix `A` has entry `(l, j)` equal to the
//! fraction of class-`l` examples predicted as `j`. Zeroing its diagonal
//! gives the error-focused matrix `C`, whose operator norm is the quantity
//! the boosting loop drives down. For the error-focused matrix:
//!
//! * `‖p C‖₁` is the misclassification rate under class priors `p`;
//! * `‖C‖² ≤ Tr(CᵀC) ≤ Σ_{l≠j} c_{l,j}` since entries are at most 1;
//! * `‖p C‖₁ ≤ √K ‖C‖`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Row-sum tolerance of the probabilistic form.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Largest `K` for which the Jacobi eigensolve backs up power iteration.
pub const JACOBI_MAX_CLASSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixForm {
    RawCounts,
    Probabilistic,
    ErrorFocused,
}

/// Dense row-major `K × K` confusion matrix tagged with its form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    form: MatrixForm,
    entries: Vec<f64>,
}

impl ConfusionMatrix {
    /// Wraps entries after checking the invariants of `form`.
    pub fn from_entries(k: usize, entries: Vec<f64>, form: MatrixForm) -> Result<Self> {
        if entries.len() != k * k {
            return Err(Error::InvalidInput(format!(
                "{} entries for a {k}×{k} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite confusion entry".into()));
        }
        let row = |l: usize| &entries[l * k..(l + 1) * k];
        for l in 0..k {
            let r = row(l);
            let sum: f64 = r.iter().sum();
            let ok = match form {
                MatrixForm::RawCounts => r.iter().all(|&x| x >= 0.0 && x.fract() == 0.0),
                MatrixForm::Probabilistic => {
                    r.iter().all(|&x| (0.0..=1.0).contains(&x)) && (sum - 1.0).abs() <= ROW_SUM_TOLERANCE
                }
                MatrixForm::ErrorFocused => {
                    r[l] == 0.0
                        && r.iter().all(|&x| (0.0..=1.0).contains(&x))
                        && sum <= 1.0 + ROW_SUM_TOLERANCE
                }
            };
            if !ok {
                return Err(Error::InvalidInput(format!("row {l} violates the {form:?} invariants")));
            }
        }
        Ok(ConfusionMatrix { k, form, entries })
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn form(&self) -> MatrixForm {
        self.form
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, l: usize, j: usize) -> f64 {
        self.entries[l * self.k + j]
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.entries[l * self.k..(l + 1) * self.k]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.k).map(|l| self.get(l, l)).collect()
    }

    /// Zeroes the diagonal of a probabilistic matrix. Error-focused input is
    /// returned unchanged.
    pub fn error_focus(&self) -> Result<ConfusionMatrix> {
        match self.form {
            MatrixForm::Probabilistic | MatrixForm::ErrorFocused => {
                let mut entries = self.entries.clone();
                for l in 0..self.k {
                    entries[l * self.k + l] = 0.0;
                }
                Ok(ConfusionMatrix {
                    k: self.k,
                    form: MatrixForm::ErrorFocused,
                    entries,
                })
            }
            MatrixForm::RawCounts => Err(Error::InvalidInput(
                "error focus needs a probabilistic matrix, got raw counts".into(),
            )),
        }
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        spectral_norm(&self.entries, self.k).expect("entries are finite by construction")
    }

    /// `‖p C‖₁`, the ℓ1 norm of the row vector `p·C`.
    pub fn l1_risk(&self, priors: &[f64]) -> Result<f64> {
        if priors.len() != self.k {
            return Err(Error::InvalidInput(format!(
                "{} priors for {} classes",
                priors.len(),
                self.k
            )));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 || priors.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidInput(format!("priors sum to {total}, not 1")));
        }
        Ok((0..self.k)
            .map(|j| (0..self.k).map(|l| priors[l] * self.get(l, j)).sum::<f64>().abs())
            .sum())
    }

    /// `(Tr(CᵀC), Σ_{l≠j} c_{l,j})`.
    pub fn trace_bound(&self) -> (f64, f64) {
        let trace = self.entries.iter().map(|x| x * x).sum();
        let off_diagonal = (0..self.k)
            .flat_map(|l| (0..self.k).filter(move |&j| j != l).map(move |j| (l, j)))
            .map(|(l, j)| self.get(l, j))
            .sum();
        (trace, off_diagonal)
    }

    /// Whether `‖p C‖₁ ≤ √K ‖C‖` holds (to 1e-10).
    pub fn sqrt_k_bound(&self, priors: &[f64]) -> Result<bool> {
        let risk = self.l1_risk(priors)?;
        let bound = (self.k as f64).sqrt() * self.operator_norm();
        Ok(risk <= bound + 1e-10)
    }

    /// One line per row, comma separated, shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for l in 0..self.k {
            let cells: Vec<String> = self.row(l).iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn check_predictions(labels: &[usize], predictions: &[usize], k: usize) -> Result<()> {
    if labels.len() != predictions.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidInput("no examples".into()));
    }
    if let Some(bad) = labels.iter().chain(predictions).find(|&&c| c >= k) {
        return Err(Error::InvalidInput(format!("class index {bad} out of range for K = {k}")));
    }
    Ok(())
}

/// Raw counts `#{i : y_i = l, ŷ_i = j}`.
pub fn raw_counts(labels: &[usize], predictions: &[usize], k: usize) -> Result<ConfusionMatrix> {
    check_predictions(labels, predictions, k)?;
    let mut entries = vec![0.0; k * k];
    for (&y, &p) in labels.iter().zip(predictions) {
        entries[y * k + p] += 1.0;
    }
    Ok(ConfusionMatrix {
        k,
        form: MatrixForm::RawCounts,
        entries,
    })
}

/// Empirical probabilistic confusion matrix: entry `(l, j)` is
/// `#{i : y_i = l, ŷ_i = j} / m_l`.
pub fn build_confusion(labels: &[usize], predictions: &[usize], class_counts: &[usize]) -> Result<ConfusionMatrix> {
    let k = class_counts.len();
    check_predictions(labels, predictions, k)?;
    if let Some(l) = class_counts.iter().position(|&m| m == 0) {
        return Err(Error::InvalidInput(format!("class {l} has no examples")));
    }
    let mut counts = vec![0usize; k * k];
    let mut seen = vec![0usize; k];
    for (&y, &p) in labels.iter().zip(predictions) {
        counts[y * k + p] += 1;
        seen[y] += 1;
    }
    if seen != class_counts {
        return Err(Error::InvalidInput("class counts disagree with labels".into()));
    }
    let entries = counts
        .iter()
        .enumerate()
        .map(|(idx, &c)| c as f64 / class_counts[idx / k] as f64)
        .collect();
    Ok(ConfusionMatrix {
        k,
        form: MatrixForm::Probabilistic,
        entries,
    })
}

/// Largest singular value of any real row-major `k × k` matrix:
/// `√λ_max(CᵀC)`.
///
/// Power iteration on `CᵀC` is the primary route; for `k ≤ 16` a cyclic
/// Jacobi eigensolve also runs and the larger estimate wins, which covers
/// start vectors orthogonal to the dominant eigenvector.
pub fn spectral_norm(entries: &[f64], k: usize) -> Result<f64> {
    if entries.len() != k * k {
        return Err(Error::InvalidInput(format!("{} entries for a {k}×{k} matrix", entries.len())));
    }
    if entries.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let g = linalg::gram(entries, k);
    let power = linalg::power_iteration(&g, k);
    let mut lambda = power.eigenvalue;
    if k <= JACOBI_MAX_CLASSES {
        lambda = lambda.max(linalg::jacobi_eigenvalues(&g, k)[0]);
    }
    Ok(lambda.max(0.0).sqrt())
}

/// Deviation term `√(2K · Σ_k 1/m_k · log(K/δ))` bounding, with probability
/// `1 − δ`, how far the true confusion norm exceeds the empirical one.
pub fn generalization_gap(k: usize, class_counts: &[usize], delta: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("K ≥ 2 required, got {k}")));
    }
    if class_counts.len() != k {
        return Err(Error::InvalidInput(format!("{} class counts for K = {k}", class_counts.len())));
    }
    if class_counts.contains(&0) {
        return Err(Error::InvalidInput("every class needs at least one example".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidInput(format!("delta {delta} not in (0, 1]")));
    }
    let inv: f64 = class_counts.iter().map(|&m| 1.0 / m as f64).sum();
    let kf = k as f64;
    Ok((2.0 * kf * inv * (kf / delta).ln()).sqrt())
}
