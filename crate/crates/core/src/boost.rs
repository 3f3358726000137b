//! The cost-matrix boosting loop shared by CoMBo and AdaBoost.MM.
//!
//! Each example `i` carries scores `f(i, l)`, the summed weights of the trees
//! that voted for `l`. The cost matrix is
//!
//! ```text
//! D(i, l)   = w(y_i, l) · exp(f(i, l) − f(i, y_i))      for l ≠ y_i
//! D(i, y_i) = −Σ_{l≠y_i} D(i, l)
//! ```
//!
//! and the exponential loss is `L = Σ_i Σ_{l≠y_i} D(i, l)`. The weight
//! `w(y, l)` is what distinguishes the schemes: `1/m_y` for CoMBo, `1` for
//! AdaBoost.MM, and `c_{y,l}/m_y` for user-supplied pairwise costs.
//!
//! Each round fits a tree to `D`, measures its edge `δ`, and adds
//! `α = ½ ln((1+δ)/(1−δ))` to the score of the class the tree predicts. With
//! that `α` the loss shrinks by at least `√(1−δ²)` per round.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::weaklearn::{edge, TreeLearner, WeakLearnerConfig, WeakTree};

/// Edges are clamped here before computing `α`, capping it near 14.2.
pub const MAX_EDGE: f64 = 1.0 - 1e-12;

/// Relative slack allowed when checking the per-round loss drop.
pub const LOSS_DROP_TOLERANCE: f64 = 1e-9;

/// Log-magnitude past which cost entries are rescaled.
const RESCALE_LOG_LIMIT: f64 = 600.0;

/// How example rows are weighted in the cost matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum WeightScheme {
    /// `w = 1/m_{y_i}` (CoMBo).
    InverseClassFrequency,
    /// `w = 1` (AdaBoost.MM).
    Uniform,
    /// `w = c_{y_i, l} / m_{y_i}` with a prior pairwise penalty matrix.
    PairwiseCosts { costs: Vec<Vec<f64>> },
}

impl WeightScheme {
    /// Short tag used in reports and on the command line.
    pub fn tag(&self) -> &'static str {
        match self {
            WeightScheme::InverseClassFrequency => "combo",
            WeightScheme::Uniform => "adamm",
            WeightScheme::PairwiseCosts { .. } => "pairwise",
        }
    }

    /// Pairwise costs must be a `K × K` matrix with zero diagonal and
    /// off-diagonal entries of at least 1.
    pub fn validate(&self, k: usize) -> Result<()> {
        let WeightScheme::PairwiseCosts { costs } = self else {
            return Ok(());
        };
        if costs.len() != k || costs.iter().any(|r| r.len() != k) {
            return Err(Error::Config(format!("pairwise cost matrix must be {k}×{k}")));
        }
        for (l, row) in costs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let ok = if l == j { c == 0.0 } else { c.is_finite() && c >= 1.0 };
                if !ok {
                    return Err(Error::Config(format!(
                        "pairwise cost ({l},{j}) = {c}: diagonal must be 0, off-diagonal ≥ 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reads a pairwise cost matrix: one comma-separated row per line.
    pub fn pairwise_from_csv(text: &str) -> Result<Self> {
        let costs = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                line.split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Config(format!("bad pairwise cost `{}`", c.trim())))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightScheme::PairwiseCosts { costs })
    }

    /// `K × K` table of `w(y, l)`; the diagonal is unused.
    fn weights(&self, class_counts: &[usize]) -> Vec<f64> {
        let (numerators, divisors) = self.weight_parts(class_counts);
        let k = class_counts.len();
        (0..k * k).map(|i| numerators[i] / divisors[i / k]).collect()
    }

    /// `w(y, l)` as a numerator table over a per-class divisor, so sums
    /// over a class can be divided once.
    fn weight_parts(&self, class_counts: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let k = class_counts.len();
        let numerators = match self {
            WeightScheme::PairwiseCosts { costs } => costs.iter().flatten().copied().collect(),
            _ => vec![1.0; k * k],
        };
        let divisors = match self {
            WeightScheme::Uniform => vec![1.0; k],
            _ => class_counts.iter().map(|&c| c as f64).collect(),
        };
        (numerators, divisors)
    }
}

/// `m × K` cost matrix, stored as `D / exp(log_scale)`.
///
/// The scale stays 0 unless entries would leave the floating-point range;
/// tree selection and edges are invariant to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    k: usize,
    values: Vec<f64>,
    log_scale: f64,
}

impl CostMatrix {
    pub fn from_rows(k: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || !values.len().is_multiple_of(k) {
            return Err(Error::InvalidInput(format!("{} values do not form rows of {k}", values.len())));
        }
        Ok(CostMatrix {
            k,
            values,
            log_scale: 0.0,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.values.len() / self.k
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    /// Stored (possibly rescaled) row.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Entry in original units.
    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.values[i * self.k + l] * self.log_scale.exp()
    }

    /// Checks zero row sums (relative 1e-9), nonnegative off-label entries,
    /// and least cost on the true label.
    pub fn check_invariants(&self, labels: &[usize]) -> Result<()> {
        for (i, &y) in labels.iter().enumerate() {
            let row = self.row(i);
            let sum: f64 = row.iter().sum();
            let mass: f64 = row.iter().map(|x| x.abs()).sum();
            if sum.abs() > 1e-9 * mass {
                return Err(Error::Invariant(format!("cost row {i} sums to {sum}")));
            }
            for (l, &c) in row.iter().enumerate() {
                if l != y && (c < 0.0 || c < row[y]) {
                    return Err(Error::Invariant(format!("cost row {i}: entry {l} below the true label")));
                }
            }
        }
        Ok(())
    }
}

/// Accumulated votes `f(i, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    k: usize,
    values: Vec<f64>,
}

impl ScoreTable {
    pub fn zeros(m: usize, k: usize) -> Self {
        ScoreTable {
            k,
            values: vec![0.0; m * k],
        }
    }

    pub fn from_rows(k: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || !values.len().is_multiple_of(k) {
            return Err(Error::InvalidInput(format!("{} values do not form rows of {k}", values.len())));
        }
        Ok(ScoreTable { k, values })
    }

    pub fn num_rows(&self) -> usize {
        self.values.len() / self.k
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn add(&mut self, i: usize, class: usize, alpha: f64) {
        self.values[i * self.k + class] += alpha;
    }
}

fn check_scores(f: &ScoreTable, d: &Dataset) -> Result<()> {
    if f.num_rows() != d.len() || f.num_classes() != d.num_classes() {
        return Err(Error::InvalidInput(format!(
            "score table is {}×{}, dataset is {}×{}",
            f.num_rows(),
            f.num_classes(),
            d.len(),
            d.num_classes()
        )));
    }
    Ok(())
}

/// Cost matrix for scores `f`. Exponentials are taken of score differences
/// only; if the largest log-entry leaves ±600 the matrix is rescaled and the
/// scale recorded.
pub fn update_cost_matrix(f: &ScoreTable, d: &Dataset, scheme: &WeightScheme) -> Result<CostMatrix> {
    check_scores(f, d)?;
    let k = d.num_classes();
    scheme.validate(k)?;
    let w = scheme.weights(d.class_counts());
    let labels = d.labels();

    let mut max_log = f64::NEG_INFINITY;
    for (i, &y) in labels.iter().enumerate() {
        let s = f.row(i);
        for l in (0..k).filter(|&l| l != y) {
            max_log = max_log.max(w[y * k + l].ln() + s[l] - s[y]);
        }
    }
    let log_scale = if max_log.abs() > RESCALE_LOG_LIMIT { max_log } else { 0.0 };

    let mut values = vec![0.0; d.len() * k];
    for (i, &y) in labels.iter().enumerate() {
        let s = f.row(i);
        let row = &mut values[i * k..(i + 1) * k];
        let mut total = 0.0;
        for l in (0..k).filter(|&l| l != y) {
            let c = if log_scale == 0.0 {
                w[y * k + l] * (s[l] - s[y]).exp()
            } else {
                (w[y * k + l].ln() + s[l] - s[y] - log_scale).exp()
            };
            row[l] = c;
            total += c;
        }
        row[y] = -total;
    }
    Ok(CostMatrix { k, values, log_scale })
}

/// Cost matrix at `f ≡ 0`.
pub fn init_cost_matrix(d: &Dataset, scheme: &WeightScheme) -> Result<CostMatrix> {
    update_cost_matrix(&ScoreTable::zeros(d.len(), d.num_classes()), d, scheme)
}

/// `L = Σ_i Σ_{l≠y_i} w(y_i, l) · exp(f(i, l) − f(i, y_i))`, from scratch.
///
/// Exponentials are summed per (class, label) pair before weighting, which
/// makes the CoMBo loss at `f ≡ 0` exactly `K(K−1)`.
pub fn exponential_loss(f: &ScoreTable, d: &Dataset, scheme: &WeightScheme) -> Result<f64> {
    check_scores(f, d)?;
    let k = d.num_classes();
    scheme.validate(k)?;
    let (numerators, divisors) = scheme.weight_parts(d.class_counts());
    let mut sums = vec![0.0; k * k];
    for (i, &y) in d.labels().iter().enumerate() {
        let s = f.row(i);
        for l in (0..k).filter(|&l| l != y) {
            sums[y * k + l] += (s[l] - s[y]).exp();
        }
    }
    Ok((0..k)
        .map(|y| {
            (0..k)
                .filter(|&l| l != y)
                .map(|l| numerators[y * k + l] * sums[y * k + l] / divisors[y])
                .sum::<f64>()
        })
        .sum())
}

/// `α = ½ ln((1+δ)/(1−δ))` after clamping `δ` to [`MAX_EDGE`].
pub fn alpha_for_edge(edge: f64) -> f64 {
    let e = edge.min(MAX_EDGE);
    0.5 * ((1.0 + e) / (1.0 - e)).ln()
}

/// One accepted boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub tree: WeakTree,
    pub alpha: f64,
    /// Edge used for `alpha` (after clamping).
    pub edge: f64,
    /// Exponential loss after adding this tree.
    pub loss: f64,
    /// The tree had edge 1 and `edge` was clamped.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub perfect: bool,
}

/// Why training stopped before the requested number of rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum HaltReason {
    /// The best tree had no edge; the round was discarded.
    NonPositiveEdge { round: usize, edge: f64 },
    /// The loss underflowed to zero.
    LossVanished { round: usize },
}

/// Mutable training state: scores, the current cost matrix and loss.
#[derive(Debug, Clone)]
pub struct BoostState {
    pub scores: ScoreTable,
    pub costs: CostMatrix,
    pub loss: f64,
}

impl BoostState {
    pub fn new(d: &Dataset, scheme: &WeightScheme) -> Result<Self> {
        let scores = ScoreTable::zeros(d.len(), d.num_classes());
        let costs = update_cost_matrix(&scores, d, scheme)?;
        let loss = exponential_loss(&scores, d, scheme)?;
        Ok(BoostState { scores, costs, loss })
    }
}

pub enum RoundOutcome {
    Accepted(RoundRecord),
    Halted(HaltReason),
}

/// Fits one tree on the current costs and, if its edge is positive, folds it
/// into the state. `round_index` only labels halt reasons.
pub fn round(
    d: &Dataset,
    learner: &TreeLearner<'_>,
    scheme: &WeightScheme,
    state: &mut BoostState,
    round_index: usize,
) -> Result<RoundOutcome> {
    if !(state.loss > 0.0) {
        return Ok(RoundOutcome::Halted(HaltReason::LossVanished { round: round_index }));
    }
    let tree = learner.fit(&state.costs)?;
    let predictions = tree.predict_all(d);
    let raw_edge = edge(&state.costs, d.labels(), &predictions)?;
    if !(raw_edge > 0.0) {
        return Ok(RoundOutcome::Halted(HaltReason::NonPositiveEdge {
            round: round_index,
            edge: raw_edge,
        }));
    }
    let used_edge = raw_edge.min(MAX_EDGE);
    let alpha = alpha_for_edge(used_edge);
    for (i, &p) in predictions.iter().enumerate() {
        state.scores.add(i, p, alpha);
    }
    state.costs = update_cost_matrix(&state.scores, d, scheme)?;
    state.loss = exponential_loss(&state.scores, d, scheme)?;
    Ok(RoundOutcome::Accepted(RoundRecord {
        tree,
        alpha,
        edge: used_edge,
        loss: state.loss,
        perfect: raw_edge >= MAX_EDGE,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub rounds: usize,
    pub scheme: WeightScheme,
    pub tree: WeakLearnerConfig,
}

impl BoostConfig {
    pub fn new(rounds: usize, scheme: WeightScheme) -> Self {
        BoostConfig {
            rounds,
            scheme,
            tree: WeakLearnerConfig::default(),
        }
    }
}

/// Trained model: the rounds, their telemetry, and the final argmax vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub scheme: WeightScheme,
    pub schema: FeatureSchema,
    pub schema_hash: String,
    pub initial_loss: f64,
    pub rounds: Vec<RoundRecord>,
    pub halt: Option<HaltReason>,
}

/// Runs up to `cfg.rounds` rounds; early halts are recorded, not errors.
pub fn train(d: &Dataset, cfg: &BoostConfig) -> Result<BoostedEnsemble> {
    if cfg.rounds < 1 {
        return Err(Error::Config("rounds must be at least 1".into()));
    }
    cfg.scheme.validate(d.num_classes())?;
    let learner = TreeLearner::new(d, cfg.tree)?;
    let mut state = BoostState::new(d, &cfg.scheme)?;
    let mut ensemble = BoostedEnsemble {
        scheme: cfg.scheme.clone(),
        schema: d.schema().as_ref().clone(),
        schema_hash: d.schema().hash(),
        initial_loss: state.loss,
        rounds: Vec::with_capacity(cfg.rounds),
        halt: None,
    };
    for t in 1..=cfg.rounds {
        match round(d, &learner, &cfg.scheme, &mut state, t)? {
            RoundOutcome::Accepted(record) => ensemble.rounds.push(record),
            RoundOutcome::Halted(reason) => {
                ensemble.halt = Some(reason);
                break;
            }
        }
    }
    Ok(ensemble)
}

impl BoostedEnsemble {
    pub fn num_classes(&self) -> usize {
        self.schema.num_classes()
    }

    pub fn num_features(&self) -> usize {
        self.schema.num_features()
    }

    pub fn total_alpha(&self) -> f64 {
        self.rounds.iter().map(|r| r.alpha).sum()
    }

    /// `f_T(x, l) = Σ_t α_t · [h_t(x) = l]`.
    pub fn predict_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        Ok(self.scores_unchecked(row))
    }

    /// Argmax of the scores, lowest class index on ties.
    pub fn predict(&self, row: &[f64]) -> Result<usize> {
        self.check_row(row)?;
        Ok(argmax(&self.scores_unchecked(row)))
    }

    /// Scores for every row of `d`, which must share the model's schema.
    pub fn score_dataset(&self, d: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.check_dataset(d)?;
        Ok(d.rows().map(|r| self.scores_unchecked(r)).collect())
    }

    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<usize>> {
        Ok(self.score_dataset(d)?.iter().map(|s| argmax(s)).collect())
    }

    pub fn check_dataset(&self, d: &Dataset) -> Result<()> {
        if d.schema().hash() != self.schema_hash {
            return Err(Error::InvalidInput("dataset schema does not match the model".into()));
        }
        Ok(())
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.num_features() {
            return Err(Error::InvalidInput(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.num_features()
            )));
        }
        Ok(())
    }

    fn scores_unchecked(&self, row: &[f64]) -> Vec<f64> {
        let mut scores = vec![0.0; self.num_classes()];
        for r in &self.rounds {
            scores[r.tree.predict(row)] += r.alpha;
        }
        scores
    }

    /// Checks the per-round loss drop `L_t ≤ √(1−δ_t²) · L_{t−1}` (relative
    /// slack [`LOSS_DROP_TOLERANCE`]) and the cumulative bound
    /// `L_T ≤ L_0 · exp(−½ Σ δ_t²)`.
    pub fn verify_loss_bounds(&self) -> Result<()> {
        let mut previous = self.initial_loss;
        let mut sum_sq = 0.0;
        for (t, r) in self.rounds.iter().enumerate() {
            if !(r.alpha > 0.0) {
                return Err(Error::Invariant(format!("round {}: α = {} not positive", t + 1, r.alpha)));
            }
            let factor = (1.0 - r.edge * r.edge).sqrt();
            if r.loss > factor * previous + LOSS_DROP_TOLERANCE * previous {
                return Err(Error::Invariant(format!(
                    "round {}: loss {} exceeds √(1−δ²)·L_prev = {}",
                    t + 1,
                    r.loss,
                    factor * previous
                )));
            }
            sum_sq += r.edge * r.edge;
            previous = r.loss;
        }
        let bound = self.initial_loss * (-0.5 * sum_sq).exp();
        if previous > bound * (1.0 + LOSS_DROP_TOLERANCE) {
            return Err(Error::Invariant(format!(
                "final loss {previous} exceeds L_0·exp(−½Σδ²) = {bound}"
            )));
        }
        Ok(())
    }

    /// `Σ_i w(y_i, H(x_i)) · [H(x_i) ≠ y_i]` on the training set; it never
    /// exceeds the final loss because a mistake has an exponent ≥ 0.
    pub fn weighted_training_error(&self, d: &Dataset) -> Result<f64> {
        let predictions = self.predict_dataset(d)?;
        let w = self.scheme.weights(d.class_counts());
        let k = d.num_classes();
        Ok(d.labels()
            .iter()
            .zip(&predictions)
            .filter(|(y, p)| y != p)
            .map(|(&y, &p)| w[y * k + p])
            .sum())
    }

    pub fn final_loss(&self) -> f64 {
        self.rounds.last().map_or(self.initial_loss, |r| r.loss)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn dataset(features: Vec<f64>, labels: Vec<usize>, k: usize) -> Dataset {
        let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
        let schema = FeatureSchema::parse(&format!("numeric\nlabel: {}\n", names.join(","))).unwrap();
        Dataset::new(Arc::new(schema), features, labels).unwrap()
    }

    #[test]
    fn combo_initial_row() {
        let labels = vec![0, 0, 0, 0, 0, 1, 2];
        let d = dataset(vec![0.0; 7], labels, 3);
        let c = init_cost_matrix(&d, &WeightScheme::InverseClassFrequency).unwrap();
        assert_eq!(c.row(0), &[-0.4, 0.2, 0.2]);
        assert_eq!(c.row(5), &[1.0, -2.0, 1.0]);
    }

    #[test]
    fn uniform_initial_row() {
        let d = dataset(vec![0.0; 3], vec![0, 1, 2], 3);
        let c = init_cost_matrix(&d, &WeightScheme::Uniform).unwrap();
        assert_eq!(c.row(2), &[1.0, 1.0, -2.0]);
    }

    #[test]
    fn initial_combo_loss_is_k_times_k_minus_one() {
        let labels: Vec<usize> = (0..37).map(|i| i % 4).chain([0, 0, 1]).collect();
        let d = dataset(vec![0.0; labels.len()], labels, 4);
        let state = BoostState::new(&d, &WeightScheme::InverseClassFrequency).unwrap();
        assert_eq!(state.loss, 12.0);
        let state = BoostState::new(&d, &WeightScheme::Uniform).unwrap();
        assert_eq!(state.loss, 40.0 * 3.0);
    }

    #[test]
    fn update_with_correct_margin() {
        let d = dataset(vec![0.0; 2], vec![0, 1], 2);
        let f = ScoreTable::from_rows(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let c = update_cost_matrix(&f, &d, &WeightScheme::Uniform).unwrap();
        assert_eq!(c.row(0), &[-(-1f64).exp(), (-1f64).exp()]);
        assert_eq!(c.row(1), &[1.0, -1.0]);
    }

    #[test]
    fn huge_scores_are_rescaled() {
        let d = dataset(vec![0.0; 2], vec![0, 1], 2);
        let f = ScoreTable::from_rows(2, vec![0.0, 2000.0, 0.0, 1990.0]).unwrap();
        let c = update_cost_matrix(&f, &d, &WeightScheme::Uniform).unwrap();
        assert_eq!(c.log_scale(), 2000.0);
        assert_eq!(c.row(0), &[-1.0, 1.0]);
        assert!((c.row(1)[0] - (-3990f64).exp()).abs() < 1e-300);
        c.check_invariants(d.labels()).unwrap();
    }

    #[test]
    fn alpha_examples() {
        assert!((alpha_for_edge(0.6) - 2f64.ln()).abs() < 1e-15);
        assert!(alpha_for_edge(1e-9) > 0.0 && alpha_for_edge(1e-9) < 1e-8);
        assert!(alpha_for_edge(0.3) < alpha_for_edge(0.31));
        let cap = alpha_for_edge(1.0);
        assert!(cap.is_finite() && (cap - 0.5 * 2e12f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn pairwise_validation() {
        let ok = WeightScheme::PairwiseCosts {
            costs: vec![vec![0.0, 1.0], vec![2.5, 0.0]],
        };
        ok.validate(2).unwrap();
        let bad = WeightScheme::PairwiseCosts {
            costs: vec![vec![0.0, 0.5], vec![1.0, 0.0]],
        };
        assert!(bad.validate(2).is_err());
        assert!(ok.validate(3).is_err());
        let parsed = WeightScheme::pairwise_from_csv("0,1\n2.5,0\n").unwrap();
        assert_eq!(parsed, ok);
    }

    #[test]
    fn scores_and_vote() {
        let d = dataset(vec![1.0, 2.0, 3.0, 4.0], vec![0, 0, 1, 1], 2);
        let e = train(&d, &BoostConfig::new(3, WeightScheme::InverseClassFrequency)).unwrap();
        let first = e.rounds[0].alpha;
        assert!(first > 13.0, "perfect stump gets the capped weight");
        assert!(e.rounds[0].perfect);
        let s = e.predict_scores(&[1.0]).unwrap();
        assert!((s.iter().sum::<f64>() - e.total_alpha()).abs() < 1e-12);
        assert_eq!(e.predict(&[1.0]).unwrap(), 0);
        assert_eq!(e.predict(&[4.0]).unwrap(), 1);
        assert!(e.predict(&[1.0, 2.0]).is_err());
        e.verify_loss_bounds().unwrap();
    }

    #[test]
    fn empty_ensemble_votes_class_zero() {
        let d = dataset(vec![1.0, 2.0], vec![0, 1], 2);
        let e = BoostedEnsemble {
            scheme: WeightScheme::Uniform,
            schema: d.schema().as_ref().clone(),
            schema_hash: d.schema().hash(),
            initial_loss: 2.0,
            rounds: vec![],
            halt: None,
        };
        assert_eq!(e.predict_scores(&[5.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(e.predict(&[5.0]).unwrap(), 0);
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[0.0, 0.7, 0.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
    }

    #[test]
    fn rounds_must_be_positive() {
        let d = dataset(vec![1.0, 2.0], vec![0, 1], 2);
        assert!(train(&d, &BoostConfig::new(0, WeightScheme::Uniform)).is_err());
    }

    #[test]
    fn constant_features_halt_with_zero_edge() {
        // Balanced classes, no usable split: the best tree is a constant with
        // edge 0 under the uniform scheme.
        let d = dataset(vec![1.0; 4], vec![0, 1, 0, 1], 2);
        let e = train(&d, &BoostConfig::new(5, WeightScheme::Uniform)).unwrap();
        assert!(e.rounds.is_empty());
        assert!(matches!(e.halt, Some(HaltReason::NonPositiveEdge { round: 1, .. })));
    }
}
