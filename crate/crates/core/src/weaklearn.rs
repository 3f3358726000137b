//! Shallow decision trees fitted to a cost matrix.
//!
//! The learner minimizes `D · 1_h = Σ_i D(i, h(x_i))`: every leaf predicts the
//! class with the smallest summed cost over its rows, and every split is the
//! one with the smallest summed leaf cost. Growth is greedy and top-down.

use serde::{Deserialize, Serialize};

use crate::boost::CostMatrix;
use crate::data::{Dataset, FeatureKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// Midpoints between consecutive distinct sorted values.
    Midpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakLearnerConfig {
    pub max_depth: usize,
    pub min_leaf_size: usize,
    pub thresholds: ThresholdPolicy,
}

impl Default for WeakLearnerConfig {
    fn default() -> Self {
        WeakLearnerConfig {
            max_depth: 2,
            min_leaf_size: 1,
            thresholds: ThresholdPolicy::Midpoints,
        }
    }
}

impl WeakLearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if self.min_leaf_size < 1 {
            return Err(Error::Config("min_leaf_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// A node test; rows passing it go left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", content = "value", rename_all = "snake_case")]
pub enum SplitTest {
    LessThan(f64),
    Equals(u32),
}

impl SplitTest {
    fn passes(&self, value: f64) -> bool {
        match *self {
            SplitTest::LessThan(t) => value < t,
            SplitTest::Equals(code) => value == f64::from(code),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        #[serde(flatten)]
        test: SplitTest,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakTree {
    num_features: usize,
    num_classes: usize,
    root: Node,
}

impl WeakTree {
    /// A single leaf predicting `class` everywhere.
    pub fn constant(class: usize, num_features: usize, num_classes: usize) -> Self {
        WeakTree {
            num_features,
            num_classes,
            root: Node::Leaf { class },
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Leaf class reached by `row`. The row must have `num_features` entries.
    pub fn predict(&self, row: &[f64]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    test,
                    left,
                    right,
                } => node = if test.passes(row[*feature]) { left } else { right },
            }
        }
    }

    pub fn try_predict(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.num_features {
            return Err(Error::InvalidInput(format!(
                "row has {} features, tree expects {}",
                row.len(),
                self.num_features
            )));
        }
        Ok(self.predict(row))
    }

    pub fn predict_all(&self, d: &Dataset) -> Vec<usize> {
        d.rows().map(|r| self.predict(r)).collect()
    }

    /// Structural checks used when loading a persisted tree.
    pub(crate) fn validate(&self) -> Result<()> {
        fn walk(n: &Node, nf: usize, k: usize) -> bool {
            match n {
                Node::Leaf { class } => *class < k,
                Node::Split { feature, test, left, right } => {
                    let test_ok = match test {
                        SplitTest::LessThan(t) => !t.is_nan(),
                        SplitTest::Equals(_) => true,
                    };
                    *feature < nf && test_ok && walk(left, nf, k) && walk(right, nf, k)
                }
            }
        }
        if walk(&self.root, self.num_features, self.num_classes) {
            Ok(())
        } else {
            Err(Error::InvalidInput("tree references an unknown feature or class".into()))
        }
    }
}

/// Reusable learner for one training set; sorts numeric columns once.
pub struct TreeLearner<'a> {
    data: &'a Dataset,
    config: WeakLearnerConfig,
    /// Row order by value for numeric features, empty for categorical ones.
    orders: Vec<Vec<u32>>,
    /// Category count for categorical features, 0 for numeric ones.
    arity: Vec<usize>,
}

struct Candidate {
    cost: f64,
    feature: usize,
    test: SplitTest,
}

impl<'a> TreeLearner<'a> {
    pub fn new(data: &'a Dataset, config: WeakLearnerConfig) -> Result<Self> {
        config.validate()?;
        if data.is_empty() {
            return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
        }
        let m = data.len();
        let mut orders = Vec::new();
        let mut arity = Vec::new();
        for (f, kind) in data.schema().features().iter().enumerate() {
            match kind {
                FeatureKind::Numeric => {
                    let mut order: Vec<u32> = (0..m as u32).collect();
                    order.sort_by(|&a, &b| data.row(a as usize)[f].total_cmp(&data.row(b as usize)[f]));
                    orders.push(order);
                    arity.push(0);
                }
                FeatureKind::Categorical { categories, .. } => {
                    let observed = data.rows().map(|r| r[f] as usize + 1).max().unwrap_or(0);
                    orders.push(Vec::new());
                    arity.push(categories.len().max(observed));
                }
            }
        }
        Ok(TreeLearner {
            data,
            config,
            orders,
            arity,
        })
    }

    /// Grows a tree minimizing the summed cost of its predictions under `costs`.
    pub fn fit(&self, costs: &CostMatrix) -> Result<WeakTree> {
        let m = self.data.len();
        let k = self.data.num_classes();
        if costs.num_rows() != m || costs.num_classes() != k {
            return Err(Error::InvalidInput(format!(
                "cost matrix is {}×{}, dataset is {m}×{k}",
                costs.num_rows(),
                costs.num_classes()
            )));
        }
        let mut member = vec![false; m];
        let rows: Vec<usize> = (0..m).collect();
        let root = self.grow(costs, &rows, 0, &mut member);
        Ok(WeakTree {
            num_features: self.data.num_features(),
            num_classes: k,
            root,
        })
    }

    fn grow(&self, costs: &CostMatrix, rows: &[usize], depth: usize, member: &mut [bool]) -> Node {
        let k = costs.num_classes();
        let mut totals = vec![0.0; k];
        let mut mass = 0.0;
        for &i in rows {
            for (t, &c) in totals.iter_mut().zip(costs.row(i)) {
                *t += c;
                mass += c.abs();
            }
        }
        let (class, leaf_cost) = argmin(&totals);
        let leaf = Node::Leaf { class };
        if depth >= self.config.max_depth || rows.len() < 2 * self.config.min_leaf_size {
            return leaf;
        }

        for &i in rows {
            member[i] = true;
        }
        let best = self.best_split(costs, rows, &totals, leaf_cost, mass, member);
        let candidates = if best.is_none() && self.config.max_depth - depth >= 2 {
            self.candidates(rows, member)
        } else {
            Vec::new()
        };
        for &i in rows {
            member[i] = false;
        }
        let best = best.or_else(|| self.lookahead_split(costs, rows, candidates, leaf_cost, mass, member));
        let Some(split) = best else {
            return leaf;
        };

        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| split.test.passes(self.data.row(i)[split.feature]));
        Node::Split {
            feature: split.feature,
            test: split.test,
            left: Box::new(self.grow(costs, &left, depth + 1, member)),
            right: Box::new(self.grow(costs, &right, depth + 1, member)),
        }
    }

    /// Every admissible split of `rows` (whose `member` flags are set), in
    /// (feature, threshold or category code) order.
    fn candidates(&self, rows: &[usize], member: &[bool]) -> Vec<(usize, SplitTest)> {
        let n = rows.len();
        let min_leaf = self.config.min_leaf_size;
        let mut out = Vec::new();
        for f in 0..self.data.num_features() {
            if self.arity[f] == 0 {
                let mut count = 0usize;
                let mut prev: Option<f64> = None;
                for &i in &self.orders[f] {
                    let i = i as usize;
                    if !member[i] {
                        continue;
                    }
                    let v = self.data.row(i)[f];
                    if let Some(p) = prev {
                        if v > p && count >= min_leaf && n - count >= min_leaf {
                            let mid = 0.5 * (p + v);
                            out.push((f, SplitTest::LessThan(if mid <= p { v } else { mid })));
                        }
                    }
                    count += 1;
                    prev = Some(v);
                }
            } else {
                let mut counts = vec![0usize; self.arity[f]];
                for &i in rows {
                    counts[self.data.row(i)[f] as usize] += 1;
                }
                for (code, &c) in counts.iter().enumerate() {
                    if c >= min_leaf && n - c >= min_leaf {
                        out.push((f, SplitTest::Equals(code as u32)));
                    }
                }
            }
        }
        out
    }

    /// When no single split helps (XOR-like layouts), scores each candidate
    /// by the best stumps on its two sides.
    fn lookahead_split(
        &self,
        costs: &CostMatrix,
        rows: &[usize],
        candidates: Vec<(usize, SplitTest)>,
        leaf_cost: f64,
        mass: f64,
        member: &mut [bool],
    ) -> Option<Candidate> {
        let tol = 1e-12 * mass;
        let mut best: Option<Candidate> = None;
        let mut best_cost = leaf_cost - tol;
        for (feature, test) in candidates {
            let (left, right): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| test.passes(self.data.row(i)[feature]));
            let cost = self.stump_cost(costs, &left, member) + self.stump_cost(costs, &right, member);
            if cost < best_cost {
                best_cost = cost - tol;
                best = Some(Candidate { cost, feature, test });
            }
        }
        best
    }

    /// Cost of the best leaf or single split on `rows`.
    fn stump_cost(&self, costs: &CostMatrix, rows: &[usize], member: &mut [bool]) -> f64 {
        let k = costs.num_classes();
        let mut totals = vec![0.0; k];
        let mut mass = 0.0;
        for &i in rows {
            for (t, &c) in totals.iter_mut().zip(costs.row(i)) {
                *t += c;
                mass += c.abs();
            }
        }
        let leaf_cost = argmin(&totals).1;
        if rows.len() < 2 * self.config.min_leaf_size {
            return leaf_cost;
        }
        for &i in rows {
            member[i] = true;
        }
        let split = self.best_split(costs, rows, &totals, leaf_cost, mass, member);
        for &i in rows {
            member[i] = false;
        }
        split.map_or(leaf_cost, |c| c.cost)
    }

    /// Lowest-cost split that beats the parent leaf. Candidates are visited in
    /// (feature, threshold or category code) order and must improve strictly,
    /// so ties keep the earliest.
    fn best_split(
        &self,
        costs: &CostMatrix,
        rows: &[usize],
        totals: &[f64],
        leaf_cost: f64,
        mass: f64,
        member: &[bool],
    ) -> Option<Candidate> {
        let k = totals.len();
        let n = rows.len();
        let min_leaf = self.config.min_leaf_size;
        let tol = 1e-12 * mass;
        let mut best: Option<Candidate> = None;
        let mut best_cost = leaf_cost - tol;
        let mut left = vec![0.0; k];
        let mut right = vec![0.0; k];

        for f in 0..self.data.num_features() {
            if self.arity[f] == 0 {
                left.iter_mut().for_each(|x| *x = 0.0);
                let mut count = 0usize;
                let mut prev: Option<f64> = None;
                for &i in &self.orders[f] {
                    let i = i as usize;
                    if !member[i] {
                        continue;
                    }
                    let v = self.data.row(i)[f];
                    if let Some(p) = prev {
                        if v > p && count >= min_leaf && n - count >= min_leaf {
                            let cost = split_cost(&left, totals, &mut right);
                            if cost < best_cost {
                                let mut threshold = 0.5 * (p + v);
                                if threshold <= p {
                                    threshold = v;
                                }
                                best_cost = cost - tol;
                                best = Some(Candidate {
                                    cost,
                                    feature: f,
                                    test: SplitTest::LessThan(threshold),
                                });
                            }
                        }
                    }
                    for (l, &c) in left.iter_mut().zip(costs.row(i)) {
                        *l += c;
                    }
                    count += 1;
                    prev = Some(v);
                }
            } else {
                let arity = self.arity[f];
                let mut sums = vec![0.0; arity * k];
                let mut counts = vec![0usize; arity];
                for &i in rows {
                    let code = self.data.row(i)[f] as usize;
                    counts[code] += 1;
                    for (s, &c) in sums[code * k..(code + 1) * k].iter_mut().zip(costs.row(i)) {
                        *s += c;
                    }
                }
                for code in 0..arity {
                    if counts[code] < min_leaf || n - counts[code] < min_leaf {
                        continue;
                    }
                    let cost = split_cost(&sums[code * k..(code + 1) * k], totals, &mut right);
                    if cost < best_cost {
                        best_cost = cost - tol;
                        best = Some(Candidate {
                            cost,
                            feature: f,
                            test: SplitTest::Equals(code as u32),
                        });
                    }
                }
            }
        }
        best.filter(|b| b.cost.is_finite())
    }
}

fn split_cost(left: &[f64], totals: &[f64], right: &mut [f64]) -> f64 {
    for ((r, &t), &l) in right.iter_mut().zip(totals).zip(left) {
        *r = t - l;
    }
    argmin(left).1 + argmin(right).1
}

/// Smallest entry and its lowest index.
fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// One-shot convenience around [`TreeLearner`].
pub fn train_tree(d: &Dataset, costs: &CostMatrix, cfg: &WeakLearnerConfig) -> Result<WeakTree> {
    TreeLearner::new(d, *cfg)?.fit(costs)
}

fn check_shapes(costs: &CostMatrix, labels: &[usize], predictions: &[usize]) -> Result<()> {
    let k = costs.num_classes();
    if labels.len() != costs.num_rows() || predictions.len() != costs.num_rows() {
        return Err(Error::InvalidInput(format!(
            "cost matrix has {} rows, got {} labels and {} predictions",
            costs.num_rows(),
            labels.len(),
            predictions.len()
        )));
    }
    if labels.iter().chain(predictions).any(|&c| c >= k) {
        return Err(Error::InvalidInput("class index out of range".into()));
    }
    Ok(())
}

/// Edge of `predictions` on `costs`:
/// `δ = −Σ_i D(i, ŷ_i) / Σ_i Σ_{l≠y_i} D(i, l)`.
pub fn edge(costs: &CostMatrix, labels: &[usize], predictions: &[usize]) -> Result<f64> {
    check_shapes(costs, labels, predictions)?;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (i, (&y, &p)) in labels.iter().zip(predictions).enumerate() {
        let row = costs.row(i);
        numerator -= row[p];
        denominator += row.iter().enumerate().filter(|&(l, _)| l != y).map(|(_, c)| c).sum::<f64>();
    }
    if denominator <= 0.0 {
        return Err(Error::InvalidInput("edge undefined: off-label cost mass is zero".into()));
    }
    Ok(numerator / denominator)
}

/// Both sides of the weak-learning comparison `D · 1_h ≤ D · U_γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakCondition {
    /// `D · 1_h`.
    pub classifier_cost: f64,
    /// `D · U_γ`, with `U_γ(i, l) = (1−γ)/K + γ·[l = y_i]`.
    pub baseline_cost: f64,
    pub holds: bool,
}

/// Checks the weak-learning condition against the near-uniform baseline
/// `U_γ`, allowing 1e-12 of the absolute cost mass for rounding.
pub fn check_weak_condition(
    costs: &CostMatrix,
    labels: &[usize],
    predictions: &[usize],
    gamma: f64,
) -> Result<WeakCondition> {
    check_shapes(costs, labels, predictions)?;
    let k = costs.num_classes() as f64;
    let off = (1.0 - gamma) / k;
    let mut classifier_cost = 0.0;
    let mut baseline_cost = 0.0;
    let mut mass = 0.0;
    for (i, (&y, &p)) in labels.iter().zip(predictions).enumerate() {
        let row = costs.row(i);
        classifier_cost += row[p];
        for (l, &c) in row.iter().enumerate() {
            let u = if l == y { off + gamma } else { off };
            baseline_cost += c * u;
            mass += c.abs();
        }
    }
    Ok(WeakCondition {
        classifier_cost,
        baseline_cost,
        holds: classifier_cost <= baseline_cost + 1e-12 * mass,
    })
}
