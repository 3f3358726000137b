//! Repeated stratified cross-validation, aggregation, reports and model files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::boost::{train, BoostConfig, BoostedEnsemble, HaltReason, WeightScheme};
use crate::confusion::{ConfusionMatrix, MatrixForm};
use crate::data::{load_csv, stratified_folds, Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvaluationReport};
use crate::weaklearn::WeakLearnerConfig;

/// Version tag of experiment result files.
pub const RESULT_VERSION: u32 = 1;
/// Version tag of model files.
pub const MODEL_VERSION: u32 = 1;
const MODEL_FORMAT: &str = "combo-model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Combo,
    Adamm,
    Pairwise,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Combo => "combo",
            Algorithm::Adamm => "adamm",
            Algorithm::Pairwise => "pairwise",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "combo" => Ok(Algorithm::Combo),
            "adamm" | "adaboost.mm" => Ok(Algorithm::Adamm),
            "pairwise" => Ok(Algorithm::Pairwise),
            other => Err(Error::Config(format!("unknown algorithm `{other}` (combo | adamm | pairwise)"))),
        }
    }
}

/// One cross-validation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: PathBuf,
    /// Defaults to the data path with a `.schema` extension.
    pub schema: Option<PathBuf>,
    pub algorithm: Algorithm,
    pub rounds: usize,
    pub depth: usize,
    pub min_leaf_size: usize,
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    /// Required for [`Algorithm::Pairwise`]: a K×K CSV of penalties.
    pub pairwise_costs: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Stratified fraction of the dataset to keep before folding.
    pub subsample: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(data: impl Into<PathBuf>, algorithm: Algorithm) -> Self {
        ExperimentConfig {
            data: data.into(),
            schema: None,
            algorithm,
            rounds: 200,
            depth: 2,
            min_leaf_size: 1,
            folds: 5,
            runs: 10,
            seed: 0,
            pairwise_costs: None,
            out: None,
            subsample: None,
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. Relative paths are
    /// resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut data = None;
        let mut cfg = ExperimentConfig::new(PathBuf::new(), Algorithm::Combo);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || base.join(value);
            match key {
                "data" => data = Some(path()),
                "schema" => cfg.schema = Some(path()),
                "pairwise_costs" => cfg.pairwise_costs = Some(path()),
                "out" => cfg.out = Some(path()),
                _ => cfg.set(key, value).map_err(|e| match e {
                    Error::Config(m) => Error::Config(format!("line {}: {m}", n + 1)),
                    other => other,
                })?,
            }
        }
        cfg.data = data.ok_or_else(|| Error::Config("missing `data` key".into()))?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Sets a scalar option by name, as used by config files and flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
        }
        match key {
            "algo" | "algorithm" => self.algorithm = value.parse()?,
            "rounds" => self.rounds = num(key, value)?,
            "depth" => self.depth = num(key, value)?,
            "min_leaf" | "min_leaf_size" => self.min_leaf_size = num(key, value)?,
            "folds" => self.folds = num(key, value)?,
            "runs" => self.runs = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "subsample" => self.subsample = Some(num(key, value)?),
            "data" => self.data = PathBuf::from(value),
            "schema" => self.schema = Some(PathBuf::from(value)),
            "pairwise_costs" => self.pairwise_costs = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.runs < 1 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if let Some(f) = self.subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("subsample {f} not in (0, 1]")));
            }
        }
        if self.algorithm == Algorithm::Pairwise && self.pairwise_costs.is_none() {
            return Err(Error::Config("pairwise algorithm needs `pairwise_costs`".into()));
        }
        self.tree_config().validate()
    }

    pub fn schema_path(&self) -> PathBuf {
        self.schema.clone().unwrap_or_else(|| self.data.with_extension("schema"))
    }

    pub fn tree_config(&self) -> WeakLearnerConfig {
        WeakLearnerConfig {
            max_depth: self.depth,
            min_leaf_size: self.min_leaf_size,
            ..WeakLearnerConfig::default()
        }
    }

    pub fn scheme(&self) -> Result<WeightScheme> {
        match self.algorithm {
            Algorithm::Combo => Ok(WeightScheme::InverseClassFrequency),
            Algorithm::Adamm => Ok(WeightScheme::Uniform),
            Algorithm::Pairwise => {
                let path = self
                    .pairwise_costs
                    .as_ref()
                    .ok_or_else(|| Error::Config("pairwise algorithm needs `pairwise_costs`".into()))?;
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                WeightScheme::pairwise_from_csv(&text)
            }
        }
    }

    pub fn boost_config(&self) -> Result<BoostConfig> {
        Ok(BoostConfig {
            rounds: self.rounds,
            scheme: self.scheme()?,
            tree: self.tree_config(),
        })
    }

    /// Loads the dataset and applies `subsample`.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let schema_path = self.schema_path();
        let schema = FeatureSchema::read(&schema_path)?;
        let d = load_csv(&self.data, &schema)?;
        match self.subsample {
            Some(f) if f < 1.0 => d.stratified_subsample(f, self.seed),
            _ => Ok(d),
        }
    }

    fn dataset_name(&self) -> String {
        self.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

/// Loss curve of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub initial_loss: f64,
    pub edges: Vec<f64>,
    pub alphas: Vec<f64>,
    pub losses: Vec<f64>,
    pub halt: Option<HaltReason>,
}

impl Telemetry {
    pub fn of(e: &BoostedEnsemble) -> Self {
        Telemetry {
            initial_loss: e.initial_loss,
            edges: e.rounds.iter().map(|r| r.edge).collect(),
            alphas: e.rounds.iter().map(|r| r.alpha).collect(),
            losses: e.rounds.iter().map(|r| r.loss).collect(),
            halt: e.halt.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub run: usize,
    pub fold: usize,
    pub train_size: usize,
    pub report: EvaluationReport,
    pub telemetry: Telemetry,
}

/// Mean, population standard deviation, and range of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Aggregate {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    GMean,
    Mauc,
    OperatorNorm,
    L1Risk,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Accuracy,
        Metric::GMean,
        Metric::Mauc,
        Metric::OperatorNorm,
        Metric::L1Risk,
    ];

    pub fn of(self, r: &EvaluationReport) -> f64 {
        match self {
            Metric::Accuracy => r.accuracy,
            Metric::GMean => r.g_mean,
            Metric::Mauc => r.mauc,
            Metric::OperatorNorm => r.operator_norm,
            Metric::L1Risk => r.l1_risk,
        }
    }

    /// Whether larger values are better.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::OperatorNorm | Metric::L1Risk)
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::GMean => "g_mean",
            Metric::Mauc => "mauc",
            Metric::OperatorNorm => "operator_norm",
            Metric::L1Risk => "l1_risk",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "accuracy" | "acc" => Ok(Metric::Accuracy),
            "g_mean" | "gmean" => Ok(Metric::GMean),
            "mauc" => Ok(Metric::Mauc),
            "operator_norm" | "norm" => Ok(Metric::OperatorNorm),
            "l1_risk" | "risk" => Ok(Metric::L1Risk),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// Aggregates over all `runs × folds` evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub accuracy: Aggregate,
    pub g_mean: Aggregate,
    pub mauc: Aggregate,
    pub operator_norm: Aggregate,
    pub l1_risk: Aggregate,
}

impl Summary {
    pub fn get(&self, metric: Metric) -> Aggregate {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::GMean => self.g_mean,
            Metric::Mauc => self.mauc,
            Metric::OperatorNorm => self.operator_norm,
            Metric::L1Risk => self.l1_risk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub version: u32,
    pub dataset: String,
    pub algorithm: Algorithm,
    pub rounds: usize,
    pub depth: usize,
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<f64>,
    pub examples: usize,
    pub class_names: Vec<String>,
    pub schema_hash: String,
    pub summary: Summary,
    pub mean_probabilistic: ConfusionMatrix,
    pub mean_error_focused: ConfusionMatrix,
    /// Ordered by run, then fold.
    pub evaluations: Vec<FoldResult>,
}

impl ExperimentResult {
    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.evaluations.iter().map(|f| metric.of(&f.report)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Invariant(format!("serializing result: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let corrupt = |message: String| Error::Corrupt {
            path: PathBuf::from("<result>"),
            message,
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
        check_version(&value, RESULT_VERSION).map_err(|e| match e {
            Error::Corrupt { message, .. } => corrupt(message),
            other => other,
        })?;
        serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Corrupt { message, .. } => Error::Corrupt {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }
}

/// Trains and evaluates every (run, fold) split.
///
/// Splits are processed in parallel and collected in (run, fold) order, so
/// the result depends only on the configuration. Each training run's loss
/// bounds are re-checked; a violation is an [`Error::Invariant`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let d = cfg.load_dataset()?;
    run_on_dataset(cfg, &d)
}

/// [`run_experiment`] on an already-loaded dataset.
pub fn run_on_dataset(cfg: &ExperimentConfig, d: &Dataset) -> Result<ExperimentResult> {
    cfg.validate()?;
    let boost = cfg.boost_config()?;
    boost.scheme.validate(d.num_classes())?;
    let plan = stratified_folds(d, cfg.folds, cfg.runs, cfg.seed)?;
    let k = d.num_classes();

    let splits: Vec<(usize, usize)> = (0..cfg.runs)
        .flat_map(|r| (0..cfg.folds).map(move |f| (r, f)))
        .collect();
    let evaluations = splits
        .par_iter()
        .map(|&(run, fold)| -> Result<FoldResult> {
            let context = |e: Error| match e {
                Error::Data(m) => Error::Data(format!("run {run}, fold {fold}: {m}")),
                other => other,
            };
            let train_set = d.subset(&plan.train_indices(run, fold)).map_err(context)?;
            let test_set = d.subset(plan.test_indices(run, fold)).map_err(context)?;
            let model = train(&train_set, &boost)?;
            check_training(&model, &boost.scheme, k)
                .map_err(|e| Error::Invariant(format!("run {run}, fold {fold}: {e}")))?;
            let report = evaluate(&model, &test_set)?;
            check_report(&report, test_set.priors())
                .map_err(|e| Error::Invariant(format!("run {run}, fold {fold}: {e}")))?;
            Ok(FoldResult {
                run,
                fold,
                train_size: train_set.len(),
                report,
                telemetry: Telemetry::of(&model),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let reports: Vec<&EvaluationReport> = evaluations.iter().map(|f| &f.report).collect();
    let agg = |m: Metric| Aggregate::of(&reports.iter().map(|r| m.of(r)).collect::<Vec<_>>());
    let summary = Summary {
        accuracy: agg(Metric::Accuracy),
        g_mean: agg(Metric::GMean),
        mauc: agg(Metric::Mauc),
        operator_norm: agg(Metric::OperatorNorm),
        l1_risk: agg(Metric::L1Risk),
    };
    let mean_probabilistic = mean_matrix(reports.iter().map(|r| &r.probabilistic), k, MatrixForm::Probabilistic)?;
    let mean_error_focused = mean_matrix(reports.iter().map(|r| &r.error_focused), k, MatrixForm::ErrorFocused)?;

    Ok(ExperimentResult {
        version: RESULT_VERSION,
        dataset: cfg.dataset_name(),
        algorithm: cfg.algorithm,
        rounds: cfg.rounds,
        depth: cfg.depth,
        folds: cfg.folds,
        runs: cfg.runs,
        seed: cfg.seed,
        subsample: cfg.subsample.filter(|&f| f < 1.0),
        examples: d.len(),
        class_names: d.schema().class_names().to_vec(),
        schema_hash: d.schema().hash(),
        summary,
        mean_probabilistic,
        mean_error_focused,
        evaluations,
    })
}

fn check_training(model: &BoostedEnsemble, scheme: &WeightScheme, k: usize) -> Result<()> {
    if *scheme == WeightScheme::InverseClassFrequency {
        let expected = (k * (k - 1)) as f64;
        if model.initial_loss != expected {
            return Err(Error::Invariant(format!(
                "initial loss {} differs from K(K−1) = {expected}",
                model.initial_loss
            )));
        }
    }
    model.verify_loss_bounds()
}

fn check_report(r: &EvaluationReport, priors: &[f64]) -> Result<()> {
    let risk = r.error_focused.l1_risk(priors)?;
    if (r.accuracy + risk - 1.0).abs() > 1e-12 {
        return Err(Error::Invariant(format!(
            "accuracy {} and l1 risk {risk} do not sum to 1",
            r.accuracy
        )));
    }
    Ok(())
}

fn mean_matrix<'a>(
    matrices: impl Iterator<Item = &'a ConfusionMatrix>,
    k: usize,
    form: MatrixForm,
) -> Result<ConfusionMatrix> {
    let mut sum = vec![0.0; k * k];
    let mut n = 0usize;
    for c in matrices {
        for (s, v) in sum.iter_mut().zip(c.entries()) {
            *s += v;
        }
        n += 1;
    }
    let entries = sum.into_iter().map(|s| s / n as f64).collect();
    ConfusionMatrix::from_entries(k, entries, form)
}

/// Outcome of a two-sample Student t test on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: Metric,
    pub confidence: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub t: f64,
    pub degrees_of_freedom: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub significant: bool,
    /// `"a"` or `"b"` when significant, by the metric's own direction.
    pub better: Option<String>,
}

/// Pooled-variance two-sample t test over the per-fold values of `metric`.
pub fn compare(a: &ExperimentResult, b: &ExperimentResult, metric: Metric, confidence: f64) -> Result<Comparison> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Config(format!("confidence {confidence} not in (0, 1)")));
    }
    let xa = a.values(metric);
    let xb = b.values(metric);
    if xa.len() != xb.len() {
        return Err(Error::InvalidInput(format!(
            "result sizes differ: {} vs {} evaluations",
            xa.len(),
            xb.len()
        )));
    }
    let n = xa.len() as f64;
    if xa.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 evaluations per result".into()));
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / n;
    let (ma, mb) = (mean(&xa), mean(&xb));
    let ss = |x: &[f64], m: f64| x.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let df = 2.0 * n - 2.0;
    let pooled = (ss(&xa, ma) + ss(&xb, mb)) / df;
    let se = (pooled * 2.0 / n).sqrt();
    let diff = ma - mb;
    let t = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let critical_value = dist.inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let p_value = if t.is_infinite() { 0.0 } else { 2.0 * (1.0 - dist.cdf(t.abs())) };
    let significant = t.abs() > critical_value;
    let better = significant.then(|| {
        let a_higher = diff > 0.0;
        if a_higher == metric.higher_is_better() { "a" } else { "b" }.to_string()
    });
    Ok(Comparison {
        metric,
        confidence,
        mean_a: ma,
        mean_b: mb,
        t,
        degrees_of_freedom: df,
        critical_value,
        p_value,
        significant,
        better,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" | "txt" | "table" => Ok(ReportFormat::Text),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

/// Writes `r` into `dir` and returns the files created.
///
/// * json: `<dataset>-<algo>.json`
/// * csv: per-fold metrics, both mean confusion matrices, and the loss
///   curves
/// * text: a readable summary
pub fn emit_report(r: &ExperimentResult, format: ReportFormat, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = format!("{}-{}", r.dataset, r.algorithm.tag());
    let files: Vec<(String, String)> = match format {
        ReportFormat::Json => vec![(format!("{stem}.json"), r.to_json()? + "\n")],
        ReportFormat::Csv => vec![
            (format!("{stem}-folds.csv"), folds_csv(r)),
            (format!("{stem}-confusion-probabilistic.csv"), r.mean_probabilistic.to_csv()),
            (format!("{stem}-confusion-error.csv"), r.mean_error_focused.to_csv()),
            (format!("{stem}-telemetry.csv"), telemetry_csv(r)),
        ],
        ReportFormat::Text => vec![(format!("{stem}.txt"), render_text(r))],
    };
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn folds_csv(r: &ExperimentResult) -> String {
    let mut s = String::from("run,fold,train_size,test_size,accuracy,g_mean,mauc,operator_norm,l1_risk\n");
    for f in &r.evaluations {
        let e = &f.report;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            f.run, f.fold, f.train_size, e.examples, e.accuracy, e.g_mean, e.mauc, e.operator_norm, e.l1_risk
        );
    }
    s
}

fn telemetry_csv(r: &ExperimentResult) -> String {
    let mut s = String::from("run,fold,round,edge,alpha,loss\n");
    for f in &r.evaluations {
        let t = &f.telemetry;
        let _ = writeln!(s, "{},{},0,,,{}", f.run, f.fold, t.initial_loss);
        for (i, ((e, a), l)) in t.edges.iter().zip(&t.alphas).zip(&t.losses).enumerate() {
            let _ = writeln!(s, "{},{},{},{e},{a},{l}", f.run, f.fold, i + 1);
        }
    }
    s
}

/// Human-readable summary of one result.
pub fn render_text(r: &ExperimentResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} / {}: {} examples, {} classes, T={}, depth {}, {}×{}-fold CV, seed {}",
        r.dataset,
        r.algorithm.tag(),
        r.examples,
        r.class_names.len(),
        r.rounds,
        r.depth,
        r.runs,
        r.folds,
        r.seed
    );
    if let Some(f) = r.subsample {
        let _ = writeln!(s, "stratified subsample: {f}");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<15}{:>10}{:>10}{:>10}{:>10}", "metric", "mean", "std", "min", "max");
    for m in Metric::ALL {
        let a = r.summary.get(m);
        let _ = writeln!(s, "{:<15}{:>10.4}{:>10.4}{:>10.4}{:>10.4}", m.name(), a.mean, a.std, a.min, a.max);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "mean error-focused confusion matrix (rows: true class)");
    let width = r.class_names.iter().map(|c| c.len()).max().unwrap_or(0).max(7);
    let _ = write!(s, "{:width$}", "");
    for c in &r.class_names {
        let _ = write!(s, " {c:>width$}");
    }
    let _ = writeln!(s);
    for (l, name) in r.class_names.iter().enumerate() {
        let _ = write!(s, "{name:width$}");
        for v in r.mean_error_focused.row(l) {
            let _ = write!(s, " {v:>width$.3}");
        }
        let _ = writeln!(s);
    }
    s
}

/// Metric-per-dataset table: one row per dataset, one column per algorithm,
/// cells `mean ± std`.
pub fn render_table(results: &[ExperimentResult], metric: Metric) -> String {
    let mut datasets: Vec<&str> = Vec::new();
    let mut algorithms: Vec<Algorithm> = Vec::new();
    for r in results {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm);
        }
    }
    let mut s = String::new();
    let _ = write!(s, "{:<16}", metric.name());
    for a in &algorithms {
        let _ = write!(s, "{:>18}", a.tag());
    }
    let _ = writeln!(s);
    for d in datasets {
        let _ = write!(s, "{d:<16}");
        for &a in &algorithms {
            match results.iter().find(|r| r.dataset == d && r.algorithm == a) {
                Some(r) => {
                    let g = r.summary.get(metric);
                    let _ = write!(s, "{:>18}", format!("{:.3} ± {:.3}", g.mean, g.std));
                }
                None => {
                    let _ = write!(s, "{:>18}", "-");
                }
            }
        }
        let _ = writeln!(s);
    }
    s
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: BoostedEnsemble,
}

/// Writes `e` as versioned JSON.
pub fn save_model(e: &BoostedEnsemble, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        model: e.clone(),
    };
    let text = serde_json::to_string(&file).map_err(|e| Error::Invariant(format!("serializing model: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a model written by [`save_model`], rejecting other versions and
/// structurally invalid contents.
pub fn load_model(path: impl AsRef<Path>) -> Result<BoostedEnsemble> {
    let path = path.as_ref();
    let corrupt = |message: String| Error::Corrupt {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(MODEL_FORMAT) {
        return Err(corrupt("not a model file".into()));
    }
    check_version(&value, MODEL_VERSION).map_err(|e| match e {
        Error::Corrupt { message, .. } => corrupt(message),
        other => other,
    })?;
    let file: ModelFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    let model = file.model;
    if model.schema.hash() != model.schema_hash {
        return Err(corrupt("schema hash does not match the stored schema".into()));
    }
    for (t, r) in model.rounds.iter().enumerate() {
        let shape_ok = r.tree.num_features() == model.num_features() && r.tree.num_classes() == model.num_classes();
        if !shape_ok || r.tree.validate().is_err() || !r.alpha.is_finite() {
            return Err(corrupt(format!("round {} is malformed", t + 1)));
        }
    }
    Ok(model)
}

fn check_version(value: &serde_json::Value, expected: u32) -> Result<()> {
    match value.get("version") {
        None => Err(Error::Corrupt {
            path: PathBuf::new(),
            message: "missing version field".into(),
        }),
        Some(v) if v.as_u64() == Some(expected as u64) => Ok(()),
        Some(v) => Err(Error::Version {
            found: v.to_string(),
            expected: expected.to_string(),
        }),
    }
}
