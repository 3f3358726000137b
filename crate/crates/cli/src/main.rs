use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use combo_core::boost::train;
use combo_core::data::load_csv;
use combo_core::harness::{
    compare, emit_report, load_model, render_table, render_text, run_experiment, save_model, Algorithm,
    ExperimentConfig, ExperimentResult, Metric, ReportFormat,
};
use combo_core::metrics::evaluate;
use combo_core::{Error, Result};

/// CoMBo and AdaBoost.MM boosting with imbalance-aware evaluation.
#[derive(Parser)]
#[command(name = "combo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model on a whole dataset and save it.
    Train {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Where to write the model.
        #[arg(long)]
        model: PathBuf,
    },
    /// Evaluate a saved model on a labelled CSV file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Repeated stratified cross-validation.
    Cv {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Report formats written to --out (json, csv, text).
        #[arg(long, value_delimiter = ',', default_value = "json")]
        format: Vec<String>,
    },
    /// Student t test between two cross-validation results.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "g_mean")]
        metric: String,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
    /// Render saved cross-validation results.
    Report {
        results: Vec<PathBuf>,
        /// text (one summary per result), table (metric per dataset), json or csv.
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long, default_value = "g_mean")]
        metric: String,
        /// Output directory for json/csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stratified fraction of the data to use.
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long)]
    pairwise_costs: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.data) {
            (Some(path), _) => ExperimentConfig::from_file(path)?,
            (None, Some(data)) => ExperimentConfig::new(data, Algorithm::Combo),
            (None, None) => return Err(Error::Config("pass --config or --data".into())),
        };
        if let Some(d) = &self.data {
            cfg.data = d.clone();
        }
        if let Some(s) = &self.schema {
            cfg.schema = Some(s.clone());
        }
        if let Some(a) = &self.algo {
            cfg.algorithm = a.parse()?;
        }
        if let Some(p) = &self.pairwise_costs {
            cfg.pairwise_costs = Some(p.clone());
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        cfg.rounds = self.rounds.unwrap_or(cfg.rounds);
        cfg.depth = self.depth.unwrap_or(cfg.depth);
        cfg.folds = self.folds.unwrap_or(cfg.folds);
        cfg.runs = self.runs.unwrap_or(cfg.runs);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.subsample = self.subsample.or(cfg.subsample);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train { exp, model } => {
            let cfg = exp.resolve()?;
            let d = cfg.load_dataset()?;
            let ensemble = train(&d, &cfg.boost_config()?)?;
            ensemble.verify_loss_bounds()?;
            save_model(&ensemble, &model)?;
            println!(
                "trained {} rounds on {} examples, loss {:.6} -> {:.6e}",
                ensemble.rounds.len(),
                d.len(),
                ensemble.initial_loss,
                ensemble.final_loss()
            );
            if let Some(h) = &ensemble.halt {
                println!("stopped early: {h:?}");
            }
            println!("model written to {}", model.display());
        }
        Command::Eval { model, data, json } => {
            let ensemble = load_model(&model)?;
            let d = load_csv(&data, &ensemble.schema)?;
            let report = evaluate(&ensemble, &d)?;
            if json {
                let text = serde_json::to_string_pretty(&report)
                    .map_err(|e| Error::Invariant(format!("serializing report: {e}")))?;
                println!("{text}");
            } else {
                print!("{report}");
            }
        }
        Command::Cv { exp, format } => {
            let cfg = exp.resolve()?;
            let result = run_experiment(&cfg)?;
            match &cfg.out {
                Some(dir) => {
                    for f in &format {
                        for path in emit_report(&result, f.parse()?, dir)? {
                            println!("wrote {}", path.display());
                        }
                    }
                }
                None => print!("{}", render_text(&result)),
            }
        }
        Command::Compare {
            a,
            b,
            metric,
            confidence,
        } => {
            let (ra, rb) = (ExperimentResult::read(&a)?, ExperimentResult::read(&b)?);
            let c = compare(&ra, &rb, metric.parse()?, confidence)?;
            println!("{}: a = {:.4}, b = {:.4}", c.metric.name(), c.mean_a, c.mean_b);
            println!(
                "t = {:.4} (df {}), critical {:.4}, p = {:.4}",
                c.t, c.degrees_of_freedom, c.critical_value, c.p_value
            );
            match &c.better {
                Some(w) => {
                    let winner = if w == "a" { &a } else { &b };
                    println!("significant at {}%: {} is better", c.confidence * 100.0, winner.display());
                }
                None => println!("not significant at {}%", c.confidence * 100.0),
            }
        }
        Command::Report {
            results,
            format,
            metric,
            out,
        } => {
            if results.is_empty() {
                return Err(Error::Config("no result files given".into()));
            }
            let loaded = results.iter().map(ExperimentResult::read).collect::<Result<Vec<_>>>()?;
            match format.as_str() {
                "table" => print!("{}", render_table(&loaded, metric.parse::<Metric>()?)),
                "text" => {
                    for r in &loaded {
                        println!("{}", render_text(r));
                    }
                }
                other => {
                    let f: ReportFormat = other.parse()?;
                    let dir = out.as_deref().unwrap_or(Path::new("."));
                    for r in &loaded {
                        for path in emit_report(r, f, dir)? {
                            println!("wrote {}", path.display());
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
