use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use zscan::classify::{ClassifierKind, TrainedClassifier};
use zscan::cmos::{synthesize_dataset, SimulatorConfig};
use zscan::error::{Error, Result};
use zscan::freqselect::{max_kept_pair_correlation, FrequencySelection, RelevancePolicy};
use zscan::io;
use zscan::metrics::EvaluationReport;
use zscan::pipeline::{self, PipelineConfig, TrainingReport, SUMMARY_HEADER};
use zscan::rf::feature_matrix_subset;

#[derive(Parser)]
#[command(name = "zscan", version, about = "Firmware activity fingerprinting from RF impedance sweeps")]
struct Cli {
    /// Root seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// JSON file with optional `simulator` and `pipeline` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a labeled sweep corpus.
    Simulate {
        /// Bare simulator config JSON; takes precedence over `--config`.
        sim_config: Option<PathBuf>,
    },
    /// Pick relevant, non-redundant frequency columns.
    Select {
        dataset: PathBuf,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        #[arg(long)]
        top_fraction: Option<f64>,
        #[arg(long)]
        rel_threshold: Option<f64>,
        #[arg(long)]
        max_corr: Option<f64>,
        /// Recompute every kept pair's correlation and check it.
        #[arg(long)]
        verify: bool,
    },
    /// Cross-validate, fit and score one classifier.
    Train {
        dataset: PathBuf,
        /// Selection JSON; computed on the training split when absent.
        #[arg(long)]
        selection: Option<PathBuf>,
        #[arg(long, value_parser = parse_kind)]
        model: Option<ClassifierKind>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Apply a trained bundle to a dataset.
    Evaluate {
        model: PathBuf,
        dataset: PathBuf,
        /// Score only the rows the bundle held out during training.
        #[arg(long)]
        test_split: bool,
    },
    /// Tabulate training or evaluation reports.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    TopFraction,
    RelThreshold,
    Both,
}

fn parse_kind(s: &str) -> std::result::Result<ClassifierKind, String> {
    s.parse().map_err(|e: zscan::classify::ClassifyError| e.to_string())
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct FileConfig {
    simulator: SimulatorConfig,
    pipeline: PipelineConfig,
}

struct Ctx {
    out: PathBuf,
    quiet: bool,
    seed: Option<u64>,
    file: FileConfig,
}

impl Ctx {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn pipeline(&self) -> PipelineConfig {
        let mut cfg = self.file.pipeline.clone();
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("ZSCAN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("ZSCAN_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn simulate(ctx: &Ctx, sim_config: Option<&Path>) -> Result<()> {
    let mut cfg = match sim_config {
        Some(p) => io::read_config::<SimulatorConfig>(p)?,
        None => ctx.file.simulator.clone(),
    };
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    info!("synthesizing {} classes x {} observations", cfg.profiles.len(), cfg.observations_per_class);
    let ds = synthesize_dataset(&cfg)?;
    let path = ctx.out.join("dataset.csv");
    io::save_dataset(&path, &ds, Some(&cfg))?;
    ctx.say(format!("wrote {} traces x {} points to {}", ds.len(), ds.grid().len(), path.display()));
    Ok(())
}

fn select(
    ctx: &Ctx,
    dataset: &Path,
    policy: Option<PolicyArg>,
    top_fraction: Option<f64>,
    rel_threshold: Option<f64>,
    max_corr: Option<f64>,
    verify: bool,
) -> Result<()> {
    let mut cfg = ctx.pipeline();
    let base = cfg.selection.policy;
    let fraction = top_fraction.or(base.fraction()).unwrap_or(0.20);
    let threshold = rel_threshold.or(base.threshold()).unwrap_or(0.70);
    let kind = policy.unwrap_or(match (top_fraction, rel_threshold) {
        (Some(_), None) => PolicyArg::TopFraction,
        (None, Some(_)) => PolicyArg::RelThreshold,
        (Some(_), Some(_)) => PolicyArg::Both,
        (None, None) => match base {
            RelevancePolicy::TopFraction { .. } => PolicyArg::TopFraction,
            RelevancePolicy::RelThreshold { .. } => PolicyArg::RelThreshold,
            RelevancePolicy::Both { .. } => PolicyArg::Both,
        },
    });
    cfg.selection.policy = match kind {
        PolicyArg::TopFraction => RelevancePolicy::TopFraction { fraction },
        PolicyArg::RelThreshold => RelevancePolicy::RelThreshold { threshold },
        PolicyArg::Both => RelevancePolicy::Both { fraction, threshold },
    };
    if let Some(m) = max_corr {
        cfg.selection.max_corr = m;
    }
    cfg.validate()?;

    let ds = io::load_dataset(dataset)?;
    let labels = ds.label_indices()?;
    let sel = pipeline::select(&ds, &labels, None, &cfg)?;
    io::write_json(&ctx.out.join("selection.json"), &sel)?;
    ctx.say(format!(
        "kept {} of {} ({:.2}%)",
        sel.stage2_count,
        sel.n_columns,
        100.0 * sel.stage2_count as f64 / sel.n_columns as f64
    ));
    if verify {
        let x = feature_matrix_subset(
            &ds,
            cfg.representation,
            cfg.open_circuit_cap,
            &(0..ds.len()).collect::<Vec<_>>(),
            &sel.kept_indices,
        )
        .values;
        let cols: Vec<usize> = (0..sel.kept_indices.len()).collect();
        let worst = max_kept_pair_correlation(&x, &cols);
        if worst >= cfg.selection.max_corr && sel.kept_indices.len() > 1 {
            return Err(Error::Config(format!(
                "verification failed: kept pair |r| = {worst} >= {}",
                cfg.selection.max_corr
            )));
        }
        ctx.say(format!("verified: max kept-pair |r| = {worst:.6} < {}", cfg.selection.max_corr));
    }
    Ok(())
}

fn format_row(label: &str, values: &[Option<f64>]) -> String {
    let mut s = format!("{label:<14}");
    for v in values {
        match v {
            Some(v) => s.push_str(&format!(" {:>11.2}", 100.0 * v)),
            None => s.push_str(&format!(" {:>11}", "-")),
        }
    }
    s
}

fn header() -> String {
    let mut s = format!("{:<14}", "model");
    for h in SUMMARY_HEADER {
        s.push_str(&format!(" {h:>11}"));
    }
    s
}

fn train(
    ctx: &Ctx,
    dataset: &Path,
    selection: Option<&Path>,
    model: Option<ClassifierKind>,
    folds: Option<usize>,
    test_fraction: Option<f64>,
) -> Result<()> {
    let mut cfg = ctx.pipeline();
    if let Some(m) = model {
        cfg.model.kind = m;
    }
    if let Some(f) = folds {
        cfg.folds = f;
    }
    if let Some(t) = test_fraction {
        cfg.test_fraction = t;
    }
    cfg.validate()?;
    let sel = selection.map(io::read_json::<FrequencySelection>).transpose()?;
    let ds = io::load_dataset(dataset)?;
    info!("training {} on {} traces", cfg.model.kind, ds.len());
    let (bundle, report) = pipeline::train(&ds, &cfg, sel)?;
    io::write_json(&ctx.out.join("model.json"), &bundle)?;
    io::write_json(&ctx.out.join("report.json"), &report)?;
    ctx.say(header());
    ctx.say(format_row(&report.model_tag, &report.summary_row().map(Some)));
    Ok(())
}

fn evaluate(ctx: &Ctx, model: &Path, dataset: &Path, test_split: bool) -> Result<()> {
    let bundle: TrainedClassifier = io::read_json(model)?;
    let ds = io::load_dataset(dataset)?;
    let report = pipeline::evaluate(&bundle, &ds, test_split)?;
    io::write_json(&ctx.out.join("evaluation.json"), &report)?;
    ctx.say(header());
    ctx.say(format_row(bundle.model.kind().tag(), &eval_row(None, &report)));
    Ok(())
}

fn eval_row(f1_train: Option<f64>, r: &EvaluationReport) -> [Option<f64>; 6] {
    [f1_train, Some(r.f1), Some(r.precision), Some(r.recall), Some(r.specificity), Some(r.accuracy_overall)]
}

/// Accepts either a training report or a bare evaluation report.
fn load_report(path: &Path) -> Result<(String, Vec<String>, [Option<f64>; 6])> {
    let value: serde_json::Value = io::read_json(path)?;
    let json_err = |source| Error::Json { path: path.to_path_buf(), source };
    if value.get("cv").is_some() && value.get("test").is_some() {
        let r: TrainingReport = serde_json::from_value(value).map_err(json_err)?;
        let row = eval_row(Some(r.cv.aggregate.f1), &r.test);
        Ok((r.model_tag, r.test.classes, row))
    } else {
        let r: EvaluationReport = serde_json::from_value(value).map_err(json_err)?;
        let tag = r.model_tag.clone().unwrap_or_else(|| path.display().to_string());
        Ok((tag, r.classes.clone(), eval_row(None, &r)))
    }
}

fn report(ctx: &Ctx, paths: &[PathBuf]) -> Result<()> {
    let mut rows = Vec::new();
    let mut roster: Option<Vec<String>> = None;
    for p in paths {
        let (tag, classes, row) = load_report(p)?;
        match &roster {
            Some(r) if *r != classes => {
                return Err(Error::Config(format!("{}: class roster {classes:?} differs from {r:?}", p.display())))
            }
            _ => roster = Some(classes),
        }
        rows.push((tag, row));
    }
    ctx.say(header());
    let mut csv = format!("model,{}\n", SUMMARY_HEADER.join(","));
    for (tag, row) in &rows {
        ctx.say(format_row(tag, row));
        let cells: Vec<String> = row.iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()).collect();
        csv.push_str(&format!("{tag},{}\n", cells.join(",")));
    }
    io::write_atomic(&ctx.out.join("report.csv"), csv.as_bytes())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let file = match &cli.config {
        Some(p) => io::read_config(p)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx { out: cli.out, quiet: cli.quiet, seed: cli.seed, file };
    match cli.command {
        Command::Simulate { sim_config } => simulate(&ctx, sim_config.as_deref()),
        Command::Select { dataset, policy, top_fraction, rel_threshold, max_corr, verify } => {
            select(&ctx, &dataset, policy, top_fraction, rel_threshold, max_corr, verify)
        }
        Command::Train { dataset, selection, model, folds, test_fraction } => {
            train(&ctx, &dataset, selection.as_deref(), model, folds, test_fraction)
        }
        Command::Evaluate { model, dataset, test_split } => evaluate(&ctx, &model, &dataset, test_split),
        Command::Report { reports } => report(&ctx, &reports),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
