//! `dashgen`: index a component corpus, generate pages from a wireframe,
//! repair them, and evaluate generated code against a reference dataset.
//!
//! Exit codes: 0 success, 1 a task or file failed, 2 configuration or
//! environment error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use dashgen::evaluation::{BleuMode, CorpusCounts, PassMode, ReportOptions};
use dashgen::promptgen::ShotStrategy;

use commands::{EvaluateArgs, Status};
use config::{Config, LlmMode};

#[derive(Parser)]
#[command(name = "dashgen", version, about = "Wireframe-driven dashboard generation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for values in the configuration file.
#[derive(Args)]
struct Global {
    /// Configuration file (default: ./dashgen.toml when present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Component corpus directory.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Workspace root that receives generated files.
    #[arg(long, global = true)]
    workspace: Option<PathBuf>,
    /// Directory for the graph, index, run records and repair outcomes.
    #[arg(long, global = true)]
    state: Option<PathBuf>,
    /// Shot strategy: zero, one, few or few:K.
    #[arg(long, global = true)]
    strategy: Option<ShotStrategy>,
    /// Retrieved entities per prompt.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    nprobe: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    sim_threshold: Option<f64>,
    /// Repair rounds (A).
    #[arg(long, global = true)]
    attempts: Option<usize>,
    /// Fix proposals per broken file per round (F).
    #[arg(long, global = true)]
    fixes: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the deterministic offline LLM and repair agent.
    #[arg(long, global = true)]
    mock_llm: bool,
    #[arg(long, global = true)]
    parallelism: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest the corpus into a knowledge graph and train the retrieval index.
    Index,
    /// Generate the pages of an app spec into the workspace.
    Generate {
        /// App spec (TOML) listing the pages.
        #[arg(long)]
        app: PathBuf,
        /// Wireframe SVG, overriding the one named in the spec.
        #[arg(long)]
        wireframe: Option<PathBuf>,
    },
    /// Validate the workspace and let the agent fix broken files.
    Repair,
    /// Score completions against a dataset and print the metric report.
    Evaluate(EvaluateCli),
    /// Generate a reference dataset from the built-in page templates.
    Dataset {
        /// Entries per page type: base,home,geovisualization.
        #[arg(long, default_value = "2,2,2")]
        counts: String,
        /// Output file (default: the configured dataset path).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a summary of a file written by dashgen, or of a wireframe SVG.
    Inspect { file: PathBuf },
}

#[derive(Args)]
struct EvaluateCli {
    /// Dataset file (default: the configured dataset path).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Samples file to score; repeat for several strategies. Without it,
    /// samples are drawn from the configured LLM.
    #[arg(long = "samples")]
    samples: Vec<PathBuf>,
    /// Strategies to sample, comma separated (default: --strategy).
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<ShotStrategy>,
    /// Samples per entry when sampling.
    #[arg(long)]
    n: Option<u64>,
    /// Output directory for report.txt, report.json and drawn samples.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Values of k for pass@k, comma separated.
    #[arg(long, value_delimiter = ',')]
    ks: Vec<u64>,
    /// Pool samples over a row's entries before computing pass@k.
    #[arg(long)]
    pooled: bool,
    /// Corpus-level BLEU instead of the mean of sentence scores.
    #[arg(long)]
    corpus_bleu: bool,
    /// Replace the LLM with a sampler whose samples pass with this probability.
    #[arg(long)]
    mock_pass_rate: Option<f64>,
}

fn apply_overrides(cfg: &mut Config, g: &Global) {
    if let Some(p) = &g.corpus {
        cfg.paths.corpus = p.clone();
    }
    if let Some(p) = &g.workspace {
        cfg.paths.workspace = p.clone();
    }
    if let Some(p) = &g.state {
        cfg.paths.state = p.clone();
    }
    if let Some(s) = g.strategy {
        cfg.generation.strategy = s;
    }
    if let Some(k) = g.k {
        cfg.retrieval.k = k;
    }
    if let Some(n) = g.nprobe {
        cfg.retrieval.nprobe = n;
    }
    if let Some(t) = g.sim_threshold {
        cfg.retrieval.sim_threshold = t;
    }
    if let Some(a) = g.attempts {
        cfg.repair.attempts = a;
    }
    if let Some(f) = g.fixes {
        cfg.repair.fixes = f;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if g.mock_llm {
        cfg.llm.mode = LlmMode::Mock;
    }
    if let Some(p) = g.parallelism {
        cfg.generation.parallelism = p;
    }
}

fn parse_counts(s: &str) -> Result<CorpusCounts> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| dashgen::Error::Parameter(format!("bad --counts {s:?}")))?;
    match parts[..] {
        [b, h, g] => Ok(CorpusCounts::new(b, h, g)),
        _ => bail!(dashgen::Error::Parameter(format!(
            "--counts takes three numbers (base,home,geovisualization), got {s:?}"
        ))),
    }
}

fn run(cli: Cli) -> Result<Status> {
    let mut cfg = Config::load(cli.global.config.as_deref())?;
    apply_overrides(&mut cfg, &cli.global);
    if let Command::Evaluate(e) = &cli.command {
        if !e.ks.is_empty() {
            cfg.evaluation.ks = e.ks.clone();
        }
        if let Some(n) = e.n {
            cfg.evaluation.samples = n;
        }
        if e.pooled {
            cfg.evaluation.pass_mode = PassMode::Pooled;
        }
        if e.corpus_bleu {
            cfg.evaluation.bleu_mode = BleuMode::Corpus;
        }
    }
    cfg.validate()
        .map_err(|e| dashgen::Error::Config(format!("{e:#}")))?;

    match cli.command {
        Command::Index => commands::index(&cfg),
        Command::Generate { app, wireframe } => commands::generate(&cfg, &app, wireframe.as_deref()),
        Command::Repair => commands::repair(&cfg),
        Command::Evaluate(e) => {
            let args = EvaluateArgs {
                dataset: e.dataset.unwrap_or_else(|| cfg.paths.dataset.clone()),
                samples: e.samples,
                strategies: if e.strategies.is_empty() {
                    vec![cfg.generation.strategy]
                } else {
                    e.strategies
                },
                n: cfg.evaluation.samples,
                out: e.out.unwrap_or_else(|| cfg.paths.state.join("eval")),
                options: ReportOptions {
                    ks: cfg.evaluation.ks.clone(),
                    pass_mode: cfg.evaluation.pass_mode,
                    bleu_mode: cfg.evaluation.bleu_mode,
                },
                mock_pass_rate: e.mock_pass_rate,
            };
            commands::evaluate(&cfg, &args)
        }
        Command::Dataset { counts, out } => {
            let counts = parse_counts(&counts)?;
            let out = out.unwrap_or_else(|| cfg.paths.dataset.clone());
            commands::dataset(&cfg, counts, &out)
        }
        Command::Inspect { file } => commands::inspect(&file),
    }
}

/// 2 for configuration and environment errors, 1 for everything else
/// raised by a pipeline stage.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<dashgen::Error>() {
            return if e.is_configuration() { 2 } else { 1 };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
