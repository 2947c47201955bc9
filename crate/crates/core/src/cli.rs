//! Command-line workflows: synth, split, train, eval and heatmap.
//!
//! Every command writes its artifacts atomically and then a run manifest
//! beside the main artifact (`<artifact>.manifest.json`).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::corpus::{
    assign_splits, cluster_sections, generate_synthetic, leaking_pairs, read_corpus, write_corpus, ClusterOptions,
    Corpus, CorpusError, DistanceUnit, Provenance, Split,
};
use crate::embed::{load_pretrained, EmbeddingDims, EmbeddingError, EmbeddingSetup};
use crate::eval::{evaluate_model, MetricsOptions};
use crate::fsio::write_atomic;
use crate::heatmap::{attention_heatmap, render_ansi, render_html};
use crate::model::{load_checkpoint, save_checkpoint, ModelError, ModelVariant};
use crate::train::{fit, grid_search, GridSpec, TrainConfig, TrainError};

pub const SEED_ENV: &str = "DEONTIC_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("leak check failed: {0} similar pairs straddle splits")]
    Leak(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "deontic", version, about = "Obligation and prohibition detection in contract sections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled corpus.
    Synth(SynthArgs),
    /// Cluster near-duplicate sections and split the corpus by cluster.
    Split(SplitArgs),
    /// Train one model, or grid-search its hyper-parameters.
    Train(TrainArgs),
    /// Score a checkpoint on a labeled corpus.
    Eval(EvalArgs),
    /// Render attention weights per token.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub sections: u64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.8, value_parser = parse_threshold)]
    pub threshold: f64,
    #[arg(long, default_value = "0.70,0.18,0.12", value_parser = parse_ratios)]
    pub ratios: Ratios,
    #[arg(long, value_enum, default_value_t = UnitArg::Char)]
    pub unit: UnitArg,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Split table: doc_id, section_id, split.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write train.jsonl, dev.jsonl and test.jsonl here.
    #[arg(long)]
    pub subsets: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratios(pub [f64; 3]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitArg {
    Char,
    Token,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub model: ModelVariant,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    /// Search hidden {100,200,300} x batch {8,16,32} x dropout {0.4,0.5,0.6}.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub hidden: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0.001)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    /// Run all epochs, keeping the best dev-loss snapshot.
    #[arg(long)]
    pub no_early_stopping: bool,
    /// Context tokens per side for x-bilstm-att.
    #[arg(long, default_value_t = 150)]
    pub context: usize,
    /// Pretrained word vectors in text format.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub word_dim: usize,
    #[arg(long)]
    pub train_embeddings: bool,
    #[arg(long, default_value_t = 2)]
    pub min_count: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Text table; the JSON form goes to `<report>.json`.
    #[arg(long)]
    pub report: PathBuf,
    /// Leave the None class out of the micro averages.
    #[arg(long)]
    pub micro_excludes_none: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatmapFormat {
    Html,
    Ansi,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = HeatmapFormat::Html)]
    pub format: HeatmapFormat,
    #[arg(long)]
    pub out: PathBuf,
    /// Only the first N sections.
    #[arg(long)]
    pub max_sections: Option<usize>,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if t > 0.0 && t <= 1.0 {
        Ok(t)
    } else {
        Err(format!("threshold must be in (0, 1], got {t}"))
    }
}

fn parse_ratios(s: &str) -> Result<Ratios, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [a, b, c] = parts[..] else {
        return Err(format!("expected three comma-separated ratios, got {}", parts.len()));
    };
    if [a, b, c].iter().any(|r| !(*r > 0.0)) || (a + b + c - 1.0).abs() > 1e-6 {
        return Err(format!("ratios must be positive and sum to 1, got {a},{b},{c}"));
    }
    Ok(Ratios([a, b, c]))
}

/// What one invocation did, written next to its main artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub started_unix: f64,
    /// Seconds per phase, plus `total`.
    pub timings: BTreeMap<String, f64>,
    pub results: serde_json::Value,
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    sibling(artifact, "manifest.json")
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

struct Run {
    manifest: RunManifest,
    clock: Instant,
    phase: Instant,
}

impl Run {
    fn start(command: &str, config: &impl Serialize, seed: Option<u64>) -> Self {
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64());
        Run {
            manifest: RunManifest {
                command: command.into(),
                config: serde_json::to_value(config).expect("config serializes"),
                seed,
                inputs: Vec::new(),
                outputs: Vec::new(),
                version: env!("CARGO_PKG_VERSION").into(),
                started_unix,
                timings: BTreeMap::new(),
                results: json!({}),
            },
            clock: Instant::now(),
            phase: Instant::now(),
        }
    }

    fn lap(&mut self, name: &str) {
        self.manifest
            .timings
            .insert(name.into(), self.phase.elapsed().as_secs_f64());
        self.phase = Instant::now();
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(path, bytes).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.manifest.outputs.push(path.to_path_buf());
        Ok(())
    }

    fn finish(mut self, artifact: &Path) -> Result<RunManifest, CliError> {
        self.manifest
            .timings
            .insert("total".into(), self.clock.elapsed().as_secs_f64());
        let path = manifest_path(artifact);
        self.manifest.outputs.push(path.clone());
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        write_atomic(&path, text.as_bytes()).map_err(|source| CliError::Io { path, source })?;
        Ok(self.manifest)
    }
}

pub fn cmd_synth(args: &SynthArgs) -> Result<RunManifest, CliError> {
    let mut run = Run::start("synth", args, Some(args.seed));
    let corpus = generate_synthetic(args.sections as usize, args.seed);
    run.lap("generate");
    write_corpus(&corpus, &args.out)?;
    run.manifest.outputs.push(args.out.clone());
    run.lap("write");
    run.manifest.results = json!({
        "sections": corpus.sections.len(),
        "sentences": corpus.sentence_count(),
        "labels": label_counts(&corpus),
    });
    run.finish(&args.out)
}

fn label_counts(corpus: &Corpus) -> BTreeMap<&'static str, usize> {
    crate::text::ClassLabel::ALL
        .iter()
        .zip(corpus.label_counts())
        .map(|(l, n)| (l.key(), n))
        .collect()
}

pub fn cmd_split(args: &SplitArgs) -> Result<RunManifest, CliError> {
    let mut run = Run::start("split", args, Some(args.seed));
    run.manifest.inputs.push(args.input.clone());
    let corpus = read_corpus(&args.input)?;
    run.lap("read");
    let options = ClusterOptions {
        threshold: args.threshold,
        unit: match args.unit {
            UnitArg::Char => DistanceUnit::Char,
            UnitArg::Token => DistanceUnit::Token,
        },
    };
    let clusters = cluster_sections(&corpus.sections, &options)?;
    run.lap("cluster");
    let sizes: Vec<usize> = corpus.sections.iter().map(|s| s.sentences.len()).collect();
    let assignment = assign_splits(&clusters, &sizes, args.ratios.0, args.seed)?;
    run.lap("assign");
    let leaks = leaking_pairs(&corpus.sections, &assignment.splits, &options)?;
    run.lap("leak_check");
    if !leaks.is_empty() {
        return Err(CliError::Leak(leaks.len()));
    }

    if let Some(dir) = &args.subsets {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        for split in Split::ALL {
            let path = dir.join(format!("{split}.jsonl"));
            let subset = Corpus::new(
                corpus.subset(&assignment, split),
                Provenance {
                    source: format!("{}:{split}", corpus.provenance.source),
                    seed: corpus.provenance.seed,
                },
            );
            write_corpus(&subset, &path)?;
            run.manifest.outputs.push(path);
        }
    }
    run.write(&args.out, assignment.to_table(&corpus.sections).as_bytes())?;
    let largest = clusters.iter().map(Vec::len).max().unwrap_or(0);
    run.manifest.results = json!({
        "sections": corpus.sections.len(),
        "clusters": clusters.len(),
        "largest_cluster": largest,
        "sentences": {"train": assignment.sentences[0], "dev": assignment.sentences[1], "test": assignment.sentences[2]},
        "fractions": assignment.fractions(),
        "warnings": assignment.warnings,
        "leak_check": {"performed": true, "pairs": leaks.len(), "passed": leaks.is_empty()},
    });
    run.finish(&args.out)
}

fn train_config(args: &TrainArgs) -> TrainConfig {
    TrainConfig {
        hidden: args.hidden,
        batch_size: args.batch_size,
        dropout: args.dropout,
        learning_rate: args.learning_rate,
        max_epochs: args.epochs,
        patience: (!args.no_early_stopping).then_some(args.patience),
        seed: args.seed,
        context: args.context,
    }
}

fn embedding_setup(args: &TrainArgs) -> Result<EmbeddingSetup, CliError> {
    let mut setup = EmbeddingSetup::with_dims(EmbeddingDims {
        word: args.word_dim,
        ..EmbeddingDims::default()
    });
    if let Some(path) = &args.embeddings {
        setup.words = Some(load_pretrained(path, args.word_dim)?);
    }
    setup.train_words = args.train_embeddings;
    setup.min_count = args.min_count;
    Ok(setup)
}

pub fn cmd_train(args: &TrainArgs) -> Result<RunManifest, CliError> {
    let mut run = Run::start("train", args, Some(args.seed));
    let config = train_config(args);
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    run.manifest.inputs.extend([args.train.clone(), args.dev.clone()]);
    if let Some(p) = &args.embeddings {
        run.manifest.inputs.push(p.clone());
    }
    let train = read_corpus(&args.train)?;
    let dev = read_corpus(&args.dev)?;
    let setup = embedding_setup(args)?;
    run.lap("load");

    let (fitted, grid) = if args.grid {
        let result = grid_search(args.model, &train.sections, &dev.sections, &config, &GridSpec::default(), &setup)?;
        let summary = json!({
            "cells": result.cells,
            "best_index": result.best_index,
            "best_config": result.best,
        });
        (result.fitted, Some(summary))
    } else {
        (fit(args.model, &train.sections, &dev.sections, &config, &setup)?, None)
    };
    run.lap("fit");

    save_checkpoint(&fitted.params, &args.out)?;
    run.manifest.outputs.push(args.out.clone());
    let report = serde_json::to_string_pretty(&fitted.report).expect("report serializes");
    run.write(&sibling(&args.out, "report.json"), report.as_bytes())?;
    run.lap("write");
    run.manifest.results = json!({
        "variant": args.model,
        "resolved_config": fitted.report.config,
        "parameters": fitted.report.parameters,
        "best_epoch": fitted.report.best_epoch,
        "best_dev_loss": fitted.report.best_dev_loss,
        "epochs_run": fitted.report.epochs.len(),
        "stopped_early": fitted.report.stopped_early,
        "epoch_seconds": fitted.report.epochs.iter().map(|e| e.seconds).collect::<Vec<_>>(),
        "grid": grid,
    });
    run.finish(&args.out)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<RunManifest, CliError> {
    let mut run = Run::start("eval", args, None);
    run.manifest.inputs.extend([args.model.clone(), args.test.clone()]);
    let params = load_checkpoint(&args.model)?;
    let test = read_corpus(&args.test)?;
    run.lap("load");
    let options = MetricsOptions {
        micro_includes_none: !args.micro_excludes_none,
    };
    let report = evaluate_model(&params, &test.sections, options)?;
    run.lap("evaluate");
    let table = report.to_table(params.config.variant.display_name());
    run.write(&args.report, table.as_bytes())?;
    run.write(&sibling(&args.report, "json"), report.to_json().as_bytes())?;
    println!("{table}");
    run.manifest.results = json!({
        "variant": params.config.variant,
        "instances": report.instances,
        "accuracy": report.accuracy,
        "macro_f1": report.macro_avg.f1,
        "micro_f1": report.micro_avg.f1,
    });
    run.finish(&args.report)
}

pub fn cmd_heatmap(args: &HeatmapArgs) -> Result<RunManifest, CliError> {
    let mut run = Run::start("heatmap", args, None);
    run.manifest.inputs.extend([args.model.clone(), args.input.clone()]);
    let params = load_checkpoint(&args.model)?;
    if !params.config.variant.has_attention() {
        return Err(ModelError::NoAttention.into());
    }
    let corpus = read_corpus(&args.input)?;
    let n = args.max_sections.unwrap_or(corpus.sections.len()).min(corpus.sections.len());
    let rows = attention_heatmap(&params, &corpus.sections[..n])?;
    run.lap("attend");
    let body = match args.format {
        HeatmapFormat::Html => render_html(
            &rows,
            &format!("{} attention", params.config.variant.display_name()),
        ),
        HeatmapFormat::Ansi => render_ansi(&rows),
    };
    run.write(&args.out, body.as_bytes())?;
    run.manifest.results = json!({"sentences": rows.len(), "sections": n});
    run.finish(&args.out)
}

pub fn run(cli: &Cli) -> Result<RunManifest, CliError> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Split(a) => cmd_split(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Heatmap(a) => cmd_heatmap(a),
    }
}

/// Parses `args` (program name first), runs the command and maps the
/// outcome to an exit code: 0 success, 1 runtime error, 2 usage error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
