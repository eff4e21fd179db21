//! Command-line surface.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "pathwise", version, about = "Path-centric reward shaping toolkit for agentic RAG")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Flat key-value config file (defaults used when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. --set lambda_p=0.4 (repeatable;
    /// precedence: flags > file > defaults).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvaluatorKind {
    Oracle,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    /// Toy policy that follows the chain and answers when done.
    NearOptimal,
    /// Toy policy with uniform template probabilities.
    Uniform,
    /// Remote chat-completion endpoint (requires --endpoint).
    Remote,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a trajectory file against a dataset and reference cache.
    Score {
        #[command(flatten)]
        config: ConfigArgs,
        /// Trajectory JSONL to score.
        #[arg(long)]
        input: PathBuf,
        /// Dataset JSONL with {id, question, golden_answers}.
        #[arg(long)]
        dataset: PathBuf,
        /// Reference cache JSONL.
        #[arg(long = "ref-cache")]
        ref_cache: PathBuf,
        /// Output rewards JSONL.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "oracle")]
        evaluator: EvaluatorKind,
        /// Judge endpoint URL (remote evaluator).
        #[arg(long)]
        endpoint: Option<String>,
        /// Verdict cache JSONL for the remote evaluator.
        #[arg(long = "verdict-cache")]
        verdict_cache: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Build (or resume) a reference cache for a dataset.
    GenRef {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        dataset: PathBuf,
        /// Output reference cache JSONL (appended; existing ids skipped).
        #[arg(long)]
        output: PathBuf,
        /// Candidate trajectories per sample.
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Use sandbox true paths instead of a generator (requires --world
        /// and a dataset dumped from that world).
        #[arg(long)]
        oracle: bool,
        /// Sandbox world parameters: seed=..,entities=..,hops=..,samples=..
        #[arg(long)]
        world: Option<String>,
        /// Toy generator policy to roll candidates with (world mode).
        #[arg(long, value_enum, default_value = "near-optimal")]
        policy: PolicyKind,
        /// Generator endpoint URL (remote mode).
        #[arg(long)]
        endpoint: Option<String>,
        /// Corpus JSONL for the lexical retriever (remote mode).
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Run the search agent over a dataset and write episode traces.
    RunAgent {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        dataset: PathBuf,
        /// Output trajectory JSONL; metrics go to <output>.metrics.jsonl.
        #[arg(long)]
        output: PathBuf,
        /// Corpus JSONL for the lexical retriever.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Sandbox world parameters (alternative to --corpus; also enables
        /// toy policies).
        #[arg(long)]
        world: Option<String>,
        #[arg(long, value_enum, default_value = "near-optimal")]
        policy: PolicyKind,
        /// Policy endpoint URL (remote policy).
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Train the toy policy in the sandbox; with several variants and a
    /// threshold, tabulate steps-to-threshold instead.
    TrainToy {
        #[command(flatten)]
        config: ConfigArgs,
        /// Sandbox world parameters: seed=..,entities=..,hops=..,samples=..
        #[arg(long)]
        world: String,
        /// Reward variant(s), comma-separated: path_centric, binary_outcome.
        #[arg(long, default_value = "path_centric")]
        variant: String,
        #[arg(long, default_value_t = 100)]
        updates: usize,
        #[arg(long = "group-size", default_value_t = 8)]
        group_size: usize,
        /// Questions sampled per update (all when omitted).
        #[arg(long = "samples-per-update")]
        samples_per_update: Option<usize>,
        #[arg(long = "step-size", default_value_t = 0.5)]
        step_size: f64,
        #[arg(long = "format-noise", default_value_t = 0.0)]
        format_noise: f64,
        /// Accuracy threshold for steps-to-threshold tabulation.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seed list for multi-seed comparison (overrides --seed).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Output CSV (curve, or comparison table in multi-variant mode).
        #[arg(long)]
        output: PathBuf,
        /// Also dump the world as dataset/corpus/refcache JSONL files.
        #[arg(long = "dump-world")]
        dump_world: Option<PathBuf>,
    },

    /// Sweep one reward coefficient over a grid in the sandbox.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        world: String,
        /// Coefficient to sweep: lambda_p or lambda_a.
        #[arg(long)]
        param: String,
        /// Comma-separated grid values, e.g. 0.2,0.3,0.4.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 40)]
        updates: usize,
        #[arg(long = "group-size", default_value_t = 8)]
        group_size: usize,
        #[arg(long = "samples-per-update")]
        samples_per_update: Option<usize>,
        /// Curve records averaged at the end of each run.
        #[arg(long, default_value_t = 10)]
        window: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        output: PathBuf,
    },

    /// Measure per-dimension agreement between two verdict files.
    Agree {
        /// First verdict JSONL.
        file_a: PathBuf,
        /// Second verdict JSONL, aligned by line.
        file_b: PathBuf,
        /// Output report JSON (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}
