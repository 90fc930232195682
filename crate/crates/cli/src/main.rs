use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use licokit_core::license::GradeMode;

mod commands;
mod config;

#[derive(Parser)]
#[command(name = "licokit", version, about = "License-compliance benchmark for code LLMs")]
struct Cli {
    /// TOML configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract function snippets from a corpus into a JSON-Lines file.
    Extract(ExtractArgs),
    /// Build the benchmark from a licensed corpus.
    BuildBench(BuildBenchArgs),
    /// Sample Accessed and Unseen groups and compare their features.
    Study(StudyArgs),
    /// Query a model on every benchmark item, journaling the records.
    Run(RunArgs),
    /// Aggregate one or more journals into report files.
    Score(ScoreArgs),
}

#[derive(Args)]
pub struct ExtractArgs {
    /// Corpus directory or JSON-Lines file.
    pub corpus: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct BuildBenchArgs {
    pub corpus: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub min_reuse: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct StudyArgs {
    /// Corpus assumed visible to the models.
    #[arg(long)]
    pub accessed: PathBuf,
    /// Corpus under restrictive terms, candidates for the Unseen group.
    #[arg(long)]
    pub restricted: PathBuf,
    /// Output directory for groups and the feature table.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub n_per_group: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jaccard_threshold: Option<f64>,
}

#[derive(Args)]
pub struct RunArgs {
    /// Benchmark file written by build-bench.
    pub benchmark: PathBuf,
    /// Journal to write (or continue with --resume).
    #[arg(short, long, required_unless_present = "dry_run")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    /// Chat-completions endpoint URL; the key comes from LICOKIT_API_KEY.
    #[arg(long, conflicts_with = "replay")]
    pub endpoint: Option<String>,
    /// Replay file mapping message-list hashes to replies.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Reply cache for the live endpoint, keyed by model and messages.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Print the prompts and exit without contacting any model.
    #[arg(long)]
    pub dry_run: bool,
    #[arg(long)]
    pub resume: bool,
    /// Stop after this many new items.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Drop the in-context exemplar.
    #[arg(long)]
    pub no_exemplar: bool,
    /// Ask the license question after every item, not only striking ones.
    #[arg(long)]
    pub inquire_all: bool,
    #[arg(long)]
    pub grading: Option<GradeMode>,
    #[arg(long)]
    pub template: Option<String>,
    #[arg(long)]
    pub templates_file: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Journals to report, one row each.
    #[arg(required = true)]
    pub journals: Vec<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Accept journals from different protocols or incomplete runs.
    #[arg(long)]
    pub force: bool,
    /// Report under this grading mode instead of the one each run used.
    #[arg(long)]
    pub grading: Option<GradeMode>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = config::FileConfig::load(cli.config.as_deref()).and_then(|file| match cli.command {
        Command::Extract(a) => commands::extract(&a),
        Command::BuildBench(a) => commands::build_bench(&a, &file),
        Command::Study(a) => commands::study(&a, &file),
        Command::Run(a) => commands::run(&a, &file),
        Command::Score(a) => commands::score(&a, &file),
    });
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let err = serde_json::json!({
                "error": {
                    "kind": commands::error_kind(&e),
                    "message": format!("{e:#}"),
                }
            });
            let _ = writeln!(std::io::stderr(), "{err}");
            ExitCode::FAILURE
        }
    }
}
