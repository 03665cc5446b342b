//! `faq-assist` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use faq_assist::retrieval::RankerKind;
use faq_assist::sampling::SamplingSetting;

use commands::CliError;

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(
    name = "faq-assist",
    version,
    about = "FAQ suggestions for support conversations"
)]
pub struct Cli {
    /// Seed for splitting, sampling and the random ranker.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Service config file (TOML), read by `serve`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse chat exports into the canonical JSONL corpus.
    Ingest(IngestArgs),
    /// Print corpus statistics as JSON.
    Stats(StatsArgs),
    /// Split conversations into train/dev/test.
    Split(SplitArgs),
    /// Write training pairs for an external encoder.
    ExportPairs(ExportPairsArgs),
    /// Score a ranker with MRR@10 on one split.
    Evaluate(EvaluateArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Chat export files; each file stem becomes a conversation id.
    #[arg(long = "export", required = true, num_args = 1..)]
    pub exports: Vec<PathBuf>,
    /// FAQ database, required with --annotations.
    #[arg(long)]
    pub faqs: Option<PathBuf>,
    /// CSV with conversation_id, utterance_index, faq_id.
    #[arg(long, requires = "faqs")]
    pub annotations: Option<PathBuf>,
    /// JSON object mapping sender names to aliases.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Validate gold annotations against this FAQ database.
    #[arg(long)]
    pub faqs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// train,dev,test ratios.
    #[arg(long, default_value = "0.7,0.1,0.2", value_parser = parse_ratios)]
    pub ratios: (f64, f64, f64),
    /// Write the split JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitSelection {
    /// Split JSON from `split`; computed from --seed at 0.7/0.1/0.2 if absent.
    #[arg(long)]
    pub splits: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportPairsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub faqs: PathBuf,
    #[arg(long, value_parser = parse_setting)]
    pub setting: SamplingSetting,
    #[command(flatten)]
    pub selection: SplitSelection,
    /// train or dev.
    #[arg(long, default_value = "train", value_parser = ["train", "dev"])]
    pub split: String,
    #[arg(long, default_value_t = 1)]
    pub negatives: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_parser = parse_ranker)]
    pub model: RankerKind,
    /// Training setting the model belongs to; only labels the report row.
    #[arg(long, default_value = "n/a", value_parser = parse_setting_label)]
    pub setting: SettingLabel,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub faqs: PathBuf,
    /// Sidecar file or hashing:<dim>; required for --model dense.
    #[arg(long)]
    pub embeddings: Option<String>,
    /// md or csv.
    #[arg(long, default_value = "md")]
    pub format: String,
    #[command(flatten)]
    pub selection: SplitSelection,
    /// Split to score: test, dev, train or all.
    #[arg(long, default_value = "test", value_parser = ["test", "dev", "train", "all"])]
    pub split: String,
    /// Utterances per query window.
    #[arg(long, default_value_t = faq_assist::retrieval::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flags override `--config` and `FAQ_ASSIST_*` variables.
#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub listen: Option<String>,
    #[arg(long)]
    pub ranker: Option<String>,
    #[arg(long)]
    pub faqs: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<String>,
    #[arg(long)]
    pub projects: Option<PathBuf>,
    #[arg(long)]
    pub event_log: Option<PathBuf>,
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err("expected three comma-separated ratios".into()),
    }
}

fn parse_setting(s: &str) -> Result<SamplingSetting, String> {
    s.parse()
        .map_err(|e: faq_assist::sampling::SamplingError| e.to_string())
}

/// A sampling setting or `n/a`.
#[derive(Debug, Clone, Copy)]
pub struct SettingLabel(pub Option<SamplingSetting>);

fn parse_setting_label(s: &str) -> Result<SettingLabel, String> {
    if s == "n/a" {
        Ok(SettingLabel(None))
    } else {
        parse_setting(s).map(|s| SettingLabel(Some(s)))
    }
}

fn parse_ranker(s: &str) -> Result<RankerKind, String> {
    s.parse()
        .map_err(|e: faq_assist::retrieval::RetrievalError| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 1,
                CliError::Data(_) => 2,
            })
        }
    }
}
