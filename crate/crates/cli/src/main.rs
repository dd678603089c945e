use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use factreward_core::config::{Overrides, PipelineConfig};
use factreward_core::pipeline::{self, PipelineError};

/// Turn judge feedback on model responses into token-level rewards and
/// factuality metrics.
#[derive(Debug, Parser)]
#[command(name = "factreward", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Annotate {id, prompt, response} lines with the judge.
    Annotate(Common),
    /// Convert an annotation artifact into reward events (and token rewards).
    Reward(Common),
    /// Score an annotation artifact; --output names a report directory.
    Eval(Common),
    /// Run annotate, reward and eval into one output directory.
    Pipeline(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Qwen,
    Llama,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file; command-line flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Reference documents as {id, title, text} lines.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Replay judge replies from a prompt-hash fixture instead of calling the endpoint.
    #[arg(long)]
    mock_judge: Option<PathBuf>,
    /// Per-record tokenizer offsets as {id, offsets: [[start, end], ...]} lines.
    #[arg(long)]
    token_offsets: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn resolve(self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        cfg.apply(Overrides {
            input: self.input,
            output: self.output,
            corpus: self.corpus,
            token_offsets: self.token_offsets,
            preset: self.preset.map(|p| match p {
                Preset::Qwen => "qwen".to_string(),
                Preset::Llama => "llama".to_string(),
            }),
            mock_judge: self.mock_judge,
            workers: self.workers,
        });
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Annotate(common) => {
            let summary = pipeline::run_annotate(&common.resolve()?)?;
            eprintln!("annotated {} records", summary.records);
        }
        Command::Reward(common) => {
            let stats = pipeline::run_reward(&common.resolve()?)?;
            eprintln!(
                "rewarded {} statements ({} unanchored)",
                stats.statements, stats.unresolved_statements
            );
        }
        Command::Eval(common) => {
            let report = pipeline::run_eval(&common.resolve()?)?;
            let m = &report.aggregate.metrics;
            eprintln!(
                "score {:.3} over {} of {} responses",
                m.score, m.responded, m.total
            );
        }
        Command::Pipeline(common) => {
            let summary = pipeline::run_pipeline(&common.resolve()?)?;
            eprintln!(
                "annotated {} records, score {:.3}",
                summary.annotate.records, summary.report.aggregate.metrics.score
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
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
