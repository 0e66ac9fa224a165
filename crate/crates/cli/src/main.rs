mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, configuration or input files.
    #[error("{0}")]
    Validation(String),
    #[error("{stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Stage { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "polyscale", version, about = "Score party manifestos on the left-right scale")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "polyscale-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Map per-language embeddings into the English space.
    Align(AlignArgs),
    /// Train the hierarchical model.
    Train(TrainArgs),
    /// Score a corpus with a trained model.
    Predict(PredictArgs),
    /// Ground a rule program against a database.
    Ground(ProgramArgs),
    /// MAP inference for a rule program and database.
    Infer(ProgramArgs),
    /// Two-stage run: stacked estimates, then relational calibration.
    Calibrate(CalibrateArgs),
    /// Full evaluation: repeated splits plus the calibration ablation.
    Evaluate(EvaluateArgs),
    /// Print the tables of an evaluation directory and check their hashes.
    Report(ReportArgs),
    /// Tune the loss weights on a development split.
    Tune(TrainArgs),
    /// Write a planted synthetic corpus and coalition graph.
    Synth,
}

#[derive(Debug, Args)]
struct AlignArgs {
    /// English embeddings (word2vec text format).
    #[arg(long)]
    english: PathBuf,
    /// `LANG=PATH` embeddings of another language; repeatable.
    #[arg(long = "table", required = true)]
    tables: Vec<String>,
    /// `LANG=PATH` bilingual lexicon against English; repeatable.
    #[arg(long = "lexicon", required = true)]
    lexicons: Vec<String>,
    #[arg(long)]
    mean_center: bool,
    #[arg(long)]
    unit_normalize: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Aligned multilingual embeddings from `align`.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Debug, Args)]
struct ProgramArgs {
    /// Rule program; the bundled calibration program when omitted.
    #[arg(long)]
    program: Option<PathBuf>,
    #[arg(long)]
    database: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Coalition counts: `party_a  party_b  count  REGIONAL|EU`.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    program: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: CalibrateArgs,
    /// Also write gnuplot scripts for the tables.
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory written by `evaluate`; defaults to --out.
    #[arg(long)]
    dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    polyscale::eval::configure_threads().map_err(|e| CliError::Validation(e.to_string()))?;
    let config = config::CliConfig::load(cli.config.as_deref())?.with_seed(cli.seed);
    let out = cli.out.as_path();
    match cli.command {
        Command::Align(a) => commands::align(&a.english, &a.tables, &a.lexicons, a.mean_center, a.unit_normalize, out),
        Command::Train(a) => commands::train(&config, &a.corpus, a.embeddings.as_deref(), out),
        Command::Predict(a) => commands::predict(&config, &a.model, &a.corpus, out),
        Command::Ground(a) => commands::ground(a.program.as_deref(), &a.database, out),
        Command::Infer(a) => commands::infer(&config, a.program.as_deref(), &a.database, out),
        Command::Calibrate(a) => {
            commands::calibrate(&config, &a.corpus, &a.graph, a.embeddings.as_deref(), a.program.as_deref(), out)
        }
        Command::Evaluate(a) => {
            let i = a.inputs;
            commands::evaluate(&config, &i.corpus, &i.graph, i.embeddings.as_deref(), i.program.as_deref(), a.gnuplot, out)
        }
        Command::Report(a) => commands::report(a.dir.as_deref().unwrap_or(out)),
        Command::Tune(a) => commands::tune(&config, &a.corpus, a.embeddings.as_deref(), out),
        Command::Synth => commands::synth(&config, out),
    }
}
