mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

const ENV_HELP: &str = "\
Environment (live and record modes only):
  THROWGUARD_LLM_BASE_URL   chat-completion endpoint base URL, e.g. https://api.openai.com/v1
  THROWGUARD_LLM_API_KEY    bearer credential; never read from files or written to cassettes
  THROWGUARD_LLM_MODEL      default for --model

Exit codes: 0 success, 1 negative outcome (bad code, failed task), 2 usage or environment error.";

#[derive(Parser, Debug)]
#[command(name = "throwguard", version, about = "Exception-aware Java code generation and checking", after_help = ENV_HELP)]
struct Cli {
    /// Print progress and diagnostics to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build or query the API exception knowledge base.
    #[command(subcommand)]
    Kb(KbCommand),
    /// Analyze a Java file; exits 0 only for good practice.
    Check {
        /// Java source file.
        code: PathBuf,
        /// Knowledge base JSON written by `kb build`.
        #[arg(long)]
        kb: PathBuf,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the generate, check, rewrite chain on one task or a corpus.
    Chain(ChainArgs),
    /// Summarize result records written by `chain`.
    Report {
        results_dir: PathBuf,
        /// Emit statistics as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Quality matrix: one generation plus one exception prompt per task and mode.
    Eval(EvalArgs),
}

#[derive(Subcommand, Debug)]
enum KbCommand {
    /// Parse every .html/.htm/.txt page in a directory into a knowledge base file.
    Build {
        pages_dir: PathBuf,
        #[arg(long, default_value = "kb.json")]
        out: PathBuf,
    },
    /// Show the specifications recorded for a signature or a name fragment.
    Lookup {
        query: String,
        /// Knowledge base JSON written by `kb build`.
        #[arg(long)]
        kb: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClientArg {
    /// Cassette only; a missing entry is an error.
    Replay,
    /// Call the endpoint and append every exchange to the cassette.
    Record,
    /// Call the endpoint, no cassette.
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Direct,
    General,
    Coarse,
    Fine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckerArg {
    /// Deterministic source analysis.
    Static,
    /// Ask the model to list APIs and answer Y/N per exception.
    Llm,
}

#[derive(Args, Debug, Clone)]
pub struct ClientOpts {
    /// Knowledge base JSON written by `kb build`.
    #[arg(long)]
    pub kb: PathBuf,
    /// Cassette file (line-delimited JSON).
    #[arg(long)]
    pub cassette: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "replay")]
    pub client: ClientArg,
    /// In replay mode, send cassette misses to the endpoint instead of failing.
    #[arg(long)]
    pub fall_through: bool,
    #[arg(long, env = "THROWGUARD_LLM_MODEL", default_value = "gpt-3.5-turbo")]
    pub model: String,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    /// Parallel tasks.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["task", "corpus"])))]
pub struct ChainArgs {
    /// Task description, e.g. "How to swap two elements in a vector?".
    #[arg(long)]
    pub task: Option<String>,
    /// Id used for --task.
    #[arg(long, default_value = "task")]
    pub id: String,
    /// JSONL corpus of {"id", "text"} records.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub client: ClientOpts,
    #[arg(long, value_enum, default_value = "fine")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "static")]
    pub checker: CheckerArg,
    #[arg(long, default_value_t = 10)]
    pub max_loops: usize,
    /// Stop early when the code returns to an earlier state.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub oscillation: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// JSONL corpus of {"id", "text"} records.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub client: ClientOpts,
    /// Modes to compare; defaults to all four.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub modes: Vec<ModeArg>,
    /// Evaluate a random subset of this many tasks.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Seed for --sample.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Kb(KbCommand::Build { pages_dir, out }) => commands::kb_build(&pages_dir, &out, cli.verbose),
        Command::Kb(KbCommand::Lookup { query, kb }) => commands::kb_lookup(&query, &kb),
        Command::Check { code, kb, json } => commands::check(&code, &kb, json),
        Command::Chain(args) => commands::chain(&args, cli.verbose),
        Command::Report { results_dir, json } => commands::report(&results_dir, json),
        Command::Eval(args) => commands::eval(&args, cli.verbose),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
