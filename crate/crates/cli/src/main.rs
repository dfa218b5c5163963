//! `modelcomp`: suggestions, evaluation, fixtures and the HTTP server.

mod commands;
mod config;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use modelcomp_core::eval::PartialScope;
use modelcomp_core::provider::ProviderKind;
use modelcomp_core::rank::SelectionPolicy;

#[derive(Parser)]
#[command(name = "modelcomp", version, about = "Model completion from few-shot prompts")]
pub struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// TOML file with defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ask the model for suggestions on a partial model.
    #[command(subcommand)]
    Suggest(SuggestCmd),
    /// Run an evaluation protocol over a dataset.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Record or hand-write provider exchanges.
    #[command(subcommand)]
    Fixtures(FixturesCmd),
}

#[derive(Subcommand, Clone)]
pub enum SuggestCmd {
    /// New classes and associations.
    Classes(SuggestArgs),
    /// Attributes for one class.
    Attributes {
        #[command(flatten)]
        args: SuggestArgs,
        #[arg(long)]
        class: String,
    },
    /// A name for the association between two classes.
    AssocName {
        #[command(flatten)]
        args: SuggestArgs,
        #[arg(long, num_args = 2, value_names = ["SOURCE", "TARGET"], required = true)]
        class: Vec<String>,
        #[arg(long)]
        attempts: Option<usize>,
    },
    /// Completion of an open activity model.
    Activity(SuggestArgs),
}

impl SuggestCmd {
    fn args(&self) -> &SuggestArgs {
        match self {
            SuggestCmd::Classes(a) | SuggestCmd::Activity(a) => a,
            SuggestCmd::Attributes { args, .. } | SuggestCmd::AssocName { args, .. } => args,
        }
    }
}

#[derive(Args, Clone)]
pub struct SuggestArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Write the model with the suggestions applied.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
}

#[derive(Args, Clone, Default)]
pub struct GenArgs {
    /// live, replay or mock.
    #[arg(long)]
    provider: Option<ProviderKind>,
    /// Fixture directory for replay and recording.
    #[arg(long, value_name = "DIR")]
    fixtures: Option<PathBuf>,
    #[arg(long)]
    n_prompts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// all, min:K or top:N.
    #[arg(long)]
    policy: Option<SelectionPolicy>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
    /// Concurrent provider calls.
    #[arg(long)]
    in_flight: Option<usize>,
}

#[derive(Subcommand)]
pub enum EvalCmd {
    /// Two-round class recommendation precision and recall.
    Classes(EvalArgs),
    /// Recall of removed attributes.
    Attributes(EvalArgs),
    /// Association naming accuracy.
    AssocNames(EvalArgs),
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "DIR")]
    dataset: PathBuf,
    /// exact, stemmed, synonyms:FILE or interactive:FILE.
    #[arg(long)]
    matcher: Option<String>,
    /// Write the JSON report here.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    removal: Option<f64>,
    #[arg(long)]
    attempts: Option<usize>,
    #[arg(long, value_enum)]
    scope: Option<ScopeArg>,
    /// Evaluate a seeded sample of this many items.
    #[arg(long)]
    sample: Option<usize>,
    #[command(flatten)]
    gen: GenArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Classes,
    ClassesAndAssociations,
}

impl From<ScopeArg> for PartialScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::Classes => PartialScope::Classes,
            ScopeArg::ClassesAndAssociations => PartialScope::ClassesAndAssociations,
        }
    }
}

#[derive(Args)]
pub struct ServeArgs {
    #[arg(long)]
    addr: Option<SocketAddr>,
    #[command(flatten)]
    gen: GenArgs,
}

#[derive(Subcommand)]
pub enum FixturesCmd {
    /// Run a suggest command and record every exchange.
    #[command(subcommand)]
    Record(SuggestCmd),
    /// Store a hand-written exchange.
    Put(PutArgs),
}

#[derive(Args)]
pub struct PutArgs {
    #[arg(long, value_name = "DIR")]
    fixtures: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    prompt_file: PathBuf,
    #[arg(long, value_name = "FILE")]
    text_file: PathBuf,
    /// class_pairs, attributes, association_name or activity; defaults to
    /// the prompt's instruction line.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
}

pub enum Failure {
    Usage(String),
    Domain(String),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
    }
}
