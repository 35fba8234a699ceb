mod commands;
mod error;
mod manifest;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use staple_forge_core::corpus::NormalizationPolicy;
use staple_forge_core::translator::Direction;

use crate::error::CliError;

pub const THREADS_ENV: &str = "STAPLE_FORGE_THREADS";

#[derive(Parser)]
#[command(name = "staple-forge", version, about = "Weighted macro-F1 scoring and translation-set generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a prediction file against a gold file.
    Score(ScoreArgs),
    /// Train a checkpoint series on a `source<TAB>target` corpus.
    Train(TrainArgs),
    /// Generate prediction sets for a prompt list.
    Generate(GenerateArgs),
    /// Run and score a grid of method parameters.
    Sweep(SweepArgs),
    /// Byte-pair encoding: learn, apply, decode.
    #[command(subcommand)]
    Bpe(BpeCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Exact,
    Default,
}

impl From<PolicyArg> for NormalizationPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Exact => NormalizationPolicy::EXACT,
            PolicyArg::Default => NormalizationPolicy::DEFAULT,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Fwd,
    Bwd,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Fwd => Direction::Forward,
            DirectionArg::Bwd => Direction::Backward,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Nbest,
    Paraphrase,
    Ensemble,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Nbest => "nbest",
            MethodArg::Paraphrase => "paraphrase",
            MethodArg::Ensemble => "ensemble",
        }
    }
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value = "default")]
    policy: PolicyArg,
    /// Write the per-prompt report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    parallel: PathBuf,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Series directory to create.
    #[arg(long)]
    out: PathBuf,
    /// `bwd` swaps the columns and trains target→source.
    #[arg(long, value_enum, default_value = "fwd")]
    direction: DirectionArg,
    #[arg(long, default_value_t = 0.1)]
    lm_alpha: f64,
}

/// Decoder and method knobs shared by `generate` and `sweep`.
#[derive(Args)]
struct DecodeArgs {
    #[arg(long, default_value_t = 100)]
    beam: usize,
    #[arg(long, default_value_t = 8)]
    top_k: usize,
    #[arg(long, default_value_t = 2.0)]
    max_len_ratio: f64,
    #[arg(long, value_enum, default_value = "default")]
    policy: PolicyArg,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Forward series directory or single checkpoint directory.
    #[arg(long)]
    model: PathBuf,
    /// Backward (target→source) model; required by `paraphrase`.
    #[arg(long)]
    backward: Option<PathBuf>,
    #[arg(long)]
    prompts: PathBuf,
    /// Output directory for predictions.txt, warnings.tsv and manifest.tsv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    n_prime: usize,
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[command(flatten)]
    decode: DecodeArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    backward: Option<PathBuf>,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    prompts: PathBuf,
    /// Also write sweep.tsv and manifest.tsv into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated; an empty string disables the nbest rows.
    #[arg(long, value_parser = parse_list, default_value = "5,10,15,20")]
    n_values: ValueList,
    #[arg(long, value_parser = parse_list, default_value = "1,3,5")]
    n_prime_values: ValueList,
    #[arg(long, value_parser = parse_list, default_value = "2,4,6,8")]
    m_values: ValueList,
    /// n for the paraphrase and ensemble rows.
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[command(flatten)]
    decode: DecodeArgs,
}

#[derive(Clone, Debug)]
struct ValueList(Vec<usize>);

fn parse_list(s: &str) -> Result<ValueList, String> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<usize>().map_err(|_| format!("not a non-negative integer: {v:?}")))
        .collect::<Result<Vec<_>, _>>()
        .map(ValueList)
}

#[derive(Subcommand)]
enum BpeCommand {
    /// Learn merges from whitespace-tokenized text (all inputs jointly).
    Learn {
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 500)]
        merges: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment token lines with a learned model.
    Apply {
        #[arg(long)]
        model: PathBuf,
        /// Defaults to standard input.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Undo segmentation.
    Decode {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::input(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::internal(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Score(a) => commands::score(&a.gold, &a.pred, a.policy.into(), a.out.as_deref()),
        Command::Train(a) => commands::train(&a.parallel, a.iterations, &a.out, a.direction.into(), a.lm_alpha),
        Command::Generate(a) => {
            let params = commands::method_params(a.n, a.n_prime, a.m, &a.decode);
            commands::generate(&commands::GenerateRequest {
                method: a.method.name(),
                model: &a.model,
                backward: a.backward.as_deref(),
                prompts: &a.prompts,
                out: &a.out,
                params,
                policy: a.decode.policy.into(),
            })
        }
        Command::Sweep(a) => {
            let spec = sweep::SweepSpec {
                n_values: a.n_values.0,
                n_prime_values: a.n_prime_values.0,
                m_values: a.m_values.0,
                fixed_n: a.n,
            };
            let base = commands::method_params(a.n, 3, 6, &a.decode);
            commands::sweep(&commands::SweepRequest {
                model: &a.model,
                backward: a.backward.as_deref(),
                gold: &a.gold,
                prompts: &a.prompts,
                out: a.out.as_deref(),
                spec,
                base,
                policy: a.decode.policy.into(),
            })
        }
        Command::Bpe(BpeCommand::Learn { input, merges, out }) => commands::bpe_learn(&input, merges, &out),
        Command::Bpe(BpeCommand::Apply { model, input, out }) => {
            commands::bpe_apply(&model, input.as_deref(), out.as_deref())
        }
        Command::Bpe(BpeCommand::Decode { input, out }) => commands::bpe_decode(input.as_deref(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
