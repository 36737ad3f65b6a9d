//! `tauberlab`: zeta values, Laplace transforms, operator truncations and
//! Tauberian experiments from the command line.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tauberlab::{ComplexPoint, Error, Route};

use commands::{Experiment, ExperimentArgs, OperatorArgs, SourceArgs};
use config::{load_config, OutputFormat, Overrides, RunConfig};

/// Exit status for command-line usage errors.
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "tauberlab", version, about, long_about = None)]
struct Cli {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory holding cached prime tables.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Sieve limit for prime-backed sources.
    #[arg(long, global = true, allow_hyphen_values = true)]
    prime_limit: Option<i64>,
    /// Output format for results written to standard output.
    #[arg(long, global = true, value_parser = ["json", "csv"])]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count primes up to a bound.
    Primes {
        #[arg(long)]
        count: u64,
    },
    /// Zeta-type special functions.
    #[command(subcommand)]
    Special(SpecialCommand),
    /// Laplace transform `G(s)` of a counting function.
    #[command(subcommand)]
    Transform(TransformCommand),
    /// Truncations of the operator `W` in the exponential basis.
    #[command(subcommand)]
    Operator(OperatorCommand),
    /// Forward, converse, PNT and battery experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args)]
struct Point {
    #[arg(long, allow_hyphen_values = true)]
    sigma: f64,
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
}

#[derive(Subcommand)]
enum SpecialCommand {
    /// Evaluate one function at `s = σ + it`.
    Eval {
        #[arg(long = "fn", value_parser = ["zeta", "zetad", "pzeta", "pzetad", "psi", "psip"])]
        function: String,
        #[command(flatten)]
        point: Point,
    },
}

#[derive(Args)]
struct Source {
    /// integers, primes, wprimes, x, 2x+sqrt, x+sqrt, oscillating, slowlog,
    /// step or file.
    #[arg(long, default_value = "integers")]
    source: String,
    /// Step-function CSV (`x, a` per line) for `--source file`.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Amplitude of `x(1 + a sin(ln x))` for `--source oscillating`.
    #[arg(long, default_value_t = 0.5)]
    amplitude: f64,
}

impl Source {
    fn args(&self) -> SourceArgs {
        SourceArgs { name: self.source.clone(), file: self.file.clone(), amplitude: self.amplitude }
    }
}

#[derive(Subcommand)]
enum TransformCommand {
    /// Evaluate `G(s)`.
    Eval {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        point: Point,
        /// Also evaluate by direct quadrature and report the difference.
        #[arg(long, value_parser = ["quadrature"])]
        oracle: Option<String>,
        /// Quadrature cutoff `U` for the oracle.
        #[arg(long)]
        truncation: Option<f64>,
    },
}

#[derive(Args)]
struct OperatorFlags {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long)]
    order: Option<usize>,
    /// kernel or frequency.
    #[arg(long, default_value = "frequency")]
    route: Route,
    /// Subtract `A·Id`; `diag` defaults to the declared limit of the source.
    #[arg(long, allow_hyphen_values = true)]
    constant: Option<f64>,
    /// Number of eigenvalues printed by `spectrum`.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Subcommand)]
enum OperatorCommand {
    /// Print the matrix `⟨W e_n, e_m⟩`, rows and columns `-N..N`.
    Assemble(OperatorFlags),
    /// Print `⟨Ψ e_n, e_n⟩` for `n = 0..N`.
    Diag(OperatorFlags),
    /// Print the eigenvalues of largest modulus.
    Spectrum(OperatorFlags),
}

#[derive(Args)]
struct ExperimentFlags {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    umax: Option<f64>,
    /// Declared limit `A` for the forward experiment.
    #[arg(long)]
    constant: Option<f64>,
    /// Write the JSON report here, with CSV companions next to it.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    Forward(ExperimentFlags),
    Converse(ExperimentFlags),
    Pnt(ExperimentFlags),
    Battery(ExperimentFlags),
}

type Action = fn(&RunConfig, &OperatorArgs) -> Result<String, Error>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Contract(_) | Error::Parse(_) => 1,
        Error::TableExhausted { .. }
        | Error::Resource(_)
        | Error::Precision { .. }
        | Error::Numeric(_)
        | Error::Io(_) => 2,
    }
}

fn run(cli: Cli) -> Result<String, Error> {
    let mut overrides = Overrides {
        cache_dir: cli.cache_dir,
        prime_limit: cli.prime_limit,
        jobs: cli.jobs,
        format: cli.format.as_deref().map(str::parse::<OutputFormat>).transpose()?,
        ..Overrides::default()
    };
    match &cli.command {
        Command::Operator(OperatorCommand::Assemble(f) | OperatorCommand::Diag(f) | OperatorCommand::Spectrum(f)) => {
            overrides.length = f.length;
            overrides.order = f.order;
        }
        Command::Experiment(
            ExperimentCommand::Forward(f)
            | ExperimentCommand::Converse(f)
            | ExperimentCommand::Pnt(f)
            | ExperimentCommand::Battery(f),
        ) => {
            overrides.length = f.length;
            overrides.order = f.order;
            overrides.u_max = f.umax;
        }
        _ => {}
    }
    let mut config: RunConfig = load_config(cli.config.as_deref())?;
    config.apply(&overrides)?;
    if let Some(jobs) = config.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Resource(format!("cannot start {jobs} workers: {e}")))?;
    }

    match cli.command {
        Command::Primes { count } => commands::primes(&config, count),
        Command::Special(SpecialCommand::Eval { function, point }) => {
            commands::special_eval(&config, &function, ComplexPoint::new(point.sigma, point.t))
        }
        Command::Transform(TransformCommand::Eval { source, point, oracle, truncation }) => commands::transform_eval(
            &config,
            &source.args(),
            ComplexPoint::new(point.sigma, point.t),
            oracle.is_some(),
            truncation,
        ),
        Command::Operator(op) => {
            let (f, action): (_, Action) = match op {
                OperatorCommand::Assemble(f) => (f, commands::operator_assemble),
                OperatorCommand::Diag(f) => (f, commands::operator_diag),
                OperatorCommand::Spectrum(f) => (f, commands::operator_spectrum),
            };
            let args = OperatorArgs {
                source: f.source.args(),
                epsilon: f.eps,
                route: f.route,
                constant: f.constant,
                count: f.count,
            };
            action(&config, &args)
        }
        Command::Experiment(e) => {
            let (kind, f) = match e {
                ExperimentCommand::Forward(f) => (Experiment::Forward, f),
                ExperimentCommand::Converse(f) => (Experiment::Converse, f),
                ExperimentCommand::Pnt(f) => (Experiment::Pnt, f),
                ExperimentCommand::Battery(f) => (Experiment::Battery, f),
            };
            let args = ExperimentArgs { kind, source: f.source.args(), constant: f.constant, report: f.report };
            commands::experiment(&config, &args)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = serde_json::json!({ "code": e.code(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::from(exit_code(&e))
        }
    }
}
