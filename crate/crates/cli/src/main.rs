use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use sinr_cli::format::to_json;
use sinr_cli::{CliError, CliResult, GenKind, GenOptions, InstanceFile, Overrides, ReportFile};
use sinr_core::InstanceParams;

#[derive(Parser)]
#[command(name = "sinr", version, about = "Capacity, scheduling and routing under the SINR model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct ParamArgs {
    /// Override the path-loss exponent.
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the SINR threshold.
    #[arg(long)]
    beta: Option<f64>,
    /// Override the ambient noise.
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file (JSON).
    instance: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Use this threshold instead of the default tau.
    #[arg(long)]
    tau_override: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Re-verify the result before writing it.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    check: bool,
    /// Write here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Record the solve time in the report (makes output run-dependent).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        /// Number of links (commodities for grid).
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Square side, line length, or grid width.
        #[arg(long)]
        side: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Select links for k channels.
    Capacity {
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(short, long, default_value_t = 1)]
        k: usize,
        /// Echoed in the report; the algorithm is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Schedule every link in time slots.
    Schedule {
        #[command(flatten)]
        solve: SolveArgs,
        /// Echoed in the report; the algorithm is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Schedule the fixed paths of the instance.
    Multihop {
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Choose paths for the commodities, then schedule them.
    Route {
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a report against its instance.
    Verify { instance: PathBuf, report: PathBuf },
}

fn emit(output: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => sinr_cli::write_atomic(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(args: &SolveArgs, run: impl FnOnce(&InstanceFile, &Overrides) -> CliResult<ReportFile>) -> CliResult<()> {
    let doc: InstanceFile = sinr_cli::read_json(&args.instance)?;
    let overrides = Overrides {
        alpha: args.params.alpha,
        beta: args.params.beta,
        noise: args.params.noise,
        tau: args.tau_override,
    };
    let started = Instant::now();
    let mut report = run(&doc, &overrides)?;
    if args.timings {
        report.stats.runtime_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }
    let problems = if args.check { sinr_cli::verify(&doc, &report)? } else { Vec::new() };
    let text = match args.format {
        Format::Json => to_json(&report),
        Format::Text => sinr_cli::render_text(&report),
    };
    emit(args.output.as_ref(), &text)?;
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(problems))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen { kind, n, seed, alpha, beta, noise, side, output } => {
            let params = InstanceParams { alpha, beta, noise };
            let doc = sinr_cli::generate(&GenOptions { kind, n, seed, params, side })?;
            emit(output.as_ref(), &to_json(&doc))
        }
        Command::Capacity { solve: args, k, seed } => solve(&args, |d, o| {
            sinr_cli::capacity(d, k, o).map(|r| ReportFile { seed, ..r })
        }),
        Command::Schedule { solve: args, seed } => solve(&args, |d, o| {
            sinr_cli::schedule(d, o).map(|r| ReportFile { seed, ..r })
        }),
        Command::Multihop { solve: args, seed } => solve(&args, |d, o| sinr_cli::multihop(d, seed, o)),
        Command::Route { solve: args, seed } => solve(&args, |d, o| sinr_cli::route(d, seed, o)),
        Command::Verify { instance, report } => {
            let doc: InstanceFile = sinr_cli::read_json(&instance)?;
            let report: ReportFile = sinr_cli::read_json(&report)?;
            let problems = sinr_cli::verify(&doc, &report)?;
            if problems.is_empty() {
                println!("ok: {} groups verified", report.groups.len());
                Ok(())
            } else {
                Err(CliError::Verification(problems))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
