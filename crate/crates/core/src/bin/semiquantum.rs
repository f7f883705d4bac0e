use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semiquantum::harness::{self, ExperimentConfig, HarnessError, EXIT_USAGE};
use semiquantum::{verify, ExecutionMode};

#[derive(Parser)]
#[command(name = "semiquantum", version, about = "Semi-quantum protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Semi-quantum conferencing protocol.
    Conference {
        #[command(subcommand)]
        action: Action,
    },
    /// Two-layer task-dependent protocol.
    Task {
        #[command(subcommand)]
        action: Action,
    },
    /// Run the embedded property suite.
    Verify,
    /// List built-in presets.
    Presets,
}

#[derive(Subcommand)]
enum Action {
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    per_round_log: bool,
    /// Run rounds on the current thread only.
    #[arg(long)]
    sequential: bool,
}

fn load(protocol: &str, args: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let cfg = match (&args.config, &args.preset) {
        (Some(path), _) => harness::parse_config(&std::fs::read_to_string(path)?)?,
        (None, Some(name)) => harness::preset(name)?,
        (None, None) => harness::preset(&format!("{protocol}-honest"))?,
    };
    if cfg.protocol.name() != protocol {
        return Err(semiquantum::config::ConfigError::new(
            "<document>",
            format!("configuration is for the {} protocol", cfg.protocol.name()),
        )
        .into());
    }
    Ok(cfg.with_overrides(args.seed, args.rounds)?)
}

fn run(protocol: &str, args: RunArgs) -> Result<i32, HarnessError> {
    let cfg = load(protocol, &args)?;
    let mode = if args.sequential {
        ExecutionMode::Sequential
    } else {
        ExecutionMode::Parallel
    };
    let outcome = harness::run_experiment(&cfg, mode)?;
    print!("{}", outcome.report.summary_text());
    let dir = args.out.or(cfg.output.dir);
    if let Some(dir) = dir {
        harness::write_outputs(&outcome, &dir, args.per_round_log || cfg.output.per_round_log)?;
        println!("reports written to {}", dir.display());
    }
    Ok(outcome.report.verdict.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Conference { action: Action::Run(args) } => run("conference", args),
        Command::Task { action: Action::Run(args) } => run("task", args),
        Command::Verify => {
            let verdicts = verify::run_self_test();
            for v in &verdicts {
                println!("{v}");
            }
            let failed = verdicts.iter().filter(|v| !v.passed).count();
            println!("{} properties, {failed} failed", verdicts.len());
            Ok(if failed == 0 { 0 } else { EXIT_USAGE })
        }
        Command::Presets => {
            for (name, _) in harness::PRESETS {
                println!("{name}");
            }
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
