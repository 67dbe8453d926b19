use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use worldplan_cli::{cmd_bench, cmd_plan, cmd_validate, BenchArgs, Failure, PlanArgs};

/// Plan under uncertainty about the initial world.
#[derive(Parser)]
#[command(name = "worldplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a domain file and report every problem found
    Validate { domain: PathBuf },
    /// Plan for every world of a domain
    Plan(PlanArgs),
    /// Compare plan counts and CPU time of the planner configurations
    Bench(BenchArgs),
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut stdout = std::io::stdout().lock();
    let mut emit = |text: &str| {
        stdout.write_all(text.as_bytes()).map_err(|source| Failure::Io { path: "<stdout>".into(), source })
    };
    match cli.command {
        Command::Validate { domain } => emit(&cmd_validate(&domain)?)?,
        Command::Plan(args) => {
            let report = cmd_plan(&args)?;
            if args.out.is_none() {
                emit(&report.text)?;
            }
            if report.failures > 0 {
                eprintln!("worldplan: no plan for {} world(s)", report.failures);
                return Ok(2);
            }
        }
        Command::Bench(args) => {
            let csv = cmd_bench(&args)?;
            if args.out.is_none() {
                emit(&csv)?;
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("worldplan: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
