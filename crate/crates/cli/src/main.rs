use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use qvn_cli::{
    cmd_compose, cmd_qec_check, cmd_run, cmd_topo_eval, CliError, ComposeConfig, RunConfig,
};
use qvn_core::uqt::ByproductStrategy;

#[derive(Parser)]
#[command(
    name = "qvn",
    version,
    about = "Stored quantum programs: composition, injection, readout, codes and diagrams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Shot count (overrides the schedule header).
    #[arg(long, global = true)]
    shots: Option<usize>,
    /// Seed for all sampling; defaults to the schedule's seed, else 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for shot-level parallelism; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Pass/fail tolerance for compose fidelities and code conditions.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a schedule against a memory manifest.
    Run {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        memory: PathBuf,
        /// Include every shot's events in the report.
        #[arg(long)]
        records: bool,
    },
    /// Compose two program descriptions with each byproduct strategy.
    Compose {
        #[arg(long)]
        first: PathBuf,
        #[arg(long)]
        second: PathBuf,
        /// Strategy name; repeatable. Defaults to all three.
        #[arg(long = "strategy")]
        strategies: Vec<String>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
    /// Check the error-correction conditions of a code file.
    QecCheck {
        #[arg(long)]
        code: PathBuf,
    },
    /// Evaluate a topological diagram exactly.
    TopoEval {
        #[arg(long)]
        diagram: PathBuf,
    },
}

fn dispatch(cli: &Cli) -> Result<(&'static str, Value), CliError> {
    match &cli.command {
        Command::Run {
            schedule,
            memory,
            records,
        } => {
            let cfg = RunConfig {
                schedule: schedule.clone(),
                memory: memory.clone(),
                shots: cli.shots,
                seed: cli.seed,
                records: *records,
            };
            let canonical = match cli.threads {
                Some(0) => return Err(CliError::usage("--threads must be at least 1")),
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::usage(e.to_string()))?
                    .install(|| cmd_run(&cfg))?,
                None => cmd_run(&cfg)?,
            };
            Ok(("run", canonical))
        }
        Command::Compose {
            first,
            second,
            strategies,
            repeats,
        } => {
            let strategies = if strategies.is_empty() {
                vec![
                    ByproductStrategy::RepeatUntilSuccess,
                    ByproductStrategy::CorrectionTable,
                    ByproductStrategy::SymmetricPair,
                ]
            } else {
                strategies
                    .iter()
                    .map(|s| {
                        ByproductStrategy::parse(s)
                            .ok_or_else(|| CliError::usage(format!("unknown strategy {s:?}")))
                    })
                    .collect::<Result<_, _>>()?
            };
            let cfg = ComposeConfig {
                first: first.clone(),
                second: second.clone(),
                strategies,
                repeats: *repeats,
                seed: cli.seed.unwrap_or(0),
                tolerance: cli.tolerance.unwrap_or(1e-10),
            };
            Ok(("compose", cmd_compose(&cfg)?))
        }
        Command::QecCheck { code } => Ok((
            "qec-check",
            cmd_qec_check(code, cli.tolerance.unwrap_or(1e-9))?,
        )),
        Command::TopoEval { diagram } => Ok(("topo-eval", cmd_topo_eval(diagram)?)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let line = first
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("E_USAGE: {line}");
            return ExitCode::from(2);
        }
    };
    let started = Instant::now();
    let result = dispatch(&cli).and_then(|(name, canonical)| {
        let report = json!({
            "canonical": canonical,
            "meta": {
                "command": name,
                "version": env!("CARGO_PKG_VERSION"),
                "threads": cli.threads.unwrap_or_else(rayon::current_num_threads),
                "elapsed_ms": started.elapsed().as_secs_f64() * 1e3,
            },
        });
        let text = serde_json::to_string_pretty(&report).expect("JSON values serialize") + "\n";
        match &cli.out {
            Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit as u8)
        }
    }
}
