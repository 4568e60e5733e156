use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use m3p2i::orchestrator::{
    benchmark, read_trace, run_trial, summarize, write_trace, Mode, Scenario, TraceRecord, TrialOptions,
};
use m3p2i::Error;

mod plot;

#[derive(Parser)]
#[command(name = "m3p2i", version, about = "Multi-modal MPPI with a symbolic planner in the loop")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials of a scenario and print the summary as JSON.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Defaults to the scenario's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Base seed; trial i uses seed + i. Defaults to the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// push, pull or multimodal. Defaults to the scenario's mode.
        #[arg(long)]
        mode: Option<String>,
        /// NDJSON trace of the first trial.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Summary JSON file.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Sleep so ticks follow wall-clock time.
        #[arg(long)]
        realtime: bool,
        /// Time controller iterations instead of running trials.
        #[arg(long)]
        benchmark: bool,
        #[arg(long, default_value_t = 200)]
        benchmark_iterations: usize,
    },
    /// Render trajectory and weight-mass figures from a trace.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario file and its domain.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_config_error))
        || e.chain().any(|c| c.downcast_ref::<ConfigError>().is_some())
}

#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn load(path: &Path) -> anyhow::Result<Scenario> {
    Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn run(
    scenario: &Path,
    trials: Option<usize>,
    seed: Option<u64>,
    mode: Option<String>,
    trace: Option<PathBuf>,
    summary: Option<PathBuf>,
    realtime: bool,
) -> anyhow::Result<bool> {
    let scenario = load(scenario)?;
    let mode = match mode {
        Some(m) => m.parse::<Mode>().map_err(|e| ConfigError(e.to_string()))?,
        None => scenario.config.mode,
    };
    let trials = trials.unwrap_or(scenario.config.trials);
    if trials == 0 {
        return Err(ConfigError("--trials must be at least 1".into()).into());
    }
    let base = seed.unwrap_or(scenario.config.seed);

    let mut runs = Vec::with_capacity(trials);
    for i in 0..trials as u64 {
        let options = TrialOptions {
            trace: i == 0 && trace.is_some(),
            realtime,
        };
        let outcome = run_trial(&scenario, base + i, mode, &options)?;
        if let (true, Some(path)) = (options.trace, &trace) {
            write_trace(path, &outcome.trace)?;
        }
        eprintln!(
            "trial {} seed {}: {} pos_err={:.4} ori_err={:.4}{}",
            i,
            base + i,
            if outcome.summary.success { "success" } else { "time-out" },
            outcome.summary.final_position_error,
            outcome.summary.final_orientation_error,
            outcome
                .summary
                .completion_time
                .map(|t| format!(" t={t:.2}s"))
                .unwrap_or_default()
        );
        runs.push(outcome.summary);
    }
    let batch = summarize(&scenario, mode, runs);
    let text = serde_json::to_string_pretty(&batch)?;
    if let Some(path) = summary {
        std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{text}");
    Ok(batch.successes == batch.trials)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            trials,
            seed,
            mode,
            trace,
            summary,
            realtime,
            benchmark: true,
            benchmark_iterations,
        } => {
            let _ = (trials, seed, mode, trace, summary, realtime);
            load(&scenario)
                .and_then(|s| Ok(benchmark(&s, benchmark_iterations)?))
                .map(|report| {
                    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                    true
                })
        }
        Command::Run {
            scenario,
            trials,
            seed,
            mode,
            trace,
            summary,
            realtime,
            ..
        } => run(&scenario, trials, seed, mode, trace, summary, realtime),
        Command::Plot { trace, out } => read_trace(&trace)
            .map_err(anyhow::Error::from)
            .and_then(|records: Vec<TraceRecord>| plot::render(&records, &out))
            .map(|_| true),
        Command::Validate { scenario } => load(&scenario).map(|s| {
            println!(
                "{}: ok ({} actions, {} desired conditions)",
                s.config.name,
                s.domain.actions.len(),
                s.desired.len()
            );
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
