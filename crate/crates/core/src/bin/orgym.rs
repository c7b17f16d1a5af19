//! Command-line front end: run catalog or custom experiment plans, export
//! summaries, replay recorded telemetry, and train control agents.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use orgym_core::agent::{frozen_from_config, ppo, PpoConfig};
use orgym_core::harness::{
    build_prioritization_plan, build_stairs_plan, build_v_plan, export_summary, replay_dataset,
    run_experiment, run_experiment_net, ExperimentPlan, DEFAULT_E2_PORT,
};
use orgym_core::xapp::{aggregate_windows, window_features};

#[derive(Parser)]
#[command(name = "orgym", about = "Desk-scale RAN control-loop experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment plan and write a run directory.
    Run {
        /// Plan JSON file.
        plan: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Use the TCP transport instead of the in-process engine.
        #[arg(long)]
        net: bool,
        /// TCP port (with --net).
        #[arg(long, default_value_t = DEFAULT_E2_PORT)]
        port: u16,
        /// Output directory (default: runs/<plan-name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a catalog plan as JSON.
    Plan {
        #[arg(value_enum)]
        which: CatalogPlan,
    },
    /// Recompute and print the summary of an existing run directory.
    Summarize { run_dir: PathBuf },
    /// Replay recorded KPM CSVs into a sink.
    Replay {
        /// CSV files, in order.
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Sink: 'xapp' prints per-window feature vectors as an xApp would
        /// see them; 'train' prints the extracted training feature matrix.
        #[arg(long, value_enum)]
        into: ReplaySink,
        /// Speed multiplier; omit for as-fast-as-possible.
        #[arg(long)]
        speed: Option<f64>,
    },
    /// Train the control agent on a frozen two-slice scenario.
    Train {
        /// Plan JSON file providing the scenario.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Checkpoint output path.
        #[arg(long, default_value = "checkpoint.json")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CatalogPlan {
    Stairs,
    V,
    Prioritize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReplaySink {
    Xapp,
    Train,
}

/// Exit codes: 0 ok, 1 validation failure, 2 runtime failure.
fn main() -> ExitCode {
    // die quietly when the read end of a pipe closes (e.g. `orgym plan | head`)
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::new().filter("ORGYM_LOG")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Validation(String),
    Runtime(String),
}

fn load_plan(path: &PathBuf) -> Result<ExperimentPlan, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            plan,
            seed,
            net,
            port,
            out,
        } => {
            let plan = load_plan(&plan)?;
            orgym_core::harness::validate_plan(&plan)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from("runs").join(&plan.name));
            let result = if net {
                run_experiment_net(&plan, seed, &out_dir, port)
            } else {
                run_experiment(&plan, seed, &out_dir)
            };
            let output = result.map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("run complete: {}", output.out_dir.display());
            println!(
                "residuals per minute: {:?}",
                output.summary.proportionality_residual
            );
            Ok(())
        }
        Command::Plan { which } => {
            let plan = match which {
                CatalogPlan::Stairs => build_stairs_plan(),
                CatalogPlan::V => build_v_plan(),
                CatalogPlan::Prioritize => build_prioritization_plan(),
            };
            println!("{}", serde_json::to_string_pretty(&plan).unwrap());
            Ok(())
        }
        Command::Summarize { run_dir } => {
            let summary =
                export_summary(&run_dir).map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            Ok(())
        }
        Command::Replay { csv, into, speed } => {
            let speed = speed.unwrap_or(f64::INFINITY);
            let mut windows = Vec::new();
            let mut n_slices = 1usize;
            let mut printed = 0usize;
            let w = 4usize;
            replay_dataset(&csv, speed, &mut |ind| {
                let aggs = aggregate_windows(&ind.records);
                for a in &aggs {
                    n_slices = n_slices.max(a.slices.len());
                }
                windows.extend(aggs);
                if let Ok(f) = window_features(&windows, w, n_slices) {
                    let cells: Vec<String> = f.iter().map(|x| format!("{x:.6}")).collect();
                    match into {
                        ReplaySink::Xapp => {
                            println!("ts={} features=[{}]", ind.ts_ms, cells.join(","))
                        }
                        ReplaySink::Train => println!("{}", cells.join(",")),
                    }
                    printed += 1;
                }
            })
            .map_err(|e| CliError::Validation(e.to_string()))?;
            eprintln!("{printed} feature vectors");
            Ok(())
        }
        Command::Train {
            scenario,
            episodes,
            seed,
            out,
        } => {
            let plan = load_plan(&scenario)?;
            let frozen = frozen_from_config(plan.scenario, &plan.bs_id)
                .map_err(CliError::Validation)?;
            let cfg = PpoConfig::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (nets, rows) = ppo::train(&frozen, &cfg, episodes, &mut rng)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("{}", ppo::TRAINING_LOG_HEADER);
            for row in &rows {
                println!("{}", ppo::training_log_row(row));
            }
            ppo::Checkpoint::from_nets(&nets)
                .save(&out)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            eprintln!("checkpoint written to {}", out.display());
            Ok(())
        }
    }
}
