mod manifest;
mod model;
mod service;
mod simulate;
mod solve;
mod tools;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::manifest::OutputArgs;

/// Call admission control for a mesh of SIP servers: one-shot plans,
/// calibration, simulation, oracle checks and a UDP service mode.
#[derive(Debug, Parser)]
#[command(name = "vlbcac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one admission plan for a load matrix.
    Solve(solve::SolveArgs),
    /// Run the slot-level simulator.
    Simulate(simulate::SimulateArgs),
    /// Fit CPU and memory cost coefficients from measurements.
    Calibrate(tools::CalibrateArgs),
    /// Compare the admission LP against exhaustive enumeration.
    Oracle(tools::OracleArgs),
    /// Replay a load trace through the workload predictor.
    Predict(tools::PredictArgs),
    /// Run the controller over UDP.
    Serve(service::ServeArgs),
    /// Run a trace-driven server agent over UDP.
    Agent(service::AgentArgs),
    /// Re-run a command from its manifest.
    Replay {
        /// Manifest written by an earlier run.
        manifest: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve::cmd(a),
        Command::Simulate(a) => simulate::cmd(a),
        Command::Calibrate(a) => tools::calibrate(a),
        Command::Oracle(a) => tools::oracle(a),
        Command::Predict(a) => tools::predict(a),
        Command::Serve(a) => service::serve(a),
        Command::Agent(a) => service::agent(a),
        Command::Replay { manifest, output } => manifest::replay(&manifest, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
