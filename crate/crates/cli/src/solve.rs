use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use vlbcac::admission::plan_admission;
use vlbcac::network::{
    load_scenario, Matrix, OfferedLoad, ResourceProfile, Topology, Weights, RATE_WINDOW_S,
};

use crate::manifest::{pretty, OutputArgs, Sink};
use crate::model::{per_server, ModelArgs};

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Built-in scenario name or a load matrix file (calls per second).
    #[arg(long, default_value = "scenario1")]
    pub scenario: String,
    /// Remaining CPU per server in capacity units: one value or a list.
    #[arg(long)]
    pub cpu: Option<String>,
    /// Remaining memory per server in capacity units: one value or a list.
    #[arg(long)]
    pub mem: Option<String>,
    /// Take every server's capacity from this catalog flavor.
    #[arg(long, conflicts_with_all = ["cpu", "mem"])]
    pub flavor: Option<String>,
    /// Seconds over which the per-call costs were measured.
    #[arg(long, default_value_t = RATE_WINDOW_S)]
    pub window: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Resolved inputs of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRun {
    pub topology: Topology,
    pub offered: OfferedLoad,
    /// Capacities with costs already expressed per unit of call rate.
    pub resources: ResourceProfile,
    pub weights: Weights,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ServerUsage {
    server: usize,
    cpu_cap: f64,
    mem_cap: f64,
    cpu_used: f64,
    mem_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Summary {
    offered: f64,
    admitted: f64,
    admitted_floored: f64,
    admission_rate: f64,
    servers: Vec<ServerUsage>,
}

pub fn cmd(args: SolveArgs) -> Result<()> {
    let topology = args.model.topology_or_default()?;
    let n = topology.n();
    let mut offered =
        load_scenario(&args.scenario).with_context(|| format!("scenario `{}`", args.scenario))?;
    if offered.n() == 0 {
        offered = Matrix::zeros(n);
    }
    let (cpu, mem) = match &args.flavor {
        Some(name) => {
            let catalog = args.model.catalog_or_default()?;
            let (p, m) = catalog.get(catalog.index_of(name)?).capacity_units();
            (vec![p; n], vec![m; n])
        }
        None => (
            per_server(args.cpu.as_deref().unwrap_or("100"), n, "--cpu")?,
            per_server(args.mem.as_deref().unwrap_or("100"), n, "--mem")?,
        ),
    };
    anyhow::ensure!(
        args.window.is_finite() && args.window > 0.0,
        "--window must be positive"
    );
    let run = SolveRun {
        topology,
        offered,
        resources: ResourceProfile {
            cpu,
            mem,
            coeffs: args.model.costs.resolve()?.per_rate(args.window),
        },
        weights: args.model.weights_or_default()?,
    };
    execute(run, args.seed, Sink::new(&args.output)?)
}

pub fn execute(run: SolveRun, seed: u64, mut sink: Sink) -> Result<()> {
    let started = Instant::now();
    let outcome = plan_admission(&run.topology, &run.offered, &run.resources, &run.weights)?;
    let elapsed = started.elapsed();
    let offered = run.offered.total();
    let admitted = outcome.exact.total_admitted();
    let summary = Summary {
        offered,
        admitted,
        admitted_floored: outcome.floored.total_admitted(),
        admission_rate: if offered > 0.0 {
            admitted / offered
        } else {
            1.0
        },
        servers: (0..run.topology.n())
            .map(|l| ServerUsage {
                server: l + 1,
                cpu_cap: run.resources.cpu[l],
                mem_cap: run.resources.mem[l],
                cpu_used: outcome.exact.cpu[l],
                mem_used: outcome.exact.mem[l],
            })
            .collect(),
    };
    eprintln!(
        "admitted {:.2} of {:.2} calls/s ({:.1}%), integer plan {}, solved in {:.0} ms",
        summary.admitted,
        summary.offered,
        100.0 * summary.admission_rate,
        summary.admitted_floored,
        elapsed.as_secs_f64() * 1e3
    );

    sink.primary(
        "plan",
        || outcome.exact.to_csv(),
        || pretty(&outcome.exact.to_export()),
    )?;
    sink.secondary(
        "directives",
        || outcome.floored.to_csv(),
        || pretty(&outcome.floored.to_export()),
    )?;
    sink.secondary("summary", || summary_csv(&summary), || pretty(&summary))?;
    sink.secondary("usage", || usage_csv(&summary), || pretty(&summary.servers))?;
    sink.finish("solve", seed, &run)
}

fn summary_csv(s: &Summary) -> String {
    format!(
        "offered,admitted,admitted_floored,admission_rate\n{},{},{},{}\n",
        s.offered, s.admitted, s.admitted_floored, s.admission_rate
    )
}

fn usage_csv(s: &Summary) -> String {
    let mut out = String::from("server,cpu_cap,mem_cap,cpu_used,mem_used\n");
    for u in &s.servers {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            u.server, u.cpu_cap, u.mem_cap, u.cpu_used, u.mem_used
        );
    }
    out
}
