use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use vlbcac::admission::DutyCycleConfig;
use vlbcac::network::load_scenario;
use vlbcac::sim::{
    self, inject_failure, summaries_to_csv, MetricsLog, Phase, SimConfig, SimMode, WindowSummary,
};

use crate::manifest::{pretty, read_json, OutputArgs, Sink};
use crate::model::ModelArgs;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in experiment: phases (five load phases with autoscaling),
    /// failure (server 3 down mid-run) or tau (scenario 1 under the controller).
    #[arg(long, conflicts_with_all = ["config", "scenario"])]
    pub preset: Option<String>,
    /// Simulator configuration JSON.
    #[arg(long, conflicts_with = "scenario")]
    pub config: Option<PathBuf>,
    /// Constant load for the whole run: scenario name or matrix file.
    #[arg(long)]
    pub scenario: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Run length, seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Controller slot length, seconds.
    #[arg(long)]
    pub tau: Option<f64>,
    /// controlled, baseline or autoscale.
    #[arg(long)]
    pub mode: Option<SimMode>,
    /// Let the controller resize servers (same as `--mode autoscale`).
    #[arg(long, conflicts_with = "mode")]
    pub autoscale: bool,
    /// Outage `server:down:up` with a 1-based server and times in seconds.
    #[arg(long, value_name = "SRV:T1:T2")]
    pub fail: Vec<String>,
    /// Starting flavor of every server.
    #[arg(long)]
    pub initial_flavor: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run this many seeds in parallel, starting at the given seed.
    #[arg(long)]
    pub sweep: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Resolved inputs: one configuration per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRun {
    pub runs: Vec<SimConfig>,
}

#[derive(Serialize)]
struct SeedSummary<'a> {
    seed: u64,
    dropped: f64,
    phases: &'a [WindowSummary],
}

fn parse_failure(spec: &str) -> Result<(usize, f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("--fail `{spec}`: expected SRV:T1:T2");
    }
    let server: usize = parts[0]
        .parse()
        .with_context(|| format!("--fail `{spec}`: server"))?;
    if server == 0 {
        bail!("--fail `{spec}`: servers are numbered from 1");
    }
    let t1: f64 = parts[1]
        .parse()
        .with_context(|| format!("--fail `{spec}`: start time"))?;
    let t2: f64 = parts[2]
        .parse()
        .with_context(|| format!("--fail `{spec}`: end time"))?;
    Ok((server - 1, t1, t2))
}

pub fn resolve(args: &SimulateArgs) -> Result<SimConfig> {
    let mode = if args.autoscale {
        Some(SimMode::Autoscale)
    } else {
        args.mode
    };
    let mut config = if let Some(name) = &args.preset {
        sim::preset(name, mode)?
    } else if let Some(path) = &args.config {
        read_json::<SimConfig>(path)?
    } else {
        let name = args.scenario.as_deref().unwrap_or("scenario1");
        let load = load_scenario(name).with_context(|| format!("scenario `{name}`"))?;
        SimConfig::new(vec![Phase { start: 0.0, load }], 600.0, SimMode::Controlled)
    };
    if let Some(t) = args.model.topology()? {
        config.initial_flavors = vec![config.initial_flavors.first().copied().unwrap_or(0); t.n()];
        config.topology = t;
    }
    for phase in &mut config.schedule {
        if phase.load.n() == 0 {
            phase.load = vlbcac::network::Matrix::zeros(config.topology.n());
        }
    }
    if let Some(w) = args.model.weights()? {
        config.weights = w;
    }
    if args.model.costs.given() {
        config.coeffs = args.model.costs.resolve()?;
    }
    if let Some(c) = args.model.catalog()? {
        config.catalog = c;
        config.initial_flavors.iter_mut().for_each(|f| *f = 0);
    }
    if let Some(name) = &args.initial_flavor {
        let f = config.catalog.index_of(name)?;
        config.initial_flavors.iter_mut().for_each(|x| *x = f);
    }
    if let Some(d) = args.duration {
        config.duration = d;
    }
    if let Some(tau) = args.tau {
        config.duty = DutyCycleConfig::with_tau(tau);
    }
    if let Some(m) = mode {
        config.mode = m;
    }
    for spec in &args.fail {
        let (server, down, up) = parse_failure(spec)?;
        config = inject_failure(config, server, down, up)?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

pub fn cmd(args: SimulateArgs) -> Result<()> {
    let base = resolve(&args)?;
    let runs = match args.sweep {
        None => vec![base],
        Some(0) => bail!("--sweep needs at least one run"),
        Some(k) => (0..k as u64)
            .map(|i| SimConfig {
                seed: base.seed + i,
                ..base.clone()
            })
            .collect(),
    };
    let seed = runs[0].seed;
    execute(SimulateRun { runs }, seed, Sink::new(&args.output)?)
}

pub fn execute(run: SimulateRun, seed: u64, mut sink: Sink) -> Result<()> {
    if run.runs.is_empty() {
        bail!("no simulation runs configured");
    }
    let logs = sim::sweep(&run.runs)
        .into_iter()
        .collect::<Result<Vec<MetricsLog>, _>>()?;
    let summaries: Vec<Vec<WindowSummary>> = logs.iter().map(MetricsLog::phase_summaries).collect();
    for (config, (log, phases)) in run.runs.iter().zip(logs.iter().zip(&summaries)) {
        for (k, s) in phases.iter().enumerate() {
            eprintln!(
                "seed {} phase {} [{:.0}, {:.0}) s: offered {:.1}/s, carried {:.1}/s ({:.1}%), cpu {:.1}%",
                config.seed,
                k + 1,
                s.start,
                s.end,
                s.offered_rate,
                s.carried_rate,
                100.0 * s.carried_ratio,
                s.cpu_avg
            );
        }
        if log.dropped > 0.0 {
            eprintln!(
                "seed {}: {} established calls dropped by failures",
                config.seed, log.dropped
            );
        }
    }

    if let [log] = logs.as_slice() {
        let phases = &summaries[0];
        sink.primary("phases", || summaries_to_csv(phases), || pretty(phases))?;
        sink.secondary("metrics", || log.to_csv(), || log.to_json())?;
    } else {
        let table: Vec<SeedSummary> = run
            .runs
            .iter()
            .zip(logs.iter().zip(&summaries))
            .map(|(c, (log, phases))| SeedSummary {
                seed: c.seed,
                dropped: log.dropped,
                phases,
            })
            .collect();
        sink.primary("sweep", || sweep_csv(&table), || pretty(&table))?;
        for (c, log) in run.runs.iter().zip(&logs) {
            sink.secondary(
                &format!("metrics_seed{}", c.seed),
                || log.to_csv(),
                || log.to_json(),
            )?;
        }
    }
    sink.finish("simulate", seed, &run)
}

fn sweep_csv(table: &[SeedSummary]) -> String {
    let phases = summaries_to_csv(&[]);
    let header = phases.lines().next().unwrap_or_default();
    let mut out = format!("seed,phase,{header}\n");
    for s in table {
        let body = summaries_to_csv(s.phases);
        for (k, line) in body.lines().skip(1).enumerate() {
            let _ = writeln!(out, "{},{},{line}", s.seed, k + 1);
        }
    }
    out
}
