use std::fmt::Write as _;
use std::fs;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use vlbcac::admission::DutyCycleConfig;
use vlbcac::network::RATE_WINDOW_S;
use vlbcac::predictor::{parse_trace_csv, TRACE_HEADER};
use vlbcac::protocol::{self, agent_port, controller_port, AgentConfig, ServeConfig};

use crate::manifest::{pretty, OutputArgs, Sink};
use crate::model::ModelArgs;

fn addr(text: &str) -> Result<SocketAddr> {
    text.to_socket_addrs()
        .with_context(|| format!("address `{text}`"))?
        .next()
        .with_context(|| format!("address `{text}` did not resolve"))
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Controller UDP port (default from VLBCAC_CONTROLLER_PORT, else 5090).
    #[arg(long)]
    pub port: Option<u16>,
    /// Interface to listen on.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Agent addresses in server order, comma-separated. Defaults to the
    /// agent ports on the listening host.
    #[arg(long)]
    pub agents: Option<String>,
    /// Slot length, seconds.
    #[arg(long, default_value_t = 3.0)]
    pub tau: f64,
    /// Seconds over which the per-call costs were measured.
    #[arg(long, default_value_t = RATE_WINDOW_S)]
    pub window: f64,
    /// Multiplies every phase duration; below 1 runs faster than real time.
    #[arg(long, default_value_t = 1.0)]
    pub time_scale: f64,
    /// Stop after this many slots.
    #[arg(long)]
    pub max_slots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct ServeManifestConfig {
    bind: SocketAddr,
    agents: Vec<SocketAddr>,
    topology: vlbcac::network::Topology,
    duty: DutyCycleConfig,
    weights: vlbcac::network::Weights,
    coeffs: vlbcac::network::CostCoefficients,
    time_scale: f64,
    max_slots: Option<u64>,
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let topology = args.model.topology_or_default()?;
    let n = topology.n();
    let port = args.port.unwrap_or_else(controller_port);
    let bind = addr(&format!("{}:{port}", args.host))?;
    let agents = match &args.agents {
        Some(list) => list
            .split(',')
            .map(|a| addr(a.trim()))
            .collect::<Result<Vec<_>>>()?,
        None => (1..=n)
            .map(|k| addr(&format!("{}:{}", args.host, agent_port(k))))
            .collect::<Result<Vec<_>>>()?,
    };
    if agents.len() != n {
        bail!("{} agent addresses for {n} servers", agents.len());
    }
    anyhow::ensure!(
        args.window.is_finite() && args.window > 0.0,
        "--window must be positive"
    );
    anyhow::ensure!(
        args.time_scale.is_finite() && args.time_scale > 0.0,
        "--time-scale must be positive"
    );
    let duty = DutyCycleConfig::with_tau(args.tau);
    duty.validate()?;
    let config = ServeConfig {
        bind,
        agents,
        topology,
        duty,
        weights: args.model.weights_or_default()?,
        // Reports carry counts per slot.
        coeffs: args.model.costs.resolve()?.scaled(args.window / args.tau),
        time_scale: args.time_scale,
        max_slots: args.max_slots,
    };
    let socket = std::net::UdpSocket::bind(config.bind)
        .with_context(|| format!("binding {}", config.bind))?;
    let outcome = protocol::controller_serve_on(socket, &config)?;

    let mut sink = Sink::new(&args.output)?;
    let csv = || {
        let mut out = String::from("slot,srv,dest,admitted\n");
        for rec in &outcome.slots {
            for d in &rec.directives {
                for (j, &q) in d.admitted.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{},{q}", rec.slot, d.server + 1, j + 1);
                }
            }
        }
        out
    };
    sink.primary("directives", csv, || pretty(&outcome))?;
    let resolved = ServeManifestConfig {
        bind: config.bind,
        agents: config.agents.clone(),
        topology: config.topology.clone(),
        duty: config.duty,
        weights: config.weights,
        coeffs: config.coeffs,
        time_scale: config.time_scale,
        max_slots: config.max_slots,
    };
    sink.finish("serve", args.seed, &resolved)
}

#[derive(Debug, Args)]
pub struct AgentArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// This agent's server id, from 1.
    #[arg(long)]
    pub id: usize,
    /// Offered load per slot: rows of n counts for this server, or a
    /// `slot,i,j,offered` trace. Without it the agent reports no load.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Controller address (default 127.0.0.1 on the controller port).
    #[arg(long)]
    pub controller: Option<String>,
    /// Agent UDP port (default from VLBCAC_AGENT_PORT_BASE + id - 1).
    #[arg(long)]
    pub port: Option<u16>,
    /// Interface to listen on.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Starting flavor.
    #[arg(long, default_value = "m1.small")]
    pub flavor: String,
    /// How long to wait for a directive before holding, milliseconds.
    #[arg(long, default_value_t = 3000)]
    pub timeout_ms: u64,
    /// Stop after this many slots.
    #[arg(long)]
    pub max_slots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct AgentManifestConfig {
    server: usize,
    n: usize,
    bind: SocketAddr,
    controller: SocketAddr,
    trace: Vec<Vec<u64>>,
    flavor: String,
    timeout_ms: u64,
    max_slots: Option<u64>,
}

/// Rows of offered counts for `server` (0-based) from either trace format.
pub fn load_trace(text: &str, server: usize, n: usize) -> Result<Vec<Vec<u64>>> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim() == TRACE_HEADER {
        let slots = parse_trace_csv(text, n)?;
        Ok(slots
            .iter()
            .map(|m| {
                m.row(server)
                    .iter()
                    .map(|v| v.round().max(0.0) as u64)
                    .collect()
            })
            .collect())
    } else {
        Ok(protocol::parse_trace(text, n)?)
    }
}

pub fn agent(args: AgentArgs) -> Result<()> {
    let n = args.model.topology_or_default()?.n();
    if args.id == 0 || args.id > n {
        bail!("--id {} outside 1..={n}", args.id);
    }
    let server = args.id - 1;
    let trace = match &args.trace {
        Some(p) => load_trace(
            &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            server,
            n,
        )?,
        None => Vec::new(),
    };
    let catalog = args.model.catalog_or_default()?;
    let flavor = catalog.index_of(&args.flavor)?;
    let port = args.port.unwrap_or_else(|| agent_port(args.id));
    let controller = match &args.controller {
        Some(a) => addr(a)?,
        None => addr(&format!("127.0.0.1:{}", controller_port()))?,
    };
    let config = AgentConfig {
        server,
        n,
        bind: addr(&format!("{}:{port}", args.host))?,
        controller,
        trace,
        catalog,
        flavor,
        directive_timeout: Duration::from_millis(args.timeout_ms),
        max_slots: args.max_slots,
    };
    let socket = std::net::UdpSocket::bind(config.bind)
        .with_context(|| format!("binding {}", config.bind))?;
    let outcome = protocol::mock_agent_on(socket, &config)?;
    eprintln!(
        "agent {}: {} slots reported, {} directives applied, {} calls admitted",
        args.id,
        outcome.reports.len(),
        outcome.applied.len(),
        outcome.state.admitted_total
    );

    let mut sink = Sink::new(&args.output)?;
    let csv = || {
        let mut out = String::from("slot,srv,p,m,local,outbound\n");
        for r in &outcome.reports {
            let outbound: u64 = r.out.values().sum();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{outbound}",
                r.slot, r.srv, r.p, r.m, r.local
            );
        }
        out
    };
    sink.primary("reports", csv, || pretty(&outcome))?;
    let resolved = AgentManifestConfig {
        server: args.id,
        n,
        bind: config.bind,
        controller: config.controller,
        trace: config.trace.clone(),
        flavor: args.flavor.clone(),
        timeout_ms: args.timeout_ms,
        max_slots: args.max_slots,
    };
    sink.finish("agent", args.seed, &resolved)
}
