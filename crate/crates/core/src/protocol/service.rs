use std::collections::BTreeMap;
use std::net::{SocketAddr, UdpSocket};
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{
    decode_directive, decode_stats, encode_directive, encode_stats, Directive, ProtocolError,
    StatsReport, MAX_DATAGRAM,
};
use crate::admission::{
    self, run_duty_cycle, DutyCycleConfig, DutyCycleState, PlanMode, ServerReport,
};
use crate::network::{CostCoefficients, FlavorCatalog, Topology, Weights};

const DEFAULT_CONTROLLER_PORT: u16 = 5090;
const DEFAULT_AGENT_PORT_BASE: u16 = 5091;

fn env_port(name: &str) -> Option<u16> {
    std::env::var(name).ok()?.parse().ok()
}

/// `VLBCAC_CONTROLLER_PORT`, default 5090.
pub fn controller_port() -> u16 {
    env_port("VLBCAC_CONTROLLER_PORT").unwrap_or(DEFAULT_CONTROLLER_PORT)
}

/// Port of agent `id` (1-based): `VLBCAC_AGENT_PORT_BASE + id - 1`, base
/// 5091 by default.
pub fn agent_port(id: usize) -> u16 {
    let base = env_port("VLBCAC_AGENT_PORT_BASE").unwrap_or(DEFAULT_AGENT_PORT_BASE);
    base.saturating_add(id.saturating_sub(1) as u16)
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub bind: SocketAddr,
    /// Agent address per server (0-based index).
    pub agents: Vec<SocketAddr>,
    pub topology: Topology,
    pub duty: DutyCycleConfig,
    pub weights: Weights,
    pub coeffs: CostCoefficients,
    /// Multiplies every phase duration; below 1 runs faster than real time.
    pub time_scale: f64,
    pub max_slots: Option<u64>,
}

/// What the controller saw and sent in one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub reports: Vec<ServerReport>,
    pub directives: Vec<admission::Directive>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ServeOutcome {
    pub slots: Vec<SlotRecord>,
}

fn scaled(seconds: f64, scale: f64) -> Duration {
    Duration::from_secs_f64((seconds * scale).max(0.0))
}

/// Controller loop: gather reports, plan, unicast directives, idle.
/// Socket errors are logged and the loop carries on.
pub fn controller_serve(config: &ServeConfig) -> Result<ServeOutcome, ProtocolError> {
    controller_serve_on(UdpSocket::bind(config.bind)?, config)
}

/// As [`controller_serve`] on an already bound socket.
pub fn controller_serve_on(
    socket: UdpSocket,
    config: &ServeConfig,
) -> Result<ServeOutcome, ProtocolError> {
    config
        .duty
        .validate()
        .map_err(|e| ProtocolError::Invalid(e.to_string()))?;
    let n = config.topology.n();
    if config.agents.len() != n {
        return Err(ProtocolError::Invalid(format!(
            "{} agent addresses for {n} servers",
            config.agents.len()
        )));
    }
    tracing::info!(addr = %socket.local_addr()?, "controller listening");
    let mut state = DutyCycleState::new(n);
    let mut early: BTreeMap<u64, BTreeMap<usize, ServerReport>> = BTreeMap::new();
    let mut outcome = ServeOutcome::default();
    let mut buf = vec![0u8; MAX_DATAGRAM + 1];
    let scale = config.time_scale;

    loop {
        let slot = state.slot;
        if config.max_slots.is_some_and(|m| slot >= m) {
            return Ok(outcome);
        }
        // Gather: last write wins per server.
        let mut got = early.remove(&slot).unwrap_or_default();
        let deadline = Instant::now() + scaled(config.duty.t_gather, scale);
        while got.len() < n {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                break;
            }
            socket.set_read_timeout(Some(left))?;
            let len = match socket.recv_from(&mut buf) {
                Ok((len, _)) => len,
                Err(e)
                    if matches!(
                        e.kind(),
                        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                    ) =>
                {
                    break
                }
                Err(e) => {
                    tracing::warn!(error = %e, "receive failed");
                    continue;
                }
            };
            match decode_stats(&buf[..len]) {
                Ok(r) if (r.srv as usize) > n => {
                    tracing::warn!(srv = r.srv, "report from unknown server")
                }
                Ok(r) if r.slot == slot => {
                    got.insert(r.srv as usize - 1, r.to_report());
                }
                Ok(r) if r.slot > slot => {
                    early
                        .entry(r.slot)
                        .or_default()
                        .insert(r.srv as usize - 1, r.to_report());
                }
                Ok(r) => tracing::debug!(srv = r.srv, slot = r.slot, "late report dropped"),
                Err(e) => tracing::warn!(error = %e, "bad report"),
            }
        }

        // Compute.
        let started = Instant::now();
        let reports: Vec<ServerReport> = got.into_values().collect();
        let mode = PlanMode::Admission {
            weights: config.weights,
            coeffs: config.coeffs,
        };
        let directives =
            match run_duty_cycle(&state, &config.duty, &reports, &config.topology, mode) {
                Ok((d, next)) => {
                    state = next;
                    d
                }
                Err(e) => {
                    tracing::warn!(slot, error = %e, "planning failed; holding all admissions");
                    state.slot += 1;
                    (0..n)
                        .map(|l| admission::Directive::hold(slot, l, n))
                        .collect()
                }
            };

        // Notify.
        for d in &directives {
            let sent = encode_directive(&Directive::from_directive(d)).and_then(|bytes| {
                socket
                    .send_to(&bytes, config.agents[d.server])
                    .map_err(ProtocolError::from)
            });
            if let Err(e) = sent {
                tracing::warn!(server = d.server + 1, error = %e, "directive not sent");
            }
        }
        outcome.slots.push(SlotRecord {
            slot,
            reports,
            directives,
        });

        // Idle for the rest of the slot.
        let busy = scaled(config.duty.t_compute + config.duty.t_notify, scale);
        let spent = started.elapsed();
        std::thread::sleep(scaled(config.duty.idle(), scale) + busy.saturating_sub(spent));
    }
}

/// One agent's view: its flavor and the quotas in force.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentState {
    pub server: usize,
    pub flavor: usize,
    pub catalog: FlavorCatalog,
    pub last_slot: Option<u64>,
    pub admitted: Vec<u64>,
    pub relays: Vec<(usize, usize, usize, u64)>,
    /// Calls admitted so far.
    pub admitted_total: u64,
}

impl AgentState {
    pub fn new(server: usize, n: usize, catalog: FlavorCatalog, flavor: usize) -> Self {
        Self {
            server,
            flavor,
            catalog,
            last_slot: None,
            admitted: vec![0; n],
            relays: Vec::new(),
            admitted_total: 0,
        }
    }

    /// Remaining resources reported to the controller.
    pub fn capacity(&self) -> (f64, f64) {
        self.catalog.get(self.flavor).capacity_units()
    }

    /// Apply a directive. Returns `Ok(false)` if it was ignored: another
    /// server's, or a slot already applied.
    pub fn apply(&mut self, d: &admission::Directive) -> Result<bool, ProtocolError> {
        if d.server != self.server {
            tracing::warn!(
                got = d.server + 1,
                mine = self.server + 1,
                "directive for another server ignored"
            );
            return Ok(false);
        }
        if self.last_slot.is_some_and(|s| d.slot <= s) {
            return Ok(false);
        }
        if let Some(name) = &d.flavor {
            self.flavor = self
                .catalog
                .index_of(name)
                .map_err(|_| ProtocolError::Invalid(format!("unknown flavor `{name}`")))?;
        }
        self.admitted = d.admitted.clone();
        self.relays = d.relays.clone();
        self.last_slot = Some(d.slot);
        Ok(true)
    }

    /// Admit this slot's offered row against the quotas in force.
    pub fn admit(&mut self, offered: &[u64]) -> u64 {
        let taken: u64 = offered
            .iter()
            .zip(&self.admitted)
            .map(|(&o, &q)| o.min(q))
            .sum();
        self.admitted_total += taken;
        taken
    }

    /// Fail-safe when no directive arrived: admit nothing new.
    pub fn hold(&mut self) {
        self.admitted.iter_mut().for_each(|q| *q = 0);
        self.relays.clear();
    }
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    /// 0-based server id.
    pub server: usize,
    pub n: usize,
    pub bind: SocketAddr,
    pub controller: SocketAddr,
    /// Offered counts per slot, one row of length `n` (own index = local).
    pub trace: Vec<Vec<u64>>,
    pub catalog: FlavorCatalog,
    pub flavor: usize,
    /// How long to wait for a directive after reporting.
    pub directive_timeout: Duration,
    pub max_slots: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentOutcome {
    pub state: AgentState,
    pub reports: Vec<StatsReport>,
    pub applied: Vec<admission::Directive>,
}

/// Parse a trace: one row per slot of `n` nonnegative integers separated by
/// commas or whitespace. Blank lines and `#` comments are skipped.
pub fn parse_trace(text: &str, n: usize) -> Result<Vec<Vec<u64>>, ProtocolError> {
    let mut rows = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ProtocolError::Malformed(format!("trace line {}: {e}", no + 1)))?;
        if row.len() != n {
            return Err(ProtocolError::Malformed(format!(
                "trace line {}: expected {n} counts, found {}",
                no + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Agent loop: report the trace row for each slot, then apply the
/// directive that comes back. The trace repeats its last row (or zeros)
/// once exhausted.
pub fn mock_agent(config: &AgentConfig) -> Result<AgentOutcome, ProtocolError> {
    mock_agent_on(UdpSocket::bind(config.bind)?, config)
}

/// As [`mock_agent`] on an already bound socket.
pub fn mock_agent_on(
    socket: UdpSocket,
    config: &AgentConfig,
) -> Result<AgentOutcome, ProtocolError> {
    let mut state = AgentState::new(
        config.server,
        config.n,
        config.catalog.clone(),
        config.flavor,
    );
    let mut reports = Vec::new();
    let mut applied = Vec::new();
    let mut buf = vec![0u8; MAX_DATAGRAM + 1];
    let zeros = vec![0; config.n];
    let mut slot = 0u64;
    loop {
        if config.max_slots.is_some_and(|m| slot >= m) {
            return Ok(AgentOutcome {
                state,
                reports,
                applied,
            });
        }
        let row = config
            .trace
            .get(slot as usize)
            .or(config.trace.last())
            .unwrap_or(&zeros);
        let (p, m) = state.capacity();
        let report = StatsReport {
            v: super::PROTOCOL_VERSION,
            slot,
            srv: config.server as u32 + 1,
            p,
            m,
            local: row[config.server],
            out: (0..config.n)
                .filter(|&j| j != config.server)
                .map(|j| (j as u32 + 1, row[j]))
                .collect(),
        };
        let bytes = encode_stats(&report)?;
        if let Err(e) = socket.send_to(&bytes, config.controller) {
            tracing::warn!(error = %e, "report not sent");
        }
        reports.push(report);

        let deadline = Instant::now() + config.directive_timeout;
        let mut got = None;
        while got.is_none() {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                break;
            }
            socket.set_read_timeout(Some(left))?;
            match socket.recv_from(&mut buf) {
                Ok((len, _)) => match decode_directive(&buf[..len])
                    .and_then(|d| d.to_directive(config.n))
                {
                    Ok(d) if d.slot == slot => got = Some(d),
                    Ok(d) => tracing::debug!(slot = d.slot, "directive for another slot ignored"),
                    Err(e) => tracing::warn!(error = %e, "bad directive"),
                },
                Err(e)
                    if matches!(
                        e.kind(),
                        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                    ) =>
                {
                    break
                }
                Err(e) => tracing::warn!(error = %e, "receive failed"),
            }
        }
        match got {
            Some(d) => match state.apply(&d) {
                Ok(true) => applied.push(d),
                Ok(false) => {}
                Err(e) => tracing::warn!(error = %e, "directive rejected"),
            },
            None => {
                tracing::warn!(slot, "no directive; admitting nothing new");
                state.hold();
            }
        }
        state.admit(row);
        slot += 1;
    }
}
