use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{plan_admission, AdmissionError, RoutingPlan};
use crate::autoscale::Autoscaler;
use crate::network::{CostCoefficients, Matrix, ResourceProfile, Topology, Weights};

/// A server's last report is used for at most this many slots after it
/// arrived; older servers are held at zero admissions.
pub const STALE_AFTER_SLOTS: u64 = 2;

/// Slot length and the gather / compute / notify budgets inside it, in
/// seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutyCycleConfig {
    pub tau: f64,
    pub t_gather: f64,
    pub t_compute: f64,
    pub t_notify: f64,
}

impl Default for DutyCycleConfig {
    fn default() -> Self {
        Self {
            tau: 3.0,
            t_gather: 0.2,
            t_compute: 0.95,
            t_notify: 0.1,
        }
    }
}

impl DutyCycleConfig {
    pub fn with_tau(tau: f64) -> Self {
        Self {
            tau,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AdmissionError> {
        let parts = [self.tau, self.t_gather, self.t_compute, self.t_notify];
        if parts.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || self.tau <= 0.0 {
            return Err(AdmissionError::DutyCycle(format!("{self:?}")));
        }
        if self.busy() > self.tau {
            return Err(AdmissionError::DutyCycle(format!(
                "t_g + t_c + t_n = {} > tau = {}",
                self.busy(),
                self.tau
            )));
        }
        Ok(())
    }

    pub fn busy(&self) -> f64 {
        self.t_gather + self.t_compute + self.t_notify
    }

    pub fn idle(&self) -> f64 {
        self.tau - self.busy()
    }
}

/// Stats one server sends at a slot boundary (0-based ids).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerReport {
    pub slot: u64,
    pub server: usize,
    pub cpu: f64,
    pub mem: f64,
    pub local: f64,
    /// New outbound requests per destination.
    pub outbound: BTreeMap<usize, f64>,
}

/// Quotas for one server: its admitted row, relay quotas where it is the
/// sending hop `(origin, dest, next hop, quota)`, and optionally a flavor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directive {
    pub slot: u64,
    pub server: usize,
    pub admitted: Vec<u64>,
    pub relays: Vec<(usize, usize, usize, u64)>,
    pub flavor: Option<String>,
}

impl Directive {
    /// All-zero directive: admit nothing new.
    pub fn hold(slot: u64, server: usize, n: usize) -> Self {
        Self {
            slot,
            server,
            admitted: vec![0; n],
            relays: Vec::new(),
            flavor: None,
        }
    }

    /// Slice an integer plan into the part addressed to `server`.
    pub fn from_plan(slot: u64, server: usize, plan: &RoutingPlan, flavor: Option<String>) -> Self {
        let q = |v: f64| v.max(0.0).floor() as u64;
        Self {
            slot,
            server,
            admitted: plan.admitted.row(server).iter().map(|&v| q(v)).collect(),
            relays: plan
                .relays
                .iter()
                .filter(|r| r.key.from == server && q(r.flow) > 0)
                .map(|r| (r.key.origin, r.key.dest, r.key.to, q(r.flow)))
                .collect(),
            flavor,
        }
    }

    pub fn is_hold(&self) -> bool {
        self.admitted.iter().all(|&c| c == 0) && self.relays.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyCycleState {
    pub slot: u64,
    /// Last report per server and the slot it was received in.
    pub latest: Vec<Option<(ServerReport, u64)>>,
    pub directives: Vec<Directive>,
    /// Servers whose data was too old at the last boundary.
    pub stale: Vec<bool>,
}

impl DutyCycleState {
    pub fn new(n: usize) -> Self {
        Self {
            slot: 0,
            latest: vec![None; n],
            directives: Vec::new(),
            stale: vec![false; n],
        }
    }
}

/// What the compute phase runs.
pub enum PlanMode<'a> {
    Admission {
        weights: Weights,
        coeffs: CostCoefficients,
    },
    Autoscale(&'a mut Autoscaler),
}

/// One boundary of the controller: ingest reports, plan, and emit one
/// directive per server.
pub fn run_duty_cycle(
    state: &DutyCycleState,
    config: &DutyCycleConfig,
    reports: &[ServerReport],
    topology: &Topology,
    mode: PlanMode<'_>,
) -> Result<(Vec<Directive>, DutyCycleState), AdmissionError> {
    config.validate()?;
    let n = topology.n();
    let slot = state.slot;
    let mut next = state.clone();
    if next.latest.len() != n {
        next.latest.resize(n, None);
        next.stale.resize(n, false);
    }
    for r in reports {
        if r.server < n {
            next.latest[r.server] = Some((r.clone(), slot));
        } else {
            tracing::warn!(server = r.server + 1, "report from unknown server ignored");
        }
    }
    if next.latest.iter().all(Option::is_none) {
        return Err(AdmissionError::NoReports);
    }

    let mut offered = Matrix::zeros(n);
    let mut cpu = vec![0.0; n];
    let mut mem = vec![0.0; n];
    for l in 0..n {
        let fresh = match &next.latest[l] {
            Some((r, at)) if slot - at <= STALE_AFTER_SLOTS => Some(r),
            _ => None,
        };
        next.stale[l] = fresh.is_none();
        let Some(r) = fresh else { continue };
        cpu[l] = r.cpu.max(0.0);
        mem[l] = r.mem.max(0.0);
        offered.set(l, l, r.local.max(0.0));
        for (&j, &v) in &r.outbound {
            if j < n && j != l {
                offered.set(l, j, v.max(0.0));
            }
        }
    }
    for l in 0..n {
        let was = state.stale.get(l).copied().unwrap_or(false);
        if next.stale[l] && !was {
            tracing::warn!(
                server = l + 1,
                slot,
                "stats are stale; holding its admissions"
            );
        } else if was && !next.stale[l] {
            tracing::info!(server = l + 1, slot, "stats are fresh again");
        }
    }
    for i in 0..n {
        for j in 0..n {
            if next.stale[i] || next.stale[j] {
                offered.set(i, j, 0.0);
            }
        }
    }

    let directives: Vec<Directive> = if next.stale.iter().all(|&s| s) {
        tracing::warn!(slot, "every server is stale; holding everything");
        (0..n).map(|l| Directive::hold(slot, l, n)).collect()
    } else {
        let view = topology.without(&next.stale);
        match mode {
            PlanMode::Admission { weights, coeffs } => {
                let resources = ResourceProfile { cpu, mem, coeffs };
                let plan = plan_admission(&view, &offered, &resources, &weights)?.floored;
                (0..n)
                    .map(|l| Directive::from_plan(slot, l, &plan, None))
                    .collect()
            }
            PlanMode::Autoscale(scaler) => {
                let d = scaler
                    .step(&view, &offered, &next.stale)
                    .map_err(|e| match e {
                        crate::autoscale::AutoscaleError::Admission(a) => a,
                        other => AdmissionError::DutyCycle(other.to_string()),
                    })?;
                (0..n)
                    .map(|l| {
                        let flavor = scaler.catalog.get(d.selection.flavors[l]).name.clone();
                        Directive::from_plan(slot, l, &d.directive, Some(flavor))
                    })
                    .collect()
            }
        }
    };
    next.slot = slot + 1;
    next.directives = directives.clone();
    Ok((directives, next))
}
