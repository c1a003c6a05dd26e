use serde::{Deserialize, Serialize};

use super::SimError;
use crate::admission::DutyCycleConfig;
use crate::autoscale::AutoscaleConfig;
use crate::network::{
    load_scenario, CostCoefficients, FlavorCatalog, Matrix, OfferedLoad, Topology, WeightCase,
    Weights, RATE_WINDOW_S,
};

/// Offered load in calls per second from `start` until the next phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub start: f64,
    pub load: OfferedLoad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Controller with fixed flavors.
    Controlled,
    /// Controller with predictive flavor selection.
    Autoscale,
    /// No controller: servers accept until saturated.
    Baseline,
}

impl std::str::FromStr for SimMode {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "controlled" => Ok(Self::Controlled),
            "autoscale" => Ok(Self::Autoscale),
            "baseline" => Ok(Self::Baseline),
            other => Err(SimError::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// Server outage over `[down, up)` seconds (0-based server).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub server: usize,
    pub down: f64,
    pub up: f64,
}

/// Knobs of the uncontrolled overload model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    /// Cost of parsing a duplicate INVITE, as a fraction of a local call.
    pub duplicate_cost: f64,
    /// Cost of a 503 rejection, as a fraction of a local call.
    pub reject_cost: f64,
    /// Memory held by one queued message, as a fraction of `beta1`.
    pub queue_memory: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            duplicate_cost: 0.25,
            reject_cost: 1.0,
            queue_memory: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub topology: Topology,
    pub schedule: Vec<Phase>,
    pub duty: DutyCycleConfig,
    pub weights: Weights,
    /// Per-call costs measured over `rate_window` seconds.
    pub coeffs: CostCoefficients,
    pub rate_window: f64,
    pub catalog: FlavorCatalog,
    pub initial_flavors: Vec<usize>,
    pub mode: SimMode,
    pub autoscale: AutoscaleConfig,
    pub failures: Vec<Failure>,
    pub seed: u64,
    pub duration: f64,
    /// Mean call holding time, seconds (exponential).
    pub holding_mean: f64,
    /// Mean caller patience while held, seconds (exponential).
    pub patience: f64,
    /// Coefficient of variation of per-slot arrival counts.
    pub arrival_cv: f64,
    /// SIP retransmission timer T1 and transaction timeout, seconds.
    pub t1: f64,
    pub timer_b: f64,
    /// Fixed per-hop forwarding delay, milliseconds.
    pub hop_delay_ms: f64,
    pub baseline: BaselineParams,
}

impl SimConfig {
    /// Paper topology, small flavors everywhere, admission-dominant weights.
    pub fn new(schedule: Vec<Phase>, duration: f64, mode: SimMode) -> Self {
        let topology = Topology::six_server_ring();
        let n = topology.n();
        Self {
            topology,
            schedule,
            duty: DutyCycleConfig::default(),
            weights: WeightCase::F4.weights(),
            coeffs: CostCoefficients::SMALL,
            rate_window: RATE_WINDOW_S,
            catalog: FlavorCatalog::standard(),
            initial_flavors: vec![0; n],
            mode,
            autoscale: AutoscaleConfig::default(),
            failures: Vec::new(),
            seed: 0,
            duration,
            holding_mean: 60.0,
            patience: 120.0,
            arrival_cv: 0.05,
            t1: 0.5,
            timer_b: 32.0,
            hop_delay_ms: 5.0,
            baseline: BaselineParams::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    /// Number of whole slots in the run (at least one).
    pub fn slots(&self) -> usize {
        ((self.duration / self.duty.tau).round() as usize).max(1)
    }

    /// Costs per call counted within one slot.
    pub fn slot_coeffs(&self) -> CostCoefficients {
        self.coeffs.scaled(self.rate_window / self.duty.tau)
    }

    /// Offered rates in force at time `t`.
    pub fn load_at(&self, t: f64) -> &OfferedLoad {
        let idx = self
            .schedule
            .iter()
            .rposition(|p| p.start <= t)
            .unwrap_or(0);
        &self.schedule[idx].load
    }

    /// Index of the schedule phase containing `t`.
    pub fn phase_at(&self, t: f64) -> usize {
        self.schedule
            .iter()
            .rposition(|p| p.start <= t)
            .unwrap_or(0)
    }

    pub fn is_down(&self, server: usize, t: f64) -> bool {
        self.failures
            .iter()
            .any(|f| f.server == server && f.down <= t && t < f.up)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.n();
        let bad = |m: String| Err(SimError::Config(m));
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration {} must be positive", self.duration));
        }
        if self.schedule.is_empty() {
            return bad("schedule is empty".into());
        }
        if self.schedule.windows(2).any(|w| w[1].start <= w[0].start) {
            return bad("schedule start times must increase".into());
        }
        if let Some(p) = self.schedule.iter().find(|p| p.load.n() != n) {
            return bad(format!(
                "phase at {} s has a {}x{} load for {} servers",
                p.start,
                p.load.n(),
                p.load.n(),
                n
            ));
        }
        self.duty.validate()?;
        self.weights.validate()?;
        self.coeffs.validate()?;
        if self.initial_flavors.len() != n
            || self
                .initial_flavors
                .iter()
                .any(|&f| f >= self.catalog.len())
        {
            return bad("initial flavors must name one catalog entry per server".into());
        }
        for f in &self.failures {
            check_failure(f, n, self.duration)?;
        }
        let positive = [
            self.holding_mean,
            self.patience,
            self.t1,
            self.timer_b,
            self.rate_window,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("holding time, patience, timers and rate window must be positive".into());
        }
        let b = &self.baseline;
        if [
            self.arrival_cv,
            self.hop_delay_ms,
            b.duplicate_cost,
            b.reject_cost,
            b.queue_memory,
        ]
        .iter()
        .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return bad("model fractions must be nonnegative".into());
        }
        Ok(())
    }
}

fn check_failure(f: &Failure, n: usize, duration: f64) -> Result<(), SimError> {
    if f.server >= n {
        return Err(SimError::Config(format!(
            "failure names server {} of {}",
            f.server + 1,
            n
        )));
    }
    if !(0.0 <= f.down && f.down < f.up && f.up <= duration) {
        return Err(SimError::Config(format!(
            "failure interval [{}, {}) must satisfy 0 <= down < up <= {}",
            f.down, f.up, duration
        )));
    }
    Ok(())
}

/// Add an outage of `server` (0-based) over `[down, up)`.
pub fn inject_failure(
    mut config: SimConfig,
    server: usize,
    down: f64,
    up: f64,
) -> Result<SimConfig, SimError> {
    let f = Failure { server, down, up };
    check_failure(&f, config.n(), config.duration)?;
    config.failures.push(f);
    Ok(config)
}

/// Five 600 s phases: scenarios 1, 2, 3, 2, 1.
pub fn five_phase(mode: SimMode) -> SimConfig {
    let names = [
        "scenario1",
        "scenario2",
        "scenario3",
        "scenario2",
        "scenario1",
    ];
    let schedule = names
        .iter()
        .enumerate()
        .map(|(k, name)| Phase {
            start: 600.0 * k as f64,
            load: load_scenario(name).expect("built-in scenario"),
        })
        .collect();
    SimConfig::new(schedule, 3000.0, mode)
}

/// 1000 calls/s from server 1 to server 6; server 3 down over [200, 400).
pub fn node_failure(mode: SimMode) -> SimConfig {
    let mut load = Matrix::zeros(6);
    load.set(0, 5, 1000.0);
    let config = SimConfig::new(vec![Phase { start: 0.0, load }], 600.0, mode);
    inject_failure(config, 2, 200.0, 400.0).expect("valid preset")
}

/// Scenario 1 under the controller at slot length `tau`.
pub fn tau_preset(tau: f64, duration: f64) -> SimConfig {
    let load = load_scenario("scenario1").expect("built-in scenario");
    let mut config = SimConfig::new(
        vec![Phase { start: 0.0, load }],
        duration,
        SimMode::Controlled,
    );
    config.duty = DutyCycleConfig::with_tau(tau);
    config
}

/// Look up a preset by name.
pub fn preset(name: &str, mode: Option<SimMode>) -> Result<SimConfig, SimError> {
    match name {
        "phases" => Ok(five_phase(mode.unwrap_or(SimMode::Autoscale))),
        "failure" => Ok(node_failure(mode.unwrap_or(SimMode::Controlled))),
        "tau" => {
            let mut c = tau_preset(3.0, 600.0);
            if let Some(m) = mode {
                c.mode = m;
            }
            Ok(c)
        }
        other => Err(SimError::Config(format!(
            "unknown preset `{other}` (phases, failure, tau)"
        ))),
    }
}
