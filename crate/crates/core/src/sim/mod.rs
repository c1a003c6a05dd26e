//! Slot-stepped simulation of a SIP server network under the admission
//! controller, with optional predictive autoscaling, or without any
//! controller.

mod baseline;
pub mod config;
pub mod metrics;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use thiserror::Error;

use crate::admission::{
    run_duty_cycle, AdmissionError, Directive, DutyCycleState, PlanMode, ServerReport,
};
use crate::autoscale::{AutoscaleError, Autoscaler};
use crate::network::NetworkError;

pub use config::{
    five_phase, inject_failure, node_failure, preset, tau_preset, BaselineParams, Failure, Phase,
    SimConfig, SimMode,
};
pub use metrics::{summaries_to_csv, MetricsLog, MetricsRow, WindowSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Admission(#[from] AdmissionError),
    #[error(transparent)]
    Autoscale(#[from] AutoscaleError),
}

impl From<NetworkError> for SimError {
    fn from(e: NetworkError) -> Self {
        Self::Config(e.to_string())
    }
}

/// Calls arriving in one slot for every origin/destination pair.
fn arrivals(config: &SimConfig, t: f64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let load = config.load_at(t);
    let tau = config.duty.tau;
    load.values()
        .iter()
        .map(|&rate| {
            let mean = rate * tau;
            if mean <= 0.0 {
                return 0;
            }
            let sd = config.arrival_cv * mean;
            let draw = if sd > 0.0 {
                Normal::new(mean, sd).expect("finite moments").sample(rng)
            } else {
                mean
            };
            draw.round().max(0.0) as u64
        })
        .collect()
}

fn binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid probability").sample(rng)
}

/// Probability that a call arriving uniformly within a slot is still
/// waiting when the directive lands, with exponential patience.
pub fn stay_probability(config: &SimConfig) -> f64 {
    let (tau, theta) = (config.duty.tau, config.patience);
    (-config.duty.busy() / theta).exp() * (theta / tau) * (1.0 - (-tau / theta).exp())
}

/// Run the whole schedule. Errors only on an invalid config; planning
/// failures hold admissions for that slot and are logged.
pub fn run(config: &SimConfig) -> Result<MetricsLog, SimError> {
    config.validate()?;
    let mut log = match config.mode {
        SimMode::Baseline => baseline::run(config),
        SimMode::Controlled | SimMode::Autoscale => run_controlled(config)?,
    };
    log.tau = config.duty.tau;
    log.phases = config
        .schedule
        .iter()
        .map(|p| p.start)
        .filter(|&s| s < config.duration)
        .collect();
    log.phases.push(config.slots() as f64 * config.duty.tau);
    Ok(log)
}

/// Relay quotas keyed by commodity then sending server.
type Quotas = BTreeMap<(usize, usize, usize), Vec<(usize, u64)>>;

fn quotas(directives: &[Directive]) -> Quotas {
    let mut q: Quotas = BTreeMap::new();
    for d in directives {
        for &(i, j, to, amount) in &d.relays {
            q.entry((i, j, d.server)).or_default().push((to, amount));
        }
    }
    q
}

/// Walk one admitted call along relay quotas, picking each next hop with
/// probability proportional to its remaining quota.
fn route(
    origin: usize,
    dest: usize,
    n: usize,
    quotas: &mut Quotas,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    let mut path = vec![origin];
    let mut at = origin;
    while at != dest {
        if path.len() > n {
            return None;
        }
        let options = quotas.get_mut(&(origin, dest, at))?;
        let total: u64 = options.iter().map(|o| o.1).sum();
        if total == 0 {
            return None;
        }
        let mut pick = rng.random_range(0..total);
        let slot = options
            .iter_mut()
            .find(|o| {
                if pick < o.1 {
                    true
                } else {
                    pick -= o.1;
                    false
                }
            })
            .expect("pick below total");
        slot.1 -= 1;
        at = slot.0;
        path.push(at);
    }
    Some(path)
}

fn run_controlled(config: &SimConfig) -> Result<MetricsLog, SimError> {
    let n = config.n();
    let tau = config.duty.tau;
    let coeffs = config.slot_coeffs();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut flavors = config.initial_flavors.clone();
    let mut scaler = match config.mode {
        SimMode::Autoscale => Some(Autoscaler::new(
            n,
            config.catalog.clone(),
            coeffs,
            flavors.clone(),
            config.autoscale.clone(),
        )?),
        _ => None,
    };
    let mut state = DutyCycleState::new(n);
    let stay = stay_probability(config);
    let release = 1.0 - (-tau / config.holding_mean).exp();
    let mut in_progress: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut log = MetricsLog::default();

    for slot in 0..config.slots() {
        let t0 = slot as f64 * tau;
        let boundary = t0 + tau;
        let down: Vec<bool> = (0..n)
            .map(|l| config.is_down(l, boundary.min(config.duration) - 1e-9))
            .collect();

        for count in in_progress.values_mut() {
            *count -= binomial(*count, release, &mut rng);
        }
        in_progress.retain(|path, count| {
            if path.iter().any(|&l| down[l]) {
                log.dropped += *count as f64;
                false
            } else {
                *count > 0
            }
        });

        let offered = arrivals(config, t0, &mut rng);
        let waiting: Vec<u64> = offered
            .iter()
            .map(|&a| binomial(a, stay, &mut rng))
            .collect();
        let reports: Vec<ServerReport> = (0..n)
            .filter(|&l| !down[l])
            .map(|l| {
                let (cpu, mem) = config.catalog.get(flavors[l]).capacity_units();
                ServerReport {
                    slot: slot as u64,
                    server: l,
                    cpu,
                    mem,
                    local: offered[l * n + l] as f64,
                    outbound: (0..n)
                        .filter(|&j| j != l)
                        .map(|j| (j, offered[l * n + j] as f64))
                        .collect(),
                }
            })
            .collect();

        let mode = match scaler.as_mut() {
            Some(s) => PlanMode::Autoscale(s),
            None => PlanMode::Admission {
                weights: config.weights,
                coeffs,
            },
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
                    (0..n).map(|l| Directive::hold(slot as u64, l, n)).collect()
                }
            };
        if scaler.is_some() {
            for d in &directives {
                if let Some(name) = &d.flavor {
                    if !down[d.server] {
                        flavors[d.server] = config.catalog.index_of(name)?;
                    }
                }
            }
        }

        let mut relays = quotas(&directives);
        let mut cpu = vec![0.0; n];
        let mut mem = vec![0.0; n];
        let mut admitted = 0u64;
        let mut paths: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if down[i] {
                    continue;
                }
                let quota = directives[i].admitted.get(j).copied().unwrap_or(0);
                let take = waiting[i * n + j].min(quota);
                admitted += take;
                for _ in 0..take {
                    let Some(path) = route(i, j, n, &mut relays, &mut rng) else {
                        continue;
                    };
                    if path.iter().any(|&l| down[l]) {
                        continue;
                    }
                    *paths.entry(path).or_default() += 1;
                }
            }
        }
        for (path, &count) in &paths {
            let c = count as f64;
            if path.len() == 1 {
                cpu[path[0]] += coeffs.alpha1 * c;
                mem[path[0]] += coeffs.beta1 * c;
            }
            for w in path.windows(2) {
                for &l in w {
                    cpu[l] += coeffs.alpha2 * c;
                    mem[l] += coeffs.beta2 * c;
                }
            }
        }

        let caps: Vec<(f64, f64)> = flavors
            .iter()
            .map(|&f| config.catalog.get(f).capacity_units())
            .collect();
        let pct = |v: f64, cap: f64| if cap > 0.0 { 100.0 * v / cap } else { 0.0 };
        let cpu_pct: Vec<f64> = (0..n).map(|l| pct(cpu[l], caps[l].0)).collect();
        let mem_pct: Vec<f64> = (0..n).map(|l| pct(mem[l], caps[l].1)).collect();
        let carried: u64 = paths.values().sum();
        let mut delay_sum = 0.0;
        for (path, &count) in &paths {
            let hops: f64 = path
                .iter()
                .map(|&l| {
                    let u = (cpu_pct[l] / 100.0).clamp(0.0, 0.95);
                    config.hop_delay_ms * (1.0 + u / (1.0 - u))
                })
                .sum();
            delay_sum += count as f64 * (1000.0 * (tau / 2.0 + config.duty.busy()) + hops);
        }
        for (path, count) in paths {
            *in_progress.entry(path).or_default() += count;
        }

        let up = down.iter().filter(|&&d| !d).count().max(1) as f64;
        let offered_total: u64 = offered.iter().sum();
        let mut row = MetricsRow::zero(
            t0,
            n,
            flavors
                .iter()
                .map(|&f| config.catalog.get(f).name.clone())
                .collect(),
        );
        row.offered = offered_total as f64;
        row.admitted = admitted as f64;
        row.carried = carried as f64;
        row.rejected = (offered_total - admitted) as f64;
        row.cpu_avg = (0..n)
            .filter(|&l| !down[l])
            .map(|l| cpu_pct[l])
            .sum::<f64>()
            / up;
        row.mem_avg = (0..n)
            .filter(|&l| !down[l])
            .map(|l| mem_pct[l])
            .sum::<f64>()
            / up;
        row.setup_delay_ms = if carried > 0 {
            delay_sum / carried as f64
        } else {
            0.0
        };
        row.cpu = cpu_pct;
        row.mem = mem_pct;
        log.rows.push(row);
    }
    Ok(log)
}

/// Run independent configurations in parallel.
pub fn sweep(configs: &[SimConfig]) -> Vec<Result<MetricsLog, SimError>> {
    use rayon::prelude::*;
    configs.par_iter().map(run).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Matrix;

    fn short(mode: SimMode, load: Matrix, duration: f64) -> SimConfig {
        SimConfig::new(vec![Phase { start: 0.0, load }], duration, mode)
    }

    #[test]
    fn empty_load_gives_zero_rows() {
        for mode in [SimMode::Controlled, SimMode::Baseline, SimMode::Autoscale] {
            let log = run(&short(mode, Matrix::zeros(6), 30.0)).unwrap();
            assert_eq!(log.rows.len(), 10);
            for r in &log.rows {
                assert_eq!(
                    (r.offered, r.admitted, r.carried, r.rejected, r.retx),
                    (0.0, 0.0, 0.0, 0.0, 0.0)
                );
                assert_eq!(r.cpu_avg, 0.0);
            }
        }
    }

    #[test]
    fn one_slot_run_has_one_row() {
        let c = short(
            SimMode::Controlled,
            crate::network::load_scenario("scenario1").unwrap(),
            3.0,
        );
        assert_eq!(run(&c).unwrap().rows.len(), 1);
    }

    #[test]
    fn stay_probability_decreases_with_slot_length() {
        let p: Vec<f64> = [2.0, 4.0, 6.0, 8.0]
            .iter()
            .map(|&tau| stay_probability(&tau_preset(tau, 60.0)))
            .collect();
        assert!(p.windows(2).all(|w| w[1] < w[0]));
        assert!(p.iter().all(|&x| x > 0.9 && x < 1.0));
    }

    #[test]
    fn bad_configs_are_rejected() {
        let c = short(SimMode::Controlled, Matrix::zeros(6), 30.0);
        assert!(inject_failure(c.clone(), 2, 20.0, 10.0).is_err());
        assert!(inject_failure(c.clone(), 9, 0.0, 10.0).is_err());
        let mut d = c.clone();
        d.duration = 0.0;
        assert!(run(&d).is_err());
        let mut e = c;
        e.schedule.push(Phase {
            start: 0.0,
            load: Matrix::zeros(6),
        });
        assert!(run(&e).is_err());
    }

    #[test]
    fn route_follows_quotas() {
        let mut q: Quotas = BTreeMap::new();
        q.insert((0, 2, 0), vec![(1, 1)]);
        q.insert((0, 2, 1), vec![(2, 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(route(0, 2, 3, &mut q, &mut rng), Some(vec![0, 1, 2]));
        assert_eq!(route(0, 2, 3, &mut q, &mut rng), None);
    }
}
