//! Shared fixtures and independent checks for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vlbcac::admission::{trace_paths, usage, RoutingPlan};
use vlbcac::network::{
    CostCoefficients, Matrix, OfferedLoad, ResourceProfile, Topology, WeightCase, Weights,
    RATE_WINDOW_S,
};

pub const TOL: f64 = 1e-6;

/// Admission problem on a random connected mesh.
#[derive(Debug, Clone)]
pub struct Instance {
    pub topology: Topology,
    pub offered: OfferedLoad,
    pub resources: ResourceProfile,
    pub weights: Weights,
}

/// Deterministic random instance with 3 to 6 servers and a positive
/// resource weight.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=6);
    let mut edges = Vec::new();
    for l in 1..n {
        // Random tree, then extra trunks.
        edges.push((rng.random_range(0..l) + 1, l + 1));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.35) && !edges.contains(&(a + 1, b + 1)) {
                edges.push((a + 1, b + 1));
            }
        }
    }
    let topology = Topology::from_edges(n, &edges).expect("tree plus edges is valid");
    let mut offered = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(0.7) {
                let v: f64 = rng.random_range(0.0..80.0);
                offered.set(i, j, if rng.random_bool(0.5) { v.round() } else { v });
            }
        }
    }
    let cpu = (0..n).map(|_| rng.random_range(10.0..150.0)).collect();
    let mem = (0..n).map(|_| rng.random_range(10.0..150.0)).collect();
    let case = WeightCase::ALL[rng.random_range(0..4)];
    Instance {
        topology,
        offered,
        resources: ResourceProfile {
            cpu,
            mem,
            coeffs: CostCoefficients::SMALL.per_rate(RATE_WINDOW_S),
        },
        weights: case.weights(),
    }
}

/// Every way `plan` breaks flow conservation, origin and destination
/// coupling, demand bounds, topology or resource caps.
pub fn plan_violations(inst: &Instance, plan: &RoutingPlan, tol: f64) -> Vec<String> {
    let n = inst.topology.n();
    let mut bad = Vec::new();
    let mut out_flow = vec![0.0; n * n * n];
    let mut in_flow = vec![0.0; n * n * n];
    let at = |i: usize, j: usize, l: usize| (i * n + j) * n + l;
    for r in &plan.relays {
        let k = r.key;
        if r.flow < -tol {
            bad.push(format!("negative relay {k:?}"));
        }
        if !inst.topology.linked(k.from, k.to) {
            bad.push(format!("relay on a missing trunk {k:?}"));
        }
        if k.origin == k.dest {
            bad.push(format!("relay for a local commodity {k:?}"));
        }
        out_flow[at(k.origin, k.dest, k.from)] += r.flow;
        in_flow[at(k.origin, k.dest, k.to)] += r.flow;
    }
    for i in 0..n {
        for j in 0..n {
            let c = plan.admitted.get(i, j);
            if c < -tol || c > inst.offered.get(i, j) + tol {
                bad.push(format!(
                    "admitted {c} outside [0, {}] for ({i},{j})",
                    inst.offered.get(i, j)
                ));
            }
            if i == j {
                continue;
            }
            for l in 0..n {
                let (o, x) = (out_flow[at(i, j, l)], in_flow[at(i, j, l)]);
                let ok = if l == i {
                    (o - c).abs() <= tol && x.abs() <= tol
                } else if l == j {
                    (x - c).abs() <= tol && o.abs() <= tol
                } else {
                    (o - x).abs() <= tol
                };
                if !ok {
                    bad.push(format!(
                        "commodity ({i},{j}) at server {l}: in {x}, out {o}, admitted {c}"
                    ));
                }
            }
        }
    }
    let (cpu, mem) = usage(&plan.admitted, &plan.relays, &inst.resources.coeffs);
    for l in 0..n {
        if cpu[l] > inst.resources.cpu[l] + tol || mem[l] > inst.resources.mem[l] + tol {
            bad.push(format!(
                "server {l} uses ({}, {}) of ({}, {})",
                cpu[l], mem[l], inst.resources.cpu[l], inst.resources.mem[l]
            ));
        }
    }
    bad
}

/// Flow that lies on no simple origin-to-destination path.
pub fn loop_flow(plan: &RoutingPlan, topology: &Topology) -> f64 {
    trace_paths(plan, topology)
        .residuals
        .iter()
        .map(|r| r.flow)
        .sum()
}

pub fn is_integral(plan: &RoutingPlan) -> bool {
    plan.admitted
        .values()
        .iter()
        .chain(plan.relays.iter().map(|r| &r.flow))
        .all(|v| v.fract() == 0.0)
}

fn local_socket() -> std::net::UdpSocket {
    std::net::UdpSocket::bind("127.0.0.1:0").expect("loopback socket")
}

/// Six agents and a controller over loopback UDP for `slots` slots. Every
/// directive sent and applied must equal the one planned directly from the
/// same inputs.
pub fn service_equivalence(slots: u64) -> Result<(), String> {
    use std::time::Duration;
    use vlbcac::admission::{plan_admission, Directive, DutyCycleConfig};
    use vlbcac::network::FlavorCatalog;
    use vlbcac::protocol::{controller_serve_on, mock_agent_on, AgentConfig, ServeConfig};

    let topology = Topology::six_server_ring();
    let n = topology.n();
    let catalog = FlavorCatalog::standard();
    // Per-server rows of offered counts, changing every slot.
    let trace = |l: usize, s: usize| -> Vec<u64> {
        (0..n)
            .map(|j| (7 * l + 3 * j + 11 * s) as u64 % 40 + 5)
            .collect()
    };
    let controller = local_socket();
    let agent_sockets: Vec<_> = (0..n).map(|_| local_socket()).collect();
    let coeffs = CostCoefficients::SMALL;
    let weights = WeightCase::F4.weights();
    let config = ServeConfig {
        bind: controller.local_addr().map_err(|e| e.to_string())?,
        agents: agent_sockets
            .iter()
            .map(|s| s.local_addr().expect("bound"))
            .collect(),
        topology: topology.clone(),
        duty: DutyCycleConfig::with_tau(3.0),
        weights,
        coeffs,
        time_scale: 0.01,
        max_slots: Some(slots),
    };
    let agents: Vec<_> = agent_sockets
        .into_iter()
        .enumerate()
        .map(|(l, socket)| {
            let cfg = AgentConfig {
                server: l,
                n,
                bind: socket.local_addr().expect("bound"),
                controller: config.bind,
                trace: (0..slots as usize).map(|s| trace(l, s)).collect(),
                catalog: catalog.clone(),
                flavor: 0,
                directive_timeout: Duration::from_secs(5),
                max_slots: Some(slots),
            };
            std::thread::spawn(move || mock_agent_on(socket, &cfg))
        })
        .collect();
    let outcome = controller_serve_on(controller, &config).map_err(|e| e.to_string())?;
    let agents = agents
        .into_iter()
        .map(|h| h.join().expect("agent thread").map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;

    let (cpu, mem) = catalog.get(0).capacity_units();
    if outcome.slots.len() != slots as usize {
        return Err(format!("{} slots served of {slots}", outcome.slots.len()));
    }
    for rec in &outcome.slots {
        if rec.reports.len() != n {
            return Err(format!(
                "slot {}: {} reports gathered",
                rec.slot,
                rec.reports.len()
            ));
        }
        let mut offered = Matrix::zeros(n);
        for l in 0..n {
            for (j, &v) in trace(l, rec.slot as usize).iter().enumerate() {
                offered.set(l, j, v as f64);
            }
        }
        let resources = ResourceProfile::uniform(n, cpu, mem, coeffs);
        let plan = plan_admission(&topology, &offered, &resources, &weights)
            .map_err(|e| e.to_string())?
            .floored;
        let expected: Vec<Directive> = (0..n)
            .map(|l| Directive::from_plan(rec.slot, l, &plan, None))
            .collect();
        if rec.directives != expected {
            return Err(format!(
                "slot {}: controller directives differ from the library plan",
                rec.slot
            ));
        }
        for (l, a) in agents.iter().enumerate() {
            if a.applied.get(rec.slot as usize) != Some(&expected[l]) {
                return Err(format!(
                    "slot {}: agent {} applied a different directive",
                    rec.slot,
                    l + 1
                ));
            }
        }
    }
    if agents.iter().any(|a| a.state.admitted_total == 0) {
        return Err("an agent admitted nothing".into());
    }
    Ok(())
}

/// One-step errors of a filter fed `signal`.
pub fn nlms_errors(mut f: vlbcac::NlmsPredictor, signal: &[f64]) -> Vec<f64> {
    signal
        .iter()
        .map(|&x| {
            let e = x - f.predict_next();
            f.update(x).expect("signal is nonnegative");
            e
        })
        .collect()
}

/// Stationary AR(1) around `mean` with coefficient `a`, floored at zero.
pub fn ar1(len: usize, mean: f64, a: f64, sigma: f64, seed: u64) -> Vec<f64> {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("positive sigma");
    let mut x = mean;
    (0..len)
        .map(|_| {
            x = mean + a * (x - mean) + noise.sample(&mut rng);
            x.max(0.0)
        })
        .collect()
}
