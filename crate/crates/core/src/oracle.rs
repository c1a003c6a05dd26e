//! Exact solver for the binary-routing admission model on tiny instances.
//!
//! Every assignment of the trunk-usage binaries is enumerated; with the
//! binaries fixed the model is an LP in calls and relay flows.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::admission::{self, AdmissionError, FlowBounds, FlowModel, RelayKey, RoutingPlan};
use crate::lp::{LpOutcome, Sense};
use crate::network::{
    CostCoefficients, Matrix, NetworkError, OfferedLoad, ResourceProfile, Topology, Weights,
    RATE_WINDOW_S,
};

pub const DEFAULT_BINARY_LIMIT: usize = 20;
pub const HARD_BINARY_LIMIT: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance has {binaries} routing binaries; limit is {limit}")]
    SizeLimit { binaries: usize, limit: usize },
    #[error(transparent)]
    Admission(#[from] AdmissionError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Self-contained oracle instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleInstance {
    pub topology: Topology,
    pub offered: OfferedLoad,
    pub resources: ResourceProfile,
}

impl OracleInstance {
    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("instance serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub total: f64,
    /// Routing arcs switched on in the best assignment.
    pub binaries: Vec<RelayKey>,
    pub witness: RoutingPlan,
    pub assignments: u64,
}

/// Arcs that need a binary: commodities with positive demand, arcs not
/// entering the origin, tail reachable from the origin.
pub fn free_binaries(topology: &Topology, offered: &OfferedLoad) -> Vec<RelayKey> {
    let n = topology.n();
    let arcs = topology.arcs();
    let mut out = Vec::new();
    for i in 0..n {
        let reach = topology.reachable(i);
        for j in 0..n {
            if i == j || offered.get(i, j) <= 0.0 {
                continue;
            }
            for &(k, l) in &arcs {
                if l != i && reach[k] && reach[l] {
                    out.push(RelayKey {
                        origin: i,
                        dest: j,
                        from: k,
                        to: l,
                    });
                }
            }
        }
    }
    out
}

fn solve_fixed(
    instance: &OracleInstance,
    open: &[RelayKey],
) -> Result<Option<RoutingPlan>, AdmissionError> {
    let offered = &instance.offered;
    let upper = |i: usize, j: usize| Some(offered.get(i, j));
    let lower = |_: usize, _: usize| 0.0;
    let allowed = |k: &RelayKey| open.binary_search(k).is_ok();
    let mut model = FlowModel::build(
        Sense::Maximize,
        &instance.topology,
        &instance.resources.coeffs,
        FlowBounds {
            call_upper: &upper,
            call_lower: &lower,
            caps: Some((&instance.resources.cpu, &instance.resources.mem)),
            allowed: Some(&allowed),
        },
    )?;
    for &c in &model.calls {
        model.lp.set_objective(c, 1.0);
    }
    Ok(match model.lp.solve()? {
        LpOutcome::Optimal(s) => Some(model.extract(&s.values)),
        _ => None,
    })
}

/// Enumerate every binary assignment and return the best admitted total.
/// Ties keep the earliest assignment in enumeration order.
pub fn solve_exact(instance: &OracleInstance, limit: usize) -> Result<ExactSolution, OracleError> {
    let limit = limit.min(HARD_BINARY_LIMIT);
    let n = instance.topology.n();
    if instance.offered.n() != n {
        return Err(NetworkError::Dimension {
            expected: n,
            got: instance.offered.n(),
        }
        .into());
    }
    instance.resources.validate(n)?;
    let mut free = free_binaries(&instance.topology, &instance.offered);
    free.sort();
    if free.len() > limit {
        return Err(OracleError::SizeLimit {
            binaries: free.len(),
            limit,
        });
    }
    let count = 1u64 << free.len();
    let best = (0..count)
        .into_par_iter()
        .map(|mask| {
            let open: Vec<RelayKey> = free
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, k)| *k)
                .collect();
            solve_fixed(instance, &open).map(|plan| plan.map(|p| (mask, p)))
        })
        .try_fold(
            || None,
            |acc: Option<(u64, RoutingPlan)>, item| item.map(|x| merge(acc, x)),
        )
        .try_reduce(|| None, |a, b| Ok(merge(a, b)))?;
    let (mask, witness) =
        best.ok_or(AdmissionError::Internal("infeasible for every assignment"))?;
    let binaries = free
        .iter()
        .enumerate()
        .filter(|(b, _)| mask >> b & 1 == 1)
        .map(|(_, k)| *k)
        .collect();
    Ok(ExactSolution {
        total: witness.total_admitted(),
        binaries,
        witness,
        assignments: count,
    })
}

fn merge(
    a: Option<(u64, RoutingPlan)>,
    b: Option<(u64, RoutingPlan)>,
) -> Option<(u64, RoutingPlan)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            let (ta, tb) = (a.1.total_admitted(), b.1.total_admitted());
            if tb > ta + 1e-9 || ((tb - ta).abs() <= 1e-9 && b.0 < a.0) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

/// Oracle optimum against the admission LP run for maximum admission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub instance: String,
    pub oracle: f64,
    pub heuristic: f64,
    pub gap: f64,
}

pub fn compare_with_heuristic(
    instance: &OracleInstance,
    limit: usize,
) -> Result<Comparison, OracleError> {
    let exact = solve_exact(instance, limit)?;
    let weights = Weights {
        gamma: 1.0,
        phi: 0.0,
    };
    let lp = admission::plan_admission(
        &instance.topology,
        &instance.offered,
        &instance.resources,
        &weights,
    )?;
    let heuristic = lp.exact.total_admitted();
    Ok(Comparison {
        instance: instance.hash(),
        oracle: exact.total,
        heuristic,
        gap: heuristic - exact.total,
    })
}

/// Random connected instance on `n` servers with at most `max_binaries`
/// routing binaries. With `ample` set every server has far more capacity
/// than any routing of the whole load needs.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    n: usize,
    max_binaries: usize,
    ample: bool,
) -> OracleInstance {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0] + 1, w[1] + 1)).collect();
    for k in 0..n {
        for l in k + 1..n {
            if rng.random_bool(0.3)
                && !edges
                    .iter()
                    .any(|&(a, b)| (a, b) == (k + 1, l + 1) || (a, b) == (l + 1, k + 1))
            {
                edges.push((k + 1, l + 1));
            }
        }
    }
    let topology = Topology::from_edges(n, &edges).expect("spanning path keeps it connected");
    let mut offered = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(0.6) {
                offered.set(i, j, rng.random_range(1..=60) as f64);
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .collect();
    pairs.shuffle(rng);
    for (i, j) in pairs {
        if free_binaries(&topology, &offered).len() <= max_binaries {
            break;
        }
        offered.set(i, j, 0.0);
    }
    let cap = |rng: &mut R| {
        if ample {
            1e6
        } else {
            rng.random_range(0.0..40.0)
        }
    };
    let cpu = (0..n).map(|_| cap(rng)).collect();
    let mem = (0..n).map(|_| cap(rng)).collect();
    OracleInstance {
        topology,
        offered,
        resources: ResourceProfile {
            cpu,
            mem,
            coeffs: CostCoefficients::SMALL.per_rate(RATE_WINDOW_S),
        },
    }
}

/// Seeded suite of `count` random instances; every fourth has ample
/// capacity.
pub fn random_suite(seed: u64, count: usize, n: usize, max_binaries: usize) -> Vec<OracleInstance> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| random_instance(&mut rng, n, max_binaries, i % 4 == 0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{CostCoefficients, Matrix};

    fn instance(t: Topology, pairs: &[(usize, usize, f64)], cap: f64) -> OracleInstance {
        let n = t.n();
        let mut offered = Matrix::zeros(n);
        for &(i, j, v) in pairs {
            offered.set(i, j, v);
        }
        OracleInstance {
            topology: t,
            offered,
            resources: ResourceProfile::uniform(n, cap, cap, CostCoefficients::SMALL),
        }
    }

    #[test]
    fn two_servers() {
        let inst = instance(
            Topology::line(2),
            &[(0, 1, 5.0), (0, 0, 3.0), (1, 1, 4.0)],
            100.0,
        );
        let s = solve_exact(&inst, DEFAULT_BINARY_LIMIT).unwrap();
        assert!((s.total - 12.0).abs() < 1e-9);
    }

    #[test]
    fn line_relays_through_middle() {
        let inst = instance(Topology::line(3), &[(0, 2, 10.0)], 100.0);
        let s = solve_exact(&inst, DEFAULT_BINARY_LIMIT).unwrap();
        assert!((s.total - 10.0).abs() < 1e-9);
        let c = compare_with_heuristic(&inst, DEFAULT_BINARY_LIMIT).unwrap();
        assert!(c.gap.abs() < 1e-9);
    }

    #[test]
    fn no_resources_admit_nothing() {
        let inst = instance(Topology::line(3), &[(0, 2, 10.0), (1, 1, 5.0)], 0.0);
        assert_eq!(solve_exact(&inst, DEFAULT_BINARY_LIMIT).unwrap().total, 0.0);
    }

    #[test]
    fn oversized_instance_is_refused() {
        let mut pairs = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    pairs.push((i, j, 1.0));
                }
            }
        }
        let inst = instance(Topology::complete(4), &pairs, 100.0);
        assert!(matches!(
            solve_exact(&inst, 30),
            Err(OracleError::SizeLimit { limit: 24, .. })
        ));
    }

    #[test]
    fn random_instances_respect_the_binary_budget() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let inst = random_instance(&mut rng, 3, 12, false);
            assert!(free_binaries(&inst.topology, &inst.offered).len() <= 12);
            assert!(inst.resources.validate(3).is_ok());
        }
    }

    #[test]
    fn hash_is_stable() {
        let a = instance(Topology::line(3), &[(0, 2, 10.0)], 100.0);
        assert_eq!(a.hash(), a.clone().hash());
        assert_eq!(a.hash().len(), 64);
    }
}
