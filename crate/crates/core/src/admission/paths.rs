use serde::{Deserialize, Serialize};

use super::{AdmissionError, RoutingPlan};
use crate::network::Topology;

/// Flows at or below this are treated as absent while tracing.
const FLOW_EPS: f64 = 1e-9;
/// Leftover flow above this after tracing counts as a loop.
const RESIDUAL_TOL: f64 = 1e-6;

/// One simple origin-to-destination path and the calls it carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    pub origin: usize,
    pub dest: usize,
    /// Servers visited, origin first, destination last (0-based).
    pub servers: Vec<usize>,
    pub flow: f64,
}

/// Flow left on the trunks of a commodity once all paths are removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub origin: usize,
    pub dest: usize,
    pub flow: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PathDecomposition {
    pub paths: Vec<FlowPath>,
    pub residuals: Vec<Residual>,
}

impl PathDecomposition {
    pub fn commodity(&self, origin: usize, dest: usize) -> impl Iterator<Item = &FlowPath> {
        self.paths
            .iter()
            .filter(move |p| p.origin == origin && p.dest == dest)
    }
}

/// Greedy path decomposition that never fails: circulations are reported
/// in `residuals` rather than as an error.
pub fn trace_paths(plan: &RoutingPlan, topology: &Topology) -> PathDecomposition {
    let n = plan.n();
    let mut out = PathDecomposition::default();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut residual = vec![0.0; n * n];
            for r in plan.commodity(i, j) {
                if topology.linked(r.key.from, r.key.to) {
                    residual[r.key.from * n + r.key.to] += r.flow;
                }
            }
            if residual.iter().all(|&f| f <= FLOW_EPS) {
                continue;
            }
            while let Some(servers) = find_path(&residual, n, i, j) {
                let flow = servers
                    .windows(2)
                    .map(|w| residual[w[0] * n + w[1]])
                    .fold(f64::INFINITY, f64::min);
                for w in servers.windows(2) {
                    residual[w[0] * n + w[1]] -= flow;
                }
                out.paths.push(FlowPath {
                    origin: i,
                    dest: j,
                    servers,
                    flow,
                });
            }
            let left: f64 = residual.iter().filter(|&&f| f > FLOW_EPS).sum();
            if left > RESIDUAL_TOL {
                out.residuals.push(Residual {
                    origin: i,
                    dest: j,
                    flow: left,
                });
            }
        }
    }
    out
}

/// Split every commodity of `plan` into simple paths. Flow that does not
/// lie on an origin-to-destination path is a loop and is reported as an
/// error.
pub fn decompose_paths(
    plan: &RoutingPlan,
    topology: &Topology,
) -> Result<PathDecomposition, AdmissionError> {
    let d = trace_paths(plan, topology);
    if let Some(r) = d.residuals.first() {
        return Err(AdmissionError::LoopDetected {
            origin: r.origin + 1,
            dest: r.dest + 1,
            residual: r.flow,
        });
    }
    Ok(d)
}

/// Depth-first search for a simple path along positive residual arcs,
/// trying the widest arc first and breaking ties by server index.
fn find_path(residual: &[f64], n: usize, src: usize, dst: usize) -> Option<Vec<usize>> {
    let mut path = vec![src];
    let mut on_path = vec![false; n];
    on_path[src] = true;
    if extend(residual, n, dst, &mut path, &mut on_path) {
        Some(path)
    } else {
        None
    }
}

fn extend(
    residual: &[f64],
    n: usize,
    dst: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
) -> bool {
    let node = *path.last().expect("path starts at the origin");
    if node == dst {
        return true;
    }
    let mut next: Vec<usize> = (0..n)
        .filter(|&l| !on_path[l] && residual[node * n + l] > FLOW_EPS)
        .collect();
    next.sort_by(|&a, &b| {
        residual[node * n + b]
            .total_cmp(&residual[node * n + a])
            .then(a.cmp(&b))
    });
    for l in next {
        path.push(l);
        on_path[l] = true;
        if extend(residual, n, dst, path, on_path) {
            return true;
        }
        on_path[l] = false;
        path.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admission::{RelayFlow, RelayKey};
    use crate::network::{CostCoefficients, Matrix};

    fn plan(
        n: usize,
        calls: &[(usize, usize, f64)],
        relays: &[(usize, usize, usize, usize, f64)],
    ) -> RoutingPlan {
        let mut c = Matrix::zeros(n);
        for &(i, j, v) in calls {
            c.set(i, j, v);
        }
        let r = relays
            .iter()
            .map(|&(origin, dest, from, to, flow)| RelayFlow {
                key: RelayKey {
                    origin,
                    dest,
                    from,
                    to,
                },
                flow,
            })
            .collect();
        RoutingPlan::from_parts(c, r, &CostCoefficients::SMALL)
    }

    #[test]
    fn two_disjoint_paths() {
        let t = Topology::six_server_ring();
        let p = plan(
            6,
            &[(0, 5, 27.5)],
            &[
                (0, 5, 0, 2, 11.2),
                (0, 5, 2, 4, 11.2),
                (0, 5, 4, 5, 11.2),
                (0, 5, 0, 1, 16.3),
                (0, 5, 1, 3, 16.3),
                (0, 5, 3, 5, 16.3),
            ],
        );
        let d = decompose_paths(&p, &t).unwrap();
        let mut got: Vec<_> = d
            .commodity(0, 5)
            .map(|p| (p.servers.clone(), p.flow))
            .collect();
        got.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(got[0].0, vec![0, 1, 3, 5]);
        assert_eq!(got[1].0, vec![0, 2, 4, 5]);
        assert!((got[0].1 - 16.3).abs() < 1e-12);
    }

    #[test]
    fn zero_plan_is_empty() {
        let t = Topology::six_server_ring();
        let d = decompose_paths(&RoutingPlan::empty(6), &t).unwrap();
        assert!(d.paths.is_empty());
    }

    #[test]
    fn pure_cycle_is_a_loop() {
        let t = Topology::complete(3);
        let p = plan(
            3,
            &[],
            &[(0, 1, 0, 1, 2.0), (0, 1, 1, 2, 2.0), (0, 1, 2, 0, 2.0)],
        );
        // 0->1 is a path of 2; the remaining 1->2->0 arcs are a loop.
        assert!(matches!(
            decompose_paths(&p, &t),
            Err(AdmissionError::LoopDetected {
                origin: 1,
                dest: 2,
                ..
            })
        ));
    }

    #[test]
    fn dead_ends_are_backtracked() {
        let t = Topology::complete(4);
        // Widest arc 0->2 leads to a dead end; the real path is 0->1->3.
        let p = plan(
            4,
            &[(0, 3, 1.0)],
            &[(0, 3, 0, 2, 5.0), (0, 3, 0, 1, 1.0), (0, 3, 1, 3, 1.0)],
        );
        let d = trace_paths(&p, &t);
        assert_eq!(d.paths.len(), 1);
        assert_eq!(d.paths[0].servers, vec![0, 1, 3]);
        assert_eq!(d.residuals.len(), 1);
    }
}
