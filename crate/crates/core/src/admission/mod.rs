//! Admission and routing: the per-slot LP over admitted calls, relay flows
//! and per-server usage, plus rounding of its solution into integer quotas.

mod duty;
mod paths;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, LpOutcome, Sense, VarId};
use crate::network::{
    CostCoefficients, Matrix, NetworkError, OfferedLoad, ResourceProfile, Topology, Weights,
};

pub use duty::{
    run_duty_cycle, Directive, DutyCycleConfig, DutyCycleState, PlanMode, ServerReport,
    STALE_AFTER_SLOTS,
};
pub use paths::{decompose_paths, trace_paths, FlowPath, PathDecomposition, Residual};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdmissionError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("admission LP reported {0}; the all-zero plan should always be feasible")]
    Internal(&'static str),
    #[error("residual circulation {residual} for commodity ({origin}, {dest})")]
    LoopDetected {
        origin: usize,
        dest: usize,
        residual: f64,
    },
    #[error("demand between disconnected servers: {0:?}")]
    Disconnected(Vec<(usize, usize)>),
    #[error("no server has ever reported")]
    NoReports,
    #[error("duty cycle budgets exceed the slot: {0}")]
    DutyCycle(String),
}

/// Relay flow `R_{kl}^{ij}`: calls of commodity (origin, dest) carried on
/// the trunk from `from` to `to`. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelayKey {
    pub origin: usize,
    pub dest: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayFlow {
    pub key: RelayKey,
    pub flow: f64,
}

/// Admitted calls, relay flows and planned usage for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingPlan {
    pub admitted: Matrix,
    /// Positive relay entries sorted by key.
    pub relays: Vec<RelayFlow>,
    pub cpu: Vec<f64>,
    pub mem: Vec<f64>,
}

impl RoutingPlan {
    pub fn empty(n: usize) -> Self {
        Self {
            admitted: Matrix::zeros(n),
            relays: Vec::new(),
            cpu: vec![0.0; n],
            mem: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.admitted.n()
    }

    pub fn total_admitted(&self) -> f64 {
        self.admitted.total()
    }

    pub fn relay(&self, key: RelayKey) -> f64 {
        self.relays
            .binary_search_by(|r| r.key.cmp(&key))
            .map(|i| self.relays[i].flow)
            .unwrap_or(0.0)
    }

    pub fn commodity(&self, origin: usize, dest: usize) -> impl Iterator<Item = &RelayFlow> {
        self.relays
            .iter()
            .filter(move |r| r.key.origin == origin && r.key.dest == dest)
    }

    /// Recompute `cpu`/`mem` from calls and relays under `coeffs`.
    pub fn recompute_usage(&mut self, coeffs: &CostCoefficients) {
        let (cpu, mem) = usage(&self.admitted, &self.relays, coeffs);
        self.cpu = cpu;
        self.mem = mem;
    }

    /// Build a plan from entries, dropping zero relays and sorting.
    pub fn from_parts(
        admitted: Matrix,
        mut relays: Vec<RelayFlow>,
        coeffs: &CostCoefficients,
    ) -> Self {
        relays.retain(|r| r.flow > 0.0);
        relays.sort_by_key(|r| r.key);
        let mut plan = Self {
            admitted,
            relays,
            cpu: Vec::new(),
            mem: Vec::new(),
        };
        plan.recompute_usage(coeffs);
        plan
    }

    /// Sum of two plans over the same network (base plus headroom).
    pub fn combined(&self, other: &RoutingPlan, coeffs: &CostCoefficients) -> Self {
        let n = self.n();
        let mut admitted = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                admitted.set(i, j, self.admitted.get(i, j) + other.admitted.get(i, j));
            }
        }
        let mut relays = self.relays.clone();
        for r in &other.relays {
            match relays.iter_mut().find(|x| x.key == r.key) {
                Some(x) => x.flow += r.flow,
                None => relays.push(*r),
            }
        }
        Self::from_parts(admitted, relays, coeffs)
    }

    /// Export as CSV rows `i,j,k,l,flow` with 1-based indices. Admitted
    /// calls appear with `k = l = 0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,k,l,flow\n");
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                let c = self.admitted.get(i, j);
                if c > 0.0 {
                    let _ = writeln!(out, "{},{},0,0,{}", i + 1, j + 1, c);
                }
            }
        }
        for r in &self.relays {
            let k = r.key;
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                k.origin + 1,
                k.dest + 1,
                k.from + 1,
                k.to + 1,
                r.flow
            );
        }
        out
    }

    pub fn to_export(&self) -> PlanExport {
        PlanExport {
            admitted: self.admitted.rows(),
            relays: self
                .relays
                .iter()
                .map(|r| {
                    [
                        r.key.origin as f64 + 1.0,
                        r.key.dest as f64 + 1.0,
                        r.key.from as f64 + 1.0,
                        r.key.to as f64 + 1.0,
                        r.flow,
                    ]
                })
                .collect(),
            cpu: self.cpu.clone(),
            mem: self.mem.clone(),
            total_admitted: self.total_admitted(),
        }
    }
}

/// JSON shape of a plan; relay rows are `[i, j, k, l, flow]`, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanExport {
    pub admitted: Vec<Vec<f64>>,
    pub relays: Vec<[f64; 5]>,
    pub cpu: Vec<f64>,
    pub mem: Vec<f64>,
    pub total_admitted: f64,
}

/// Per-server CPU and memory charged by a set of calls and relay flows.
/// A relay flow is charged `alpha2` at both of its endpoints.
pub fn usage(
    admitted: &Matrix,
    relays: &[RelayFlow],
    coeffs: &CostCoefficients,
) -> (Vec<f64>, Vec<f64>) {
    let n = admitted.n();
    let mut cpu: Vec<f64> = (0..n).map(|l| coeffs.alpha1 * admitted.get(l, l)).collect();
    let mut mem: Vec<f64> = (0..n).map(|l| coeffs.beta1 * admitted.get(l, l)).collect();
    for r in relays {
        for s in [r.key.from, r.key.to] {
            cpu[s] += coeffs.alpha2 * r.flow;
            mem[s] += coeffs.beta2 * r.flow;
        }
    }
    (cpu, mem)
}

/// The flow LP shared by admission planning, resource sizing and headroom
/// planning, with handles back to its variables.
#[derive(Debug, Clone)]
pub struct FlowModel {
    pub lp: LinearProgram<f64>,
    /// `C^{ij}` at index `i * n + j`.
    pub calls: Vec<VarId>,
    pub relays: Vec<(RelayKey, VarId)>,
    pub cpu: Vec<VarId>,
    pub mem: Vec<VarId>,
}

/// Bounds for the call and usage variables of a [`FlowModel`].
pub struct FlowBounds<'a> {
    /// Upper bound per `C^{ij}`, or `None` for unbounded.
    pub call_upper: &'a dyn Fn(usize, usize) -> Option<f64>,
    /// Lower bound per `C^{ij}`.
    pub call_lower: &'a dyn Fn(usize, usize) -> f64,
    /// Usage caps `(P, M)`; `None` leaves usage unbounded.
    pub caps: Option<(&'a [f64], &'a [f64])>,
    /// Relay entries for which this returns false are pinned to zero.
    pub allowed: Option<&'a dyn Fn(&RelayKey) -> bool>,
}

impl FlowModel {
    pub fn build(
        sense: Sense,
        topology: &Topology,
        coeffs: &CostCoefficients,
        bounds: FlowBounds<'_>,
    ) -> Result<Self, AdmissionError> {
        let n = topology.n();
        let mut lp = LinearProgram::new(sense);
        let mut calls = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let lo = (bounds.call_lower)(i, j);
                let hi = (bounds.call_upper)(i, j);
                calls.push(lp.add_var(format!("C[{},{}]", i + 1, j + 1), lo, hi, 0.0)?);
            }
        }
        let arcs = topology.arcs();
        let mut relays = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for &(k, l) in &arcs {
                    // Commodities never relay to themselves and never
                    // re-enter their origin.
                    let key = RelayKey {
                        origin: i,
                        dest: j,
                        from: k,
                        to: l,
                    };
                    let open = bounds.allowed.is_none_or(|f| f(&key));
                    let upper = if i == j || l == i || !open {
                        Some(0.0)
                    } else {
                        None
                    };
                    let name = format!("R[{},{}|{},{}]", i + 1, j + 1, k + 1, l + 1);
                    relays.push((key, lp.add_var(name, 0.0, upper, 0.0)?));
                }
            }
        }
        let mut cpu = Vec::with_capacity(n);
        let mut mem = Vec::with_capacity(n);
        for l in 0..n {
            let (p, m) = match bounds.caps {
                Some((p, m)) => (Some(p[l].max(0.0)), Some(m[l].max(0.0))),
                None => (None, None),
            };
            cpu.push(lp.add_var(format!("p[{}]", l + 1), 0.0, p, 0.0)?);
            mem.push(lp.add_var(format!("m[{}]", l + 1), 0.0, m, 0.0)?);
        }

        let per_commodity = arcs.len();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let base = (i * n + j) * per_commodity;
                let flows = &relays[base..base + per_commodity];
                for l in 0..n {
                    let mut terms = Vec::new();
                    if l == j {
                        terms.extend(
                            flows
                                .iter()
                                .filter(|(k, _)| k.to == l)
                                .map(|&(_, v)| (v, 1.0)),
                        );
                        terms.push((calls[i * n + j], -1.0));
                    } else if l == i {
                        terms.extend(
                            flows
                                .iter()
                                .filter(|(k, _)| k.from == l)
                                .map(|&(_, v)| (v, 1.0)),
                        );
                        terms.push((calls[i * n + j], -1.0));
                    } else {
                        for &(k, v) in flows {
                            if k.to == l {
                                terms.push((v, 1.0));
                            } else if k.from == l {
                                terms.push((v, -1.0));
                            }
                        }
                    }
                    lp.add_constraint(terms, crate::lp::Relation::Eq, 0.0)?;
                }
            }
        }
        for l in 0..n {
            for (c1, c2, usage_var) in [
                (coeffs.alpha1, coeffs.alpha2, cpu[l]),
                (coeffs.beta1, coeffs.beta2, mem[l]),
            ] {
                let mut terms = vec![(calls[l * n + l], c1)];
                for &(k, v) in &relays {
                    if k.origin != k.dest && (k.from == l || k.to == l) {
                        terms.push((v, c2));
                    }
                }
                terms.push((usage_var, -1.0));
                lp.add_constraint(terms, crate::lp::Relation::Le, 0.0)?;
            }
        }
        Ok(Self {
            lp,
            calls,
            relays,
            cpu,
            mem,
        })
    }

    pub fn n(&self) -> usize {
        self.cpu.len()
    }

    /// Read a plan out of a solution vector. Entries below `1e-9` are
    /// treated as zero.
    pub fn extract(&self, values: &[f64]) -> RoutingPlan {
        let n = self.n();
        let clean = |v: f64| if v.abs() < 1e-9 { 0.0 } else { v.max(0.0) };
        let mut admitted = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                admitted.set(i, j, clean(values[self.calls[i * n + j].0]));
            }
        }
        let relays = self
            .relays
            .iter()
            .map(|&(key, v)| RelayFlow {
                key,
                flow: clean(values[v.0]),
            })
            .filter(|r| r.flow > 0.0)
            .collect();
        RoutingPlan {
            admitted,
            relays,
            cpu: self.cpu.iter().map(|v| clean(values[v.0])).collect(),
            mem: self.mem.iter().map(|v| clean(values[v.0])).collect(),
        }
    }

    /// Inverse of [`extract`](Self::extract): the solution vector of a plan.
    pub fn assignment(&self, plan: &RoutingPlan) -> Vec<f64> {
        let n = self.n();
        let mut values = vec![0.0; self.lp.num_variables()];
        for i in 0..n {
            for j in 0..n {
                values[self.calls[i * n + j].0] = plan.admitted.get(i, j);
            }
        }
        for &(key, v) in &self.relays {
            values[v.0] = plan.relay(key);
        }
        for l in 0..n {
            values[self.cpu[l].0] = plan.cpu[l];
            values[self.mem[l].0] = plan.mem[l];
        }
        values
    }

    pub fn solve(&self) -> Result<RoutingPlan, AdmissionError> {
        match self.lp.solve()? {
            LpOutcome::Optimal(s) => Ok(self.extract(&s.values)),
            LpOutcome::Infeasible => Err(AdmissionError::Internal("infeasible")),
            LpOutcome::Unbounded => Err(AdmissionError::Internal("unbounded")),
        }
    }
}

fn check_inputs(
    topology: &Topology,
    offered: &OfferedLoad,
    resources: &ResourceProfile,
) -> Result<(), AdmissionError> {
    let n = topology.n();
    if offered.n() != n {
        return Err(NetworkError::Dimension {
            expected: n,
            got: offered.n(),
        }
        .into());
    }
    resources.validate(n)?;
    Ok(())
}

/// The admission LP: maximize
/// `gamma * sum C / sum C̄ - phi * (sum p / sum P + sum m / sum M)`
/// subject to flow conservation, loop exclusion, usage accounting and
/// resource caps.
pub fn build_admission_lp(
    topology: &Topology,
    offered: &OfferedLoad,
    resources: &ResourceProfile,
    weights: &Weights,
) -> Result<FlowModel, AdmissionError> {
    check_inputs(topology, offered, resources)?;
    weights.validate()?;
    let upper = |i: usize, j: usize| Some(offered.get(i, j));
    let lower = |_: usize, _: usize| 0.0;
    let mut model = FlowModel::build(
        Sense::Maximize,
        topology,
        &resources.coeffs,
        FlowBounds {
            call_upper: &upper,
            call_lower: &lower,
            caps: Some((&resources.cpu, &resources.mem)),
            allowed: None,
        },
    )?;
    let demand = offered.total();
    if demand > 0.0 {
        for &c in &model.calls {
            model.lp.set_objective(c, weights.gamma / demand);
        }
    }
    let total_p: f64 = resources.cpu.iter().sum();
    let total_m: f64 = resources.mem.iter().sum();
    for l in 0..topology.n() {
        if total_p > 0.0 {
            model.lp.set_objective(model.cpu[l], -weights.phi / total_p);
        }
        if total_m > 0.0 {
            model.lp.set_objective(model.mem[l], -weights.phi / total_m);
        }
    }
    Ok(model)
}

/// A solved slot: the LP's real-valued plan and the integer directive plan.
#[derive(Debug, Clone)]
pub struct AdmissionOutcome {
    pub exact: RoutingPlan,
    pub floored: RoutingPlan,
}

/// Solve the admission LP and floor its solution into integer quotas.
pub fn plan_admission(
    topology: &Topology,
    offered: &OfferedLoad,
    resources: &ResourceProfile,
    weights: &Weights,
) -> Result<AdmissionOutcome, AdmissionError> {
    check_inputs(topology, offered, resources)?;
    if offered.total() <= 0.0 {
        let empty = RoutingPlan::empty(topology.n());
        return Ok(AdmissionOutcome {
            exact: empty.clone(),
            floored: empty,
        });
    }
    let model = build_admission_lp(topology, offered, resources, weights)?;
    let exact = model.solve()?;
    let floored = floor_plan(
        &exact,
        topology,
        &resources.coeffs,
        Some((&resources.cpu, &resources.mem)),
    );
    Ok(AdmissionOutcome { exact, floored })
}

/// Round a plan down to integer quotas.
///
/// Each commodity is split into simple paths and every path is floored, so
/// the result still conserves flow exactly. Paths are then topped up by one
/// call, largest remainder first, while the commodity stays at or below
/// `floor(C)` and usage stays within `caps`. Local calls are floored
/// directly; circulations are dropped.
pub fn floor_plan(
    plan: &RoutingPlan,
    topology: &Topology,
    coeffs: &CostCoefficients,
    caps: Option<(&[f64], &[f64])>,
) -> RoutingPlan {
    let n = plan.n();
    let mut admitted = Matrix::zeros(n);
    for l in 0..n {
        admitted.set(l, l, plan.admitted.get(l, l).floor());
    }
    let decomposition = trace_paths(plan, topology);
    let mut chosen: Vec<(FlowPath, f64)> = decomposition
        .paths
        .iter()
        .map(|p| (p.clone(), p.flow.floor()))
        .collect();
    let mut relays = Vec::new();
    let (mut cpu, mut mem) = usage(&admitted, &relays, coeffs);
    for (p, q) in &chosen {
        charge(&p.servers, *q, coeffs, &mut cpu, &mut mem);
    }

    let fits = |cpu: &[f64], mem: &[f64]| match caps {
        Some((pc, mc)) => (0..n).all(|l| cpu[l] <= pc[l] + 1e-9 && mem[l] <= mc[l] + 1e-9),
        None => true,
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let target = plan.admitted.get(i, j).floor();
            let mut have: f64 = chosen
                .iter()
                .filter(|(p, _)| p.origin == i && p.dest == j)
                .map(|(_, q)| q)
                .sum();
            let mut order: Vec<usize> = (0..chosen.len())
                .filter(|&k| chosen[k].0.origin == i && chosen[k].0.dest == j)
                .collect();
            order.sort_by(|&a, &b| {
                let fa = chosen[a].0.flow - chosen[a].1;
                let fb = chosen[b].0.flow - chosen[b].1;
                fb.total_cmp(&fa).then(a.cmp(&b))
            });
            for k in order {
                if have + 1.0 > target + 1e-9 {
                    break;
                }
                let servers = chosen[k].0.servers.clone();
                let (mut c2, mut m2) = (cpu.clone(), mem.clone());
                charge(&servers, 1.0, coeffs, &mut c2, &mut m2);
                if fits(&c2, &m2) {
                    chosen[k].1 += 1.0;
                    have += 1.0;
                    cpu = c2;
                    mem = m2;
                }
            }
        }
    }

    for (p, q) in &chosen {
        if *q <= 0.0 {
            continue;
        }
        admitted.set(p.origin, p.dest, admitted.get(p.origin, p.dest) + q);
        for w in p.servers.windows(2) {
            relays.push(RelayFlow {
                key: RelayKey {
                    origin: p.origin,
                    dest: p.dest,
                    from: w[0],
                    to: w[1],
                },
                flow: *q,
            });
        }
    }
    let mut merged: Vec<RelayFlow> = Vec::new();
    relays.sort_by_key(|r| r.key);
    for r in relays {
        match merged.last_mut() {
            Some(last) if last.key == r.key => last.flow += r.flow,
            _ => merged.push(r),
        }
    }
    RoutingPlan::from_parts(admitted, merged, coeffs)
}

fn charge(servers: &[usize], q: f64, coeffs: &CostCoefficients, cpu: &mut [f64], mem: &mut [f64]) {
    for w in servers.windows(2) {
        for s in [w[0], w[1]] {
            cpu[s] += coeffs.alpha2 * q;
            mem[s] += coeffs.beta2 * q;
        }
    }
}

/// Minimum usage needed to admit exactly `demand`, with no resource caps.
/// Returns the plan whose `cpu`/`mem` are the required resources.
pub fn required_resources_plan(
    topology: &Topology,
    demand: &OfferedLoad,
    coeffs: &CostCoefficients,
    normalization: (f64, f64),
) -> Result<RoutingPlan, AdmissionError> {
    let n = topology.n();
    if demand.n() != n {
        return Err(NetworkError::Dimension {
            expected: n,
            got: demand.n(),
        }
        .into());
    }
    coeffs.validate()?;
    let mut cut = Vec::new();
    for i in 0..n {
        let reach = topology.reachable(i);
        for j in 0..n {
            if demand.get(i, j) > 0.0 && !reach[j] {
                cut.push((i + 1, j + 1));
            }
        }
    }
    if !cut.is_empty() {
        return Err(AdmissionError::Disconnected(cut));
    }
    if demand.total() <= 0.0 {
        return Ok(RoutingPlan::empty(n));
    }
    let fixed = |i: usize, j: usize| demand.get(i, j);
    let fixed_upper = |i: usize, j: usize| Some(demand.get(i, j));
    let mut model = FlowModel::build(
        Sense::Minimize,
        topology,
        coeffs,
        FlowBounds {
            call_upper: &fixed_upper,
            call_lower: &fixed,
            caps: None,
            allowed: None,
        },
    )?;
    let (np, nm) = normalization;
    for l in 0..n {
        model
            .lp
            .set_objective(model.cpu[l], 1.0 / np.max(f64::MIN_POSITIVE));
        model
            .lp
            .set_objective(model.mem[l], 1.0 / nm.max(f64::MIN_POSITIVE));
    }
    model.solve()
}

/// Extra calls admissible on top of `base` within the capacities `caps`:
/// maximize the sum of added calls. Returns only the added part.
pub fn headroom(
    topology: &Topology,
    base: &RoutingPlan,
    coeffs: &CostCoefficients,
    caps: (&[f64], &[f64]),
) -> Result<RoutingPlan, AdmissionError> {
    let n = topology.n();
    let (base_cpu, base_mem) = usage(&base.admitted, &base.relays, coeffs);
    let tol = 1e-6;
    if (0..n).any(|l| base_cpu[l] > caps.0[l] + tol || base_mem[l] > caps.1[l] + tol) {
        return Err(AdmissionError::Internal(
            "a base plan above the selected capacity",
        ));
    }
    let free_p: Vec<f64> = (0..n).map(|l| (caps.0[l] - base_cpu[l]).max(0.0)).collect();
    let free_m: Vec<f64> = (0..n).map(|l| (caps.1[l] - base_mem[l]).max(0.0)).collect();
    let upper = |_: usize, _: usize| None;
    let lower = |_: usize, _: usize| 0.0;
    let mut model = FlowModel::build(
        Sense::Maximize,
        topology,
        coeffs,
        FlowBounds {
            call_upper: &upper,
            call_lower: &lower,
            caps: Some((&free_p, &free_m)),
            allowed: None,
        },
    )?;
    for &c in &model.calls {
        model.lp.set_objective(c, 1.0);
    }
    model.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{load_scenario, WeightCase, RATE_WINDOW_S};

    fn single(c: f64, coeffs: CostCoefficients) -> AdmissionOutcome {
        let t = Topology::validate(&[vec![0]]).unwrap();
        let load = Matrix::from_rows(vec![vec![c]]).unwrap();
        let res = ResourceProfile::uniform(1, 100.0, 100.0, coeffs);
        plan_admission(
            &t,
            &load,
            &res,
            &Weights {
                gamma: 1.0,
                phi: 0.05,
            },
        )
        .unwrap()
    }

    #[test]
    fn single_server_admits_everything_when_resources_suffice() {
        let out = single(10.0, CostCoefficients::SMALL);
        assert!((out.exact.total_admitted() - 10.0).abs() < 1e-9);
        assert_eq!(out.floored.total_admitted(), 10.0);
    }

    #[test]
    fn single_server_is_cpu_bound() {
        let out = single(2000.0, CostCoefficients::SMALL);
        assert!((out.exact.total_admitted() - 100.0 / 0.07841).abs() < 1e-6);
        assert_eq!(out.floored.total_admitted(), 1275.0);
    }

    #[test]
    fn line_relay_carries_everything() {
        let t = Topology::line(3);
        let mut load = Matrix::zeros(3);
        load.set(0, 2, 10.0);
        let res = ResourceProfile::uniform(3, 100.0, 100.0, CostCoefficients::SMALL);
        let out = plan_admission(
            &t,
            &load,
            &res,
            &Weights {
                gamma: 1.0,
                phi: 0.05,
            },
        )
        .unwrap();
        let p = &out.exact;
        assert!((p.admitted.get(0, 2) - 10.0).abs() < 1e-9);
        let k = |f, t| RelayKey {
            origin: 0,
            dest: 2,
            from: f,
            to: t,
        };
        assert!((p.relay(k(0, 1)) - 10.0).abs() < 1e-9);
        assert!((p.relay(k(1, 2)) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn zero_load_gives_empty_plan() {
        let t = Topology::six_server_ring();
        let res = ResourceProfile::uniform(6, 100.0, 100.0, CostCoefficients::SMALL);
        let out = plan_admission(
            &t,
            &Matrix::zeros(6),
            &res,
            &Weights {
                gamma: 1.0,
                phi: 0.05,
            },
        )
        .unwrap();
        assert_eq!(out.floored, RoutingPlan::empty(6));
    }

    #[test]
    fn measurement_window_decides_whether_scenario3_overloads() {
        let t = Topology::six_server_ring();
        let load = load_scenario("scenario3").unwrap();
        let w = WeightCase::F4.weights();
        // Costs applied per call/s without the window: everything fits.
        let raw = ResourceProfile::uniform(6, 100.0, 100.0, CostCoefficients::SMALL);
        let all = plan_admission(&t, &load, &raw, &w)
            .unwrap()
            .exact
            .total_admitted();
        assert!((all - 3300.0).abs() < 1e-6, "{all}");
        let windowed = ResourceProfile::uniform(
            6,
            100.0,
            100.0,
            CostCoefficients::SMALL.per_rate(RATE_WINDOW_S),
        );
        let some = plan_admission(&t, &load, &windowed, &w)
            .unwrap()
            .exact
            .total_admitted();
        assert!(some < 0.9 * 3300.0, "{some}");
    }

    #[test]
    fn csv_export_is_one_based() {
        let out = single(10.0, CostCoefficients::SMALL);
        assert!(out.floored.to_csv().contains("1,1,0,0,10"));
    }
}
