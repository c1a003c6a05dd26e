//! Proactive autoscaling: forecast the next slot, size the servers for it,
//! pick flavors, and hand out the spare capacity as extra admission quota.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admission::{self, floor_plan, AdmissionError, RoutingPlan};
use crate::network::{
    CostCoefficients, FlavorCatalog, Matrix, NetworkError, OfferedLoad, ResourceProfile, Topology,
    WeightCase, Weights,
};
use crate::predictor::{PredictorBank, PredictorError, DEFAULT_ORDER, DEFAULT_STEP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutoscaleError {
    #[error(transparent)]
    Admission(#[from] AdmissionError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ScalingAction {
    Up,
    Down,
    Nop,
}

impl fmt::Display for ScalingAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Up => "UP",
            Self::Down => "DOWN",
            Self::Nop => "NOP",
        })
    }
}

/// Whether each server gets its own flavor or all servers share the
/// largest one selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlavorMode {
    #[default]
    PerServer,
    Uniform,
}

/// Flavor index chosen per server, and whether even the largest flavor
/// falls short.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlavorSelection {
    pub flavors: Vec<usize>,
    pub shortfall: Vec<bool>,
}

impl FlavorSelection {
    pub fn any_shortfall(&self) -> bool {
        self.shortfall.iter().any(|&s| s)
    }
}

/// Minimum resources to admit the whole forecast, with the routing that
/// achieves them. `normalization` holds the totals `(sum P, sum M)` that
/// weight CPU against memory in the objective.
pub fn required_resources(
    topology: &Topology,
    forecast: &OfferedLoad,
    coeffs: &CostCoefficients,
    normalization: (f64, f64),
) -> Result<RoutingPlan, AdmissionError> {
    admission::required_resources_plan(topology, forecast, coeffs, normalization)
}

/// For every server, the first catalog flavor whose CPU and memory both
/// cover the requirement; the largest flavor with a shortfall flag if none
/// does.
pub fn select_flavors(catalog: &FlavorCatalog, cpu: &[f64], mem: &[f64]) -> FlavorSelection {
    let mut flavors = Vec::with_capacity(cpu.len());
    let mut shortfall = Vec::with_capacity(cpu.len());
    for (&p, &m) in cpu.iter().zip(mem) {
        let hit = catalog.flavors().iter().position(|f| {
            let (pf, mf) = f.capacity_units();
            pf >= p && mf >= m
        });
        flavors.push(hit.unwrap_or(catalog.largest()));
        shortfall.push(hit.is_none());
    }
    FlavorSelection { flavors, shortfall }
}

/// Capacities `(P_f, M_f)` of the selected flavors.
pub fn capacities(catalog: &FlavorCatalog, flavors: &[usize]) -> (Vec<f64>, Vec<f64>) {
    flavors
        .iter()
        .map(|&f| catalog.get(f).capacity_units())
        .unzip()
}

/// Extra calls admissible on top of `base` under the selected flavors.
pub fn headroom_plan(
    topology: &Topology,
    base: &RoutingPlan,
    catalog: &FlavorCatalog,
    flavors: &[usize],
    coeffs: &CostCoefficients,
) -> Result<RoutingPlan, AdmissionError> {
    let (p, m) = capacities(catalog, flavors);
    admission::headroom(topology, base, coeffs, (&p, &m))
}

/// Compare consecutive selections by catalog order.
pub fn scaling_actions(previous: &[usize], selected: &[usize]) -> Vec<ScalingAction> {
    previous
        .iter()
        .zip(selected)
        .map(|(a, b)| match b.cmp(a) {
            std::cmp::Ordering::Equal => ScalingAction::Nop,
            std::cmp::Ordering::Greater => ScalingAction::Up,
            std::cmp::Ordering::Less => ScalingAction::Down,
        })
        .collect()
}

/// Name-based variant of [`scaling_actions`].
pub fn scaling_actions_by_name(
    catalog: &FlavorCatalog,
    previous: &[&str],
    selected: &[&str],
) -> Result<Vec<ScalingAction>, NetworkError> {
    let idx = |names: &[&str]| {
        names
            .iter()
            .map(|n| catalog.index_of(n))
            .collect::<Result<Vec<_>, _>>()
    };
    Ok(scaling_actions(&idx(previous)?, &idx(selected)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoscaleConfig {
    pub mode: FlavorMode,
    /// Refuse a scale-down unless the load just observed also fits the
    /// smaller flavor.
    pub down_guard: bool,
    pub order: usize,
    pub step: f64,
    /// Weights for the fallback admission LP used when even the largest
    /// flavor cannot carry the forecast.
    pub shortfall_weights: Weights,
}

impl Default for AutoscaleConfig {
    fn default() -> Self {
        Self {
            mode: FlavorMode::PerServer,
            down_guard: true,
            order: DEFAULT_ORDER,
            step: DEFAULT_STEP,
            shortfall_weights: WeightCase::F4.weights(),
        }
    }
}

/// Everything decided for the next slot.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoscaleDecision {
    pub forecast: Matrix,
    pub required_cpu: Vec<f64>,
    pub required_mem: Vec<f64>,
    pub selection: FlavorSelection,
    pub actions: Vec<ScalingAction>,
    pub base: RoutingPlan,
    pub headroom: RoutingPlan,
    /// Floored base plus headroom; this is the directive.
    pub directive: RoutingPlan,
}

impl AutoscaleDecision {
    /// Decision log rows `slot,server,flavor,action,p_star,m_star,admitted`
    /// (1-based servers, no header).
    pub fn log_rows(&self, slot: u64, catalog: &FlavorCatalog) -> String {
        let mut out = String::new();
        for l in 0..self.selection.flavors.len() {
            let admitted: f64 = self.directive.admitted.row(l).iter().sum();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                slot,
                l + 1,
                catalog.get(self.selection.flavors[l]).name,
                self.actions[l],
                self.required_cpu[l],
                self.required_mem[l],
                admitted
            );
        }
        out
    }
}

pub const DECISION_LOG_HEADER: &str = "slot,server,flavor,action,p_star,m_star,admitted";

/// Stateful pipeline: predictors plus the flavors currently in force.
#[derive(Debug, Clone)]
pub struct Autoscaler {
    pub config: AutoscaleConfig,
    pub catalog: FlavorCatalog,
    pub coeffs: CostCoefficients,
    predictors: PredictorBank,
    flavors: Vec<usize>,
}

impl Autoscaler {
    pub fn new(
        n: usize,
        catalog: FlavorCatalog,
        coeffs: CostCoefficients,
        initial: Vec<usize>,
        config: AutoscaleConfig,
    ) -> Result<Self, AutoscaleError> {
        if initial.len() != n {
            return Err(NetworkError::Dimension {
                expected: n,
                got: initial.len(),
            }
            .into());
        }
        if let Some(&bad) = initial.iter().find(|&&f| f >= catalog.len()) {
            return Err(NetworkError::UnknownFlavor(format!("#{bad}")).into());
        }
        Ok(Self {
            predictors: PredictorBank::new(n, config.order, config.step)?,
            config,
            catalog,
            coeffs,
            flavors: initial,
        })
    }

    pub fn flavors(&self) -> &[usize] {
        &self.flavors
    }

    pub fn predictors(&self) -> &PredictorBank {
        &self.predictors
    }

    /// Run the pipeline on the load observed this slot. Servers flagged in
    /// `down` get no demand and no links.
    pub fn step(
        &mut self,
        topology: &Topology,
        observed: &OfferedLoad,
        down: &[bool],
    ) -> Result<AutoscaleDecision, AutoscaleError> {
        let n = topology.n();
        let view = topology.without(down);
        let mask = |m: &Matrix| {
            let mut out = m.clone();
            for i in 0..n {
                for j in 0..n {
                    if down[i] || down[j] {
                        out.set(i, j, 0.0);
                    }
                }
            }
            out
        };
        let forecast = mask(&self.predictors.forecast_matrix(observed)?);
        let (cap_p, cap_m) = capacities(&self.catalog, &self.flavors);
        let norm = (cap_p.iter().sum(), cap_m.iter().sum());
        let base = required_resources(&view, &forecast, &self.coeffs, norm)?;
        let (required_cpu, required_mem) = (base.cpu.clone(), base.mem.clone());
        let mut selection = select_flavors(&self.catalog, &required_cpu, &required_mem);

        if self.config.down_guard
            && selection
                .flavors
                .iter()
                .zip(&self.flavors)
                .any(|(s, c)| s < c)
        {
            let now = required_resources(&view, &mask(observed), &self.coeffs, norm)?;
            let current = select_flavors(&self.catalog, &now.cpu, &now.mem);
            for l in 0..n {
                if selection.flavors[l] < self.flavors[l] {
                    selection.flavors[l] = current.flavors[l]
                        .max(selection.flavors[l])
                        .min(self.flavors[l]);
                }
            }
        }
        if self.config.mode == FlavorMode::Uniform {
            let top = selection.flavors.iter().copied().max().unwrap_or(0);
            selection.flavors.iter_mut().for_each(|f| *f = top);
        }
        let actions = scaling_actions(&self.flavors, &selection.flavors);
        let (sel_p, sel_m) = capacities(&self.catalog, &selection.flavors);
        let sel_p: Vec<f64> = (0..n)
            .map(|l| if down[l] { 0.0 } else { sel_p[l] })
            .collect();
        let sel_m: Vec<f64> = (0..n)
            .map(|l| if down[l] { 0.0 } else { sel_m[l] })
            .collect();

        let (base, headroom, combined) = if selection.any_shortfall() {
            let resources = ResourceProfile {
                cpu: sel_p.clone(),
                mem: sel_m.clone(),
                coeffs: self.coeffs,
            };
            let out = admission::plan_admission(
                &view,
                &forecast,
                &resources,
                &self.config.shortfall_weights,
            )?;
            (out.exact, RoutingPlan::empty(n), out.floored)
        } else {
            let extra = admission::headroom(&view, &base, &self.coeffs, (&sel_p, &sel_m))?;
            let sum = base.combined(&extra, &self.coeffs);
            let floored = floor_plan(&sum, &view, &self.coeffs, Some((&sel_p, &sel_m)));
            (base, extra, floored)
        };
        self.flavors = selection.flavors.clone();
        Ok(AutoscaleDecision {
            forecast,
            required_cpu,
            required_mem,
            selection,
            actions,
            base,
            headroom,
            directive: combined,
        })
    }
}
