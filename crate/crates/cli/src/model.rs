use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use vlbcac::network::{CostCoefficients, FlavorCatalog, Topology, WeightCase, Weights};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CoeffSet {
    Small,
    Medium,
}

/// Per-call cost coefficients.
#[derive(Debug, Clone, Args)]
pub struct CoeffArgs {
    /// Calibrated coefficient set to start from.
    #[arg(long, value_enum)]
    pub coeffs: Option<CoeffSet>,
    /// CPU cost of a local call.
    #[arg(long)]
    pub alpha1: Option<f64>,
    /// CPU cost of a relayed flow unit.
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Memory cost of a local call.
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Memory cost of a relayed flow unit.
    #[arg(long)]
    pub beta2: Option<f64>,
}

impl CoeffArgs {
    pub fn given(&self) -> bool {
        self.coeffs.is_some()
            || self.alpha1.is_some()
            || self.alpha2.is_some()
            || self.beta1.is_some()
            || self.beta2.is_some()
    }

    pub fn resolve(&self) -> Result<CostCoefficients> {
        let mut c = match self.coeffs {
            Some(CoeffSet::Medium) => CostCoefficients::MEDIUM,
            _ => CostCoefficients::SMALL,
        };
        c.alpha1 = self.alpha1.unwrap_or(c.alpha1);
        c.alpha2 = self.alpha2.unwrap_or(c.alpha2);
        c.beta1 = self.beta1.unwrap_or(c.beta1);
        c.beta2 = self.beta2.unwrap_or(c.beta2);
        c.validate()?;
        for w in c.warnings() {
            tracing::warn!("{w}");
        }
        Ok(c)
    }
}

/// Network, objective and cost model.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Topology file: n, then n rows of 0/1. Defaults to the six-server ring.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    /// Weight case f1..f4 (resource-preserving to admission-dominant).
    #[arg(long)]
    pub case: Option<WeightCase>,
    /// Admission weight; overrides the case.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Resource weight; overrides the case.
    #[arg(long)]
    pub phi: Option<f64>,
    #[command(flatten)]
    pub costs: CoeffArgs,
    /// Flavor catalog CSV `name,memory_mb,vcpus,disk_gb`.
    #[arg(long)]
    pub flavors: Option<PathBuf>,
}

impl ModelArgs {
    pub fn topology(&self) -> Result<Option<Topology>> {
        self.topology
            .as_ref()
            .map(|p| Topology::load(p).with_context(|| format!("topology {}", p.display())))
            .transpose()
    }

    pub fn topology_or_default(&self) -> Result<Topology> {
        Ok(self.topology()?.unwrap_or_else(Topology::six_server_ring))
    }

    /// Weights if any weight flag was given.
    pub fn weights(&self) -> Result<Option<Weights>> {
        if self.case.is_none() && self.gamma.is_none() && self.phi.is_none() {
            return Ok(None);
        }
        let base = self.case.unwrap_or(WeightCase::F4).weights();
        let w = Weights::new(
            self.gamma.unwrap_or(base.gamma),
            self.phi.unwrap_or(base.phi),
        )?;
        Ok(Some(w))
    }

    pub fn weights_or_default(&self) -> Result<Weights> {
        Ok(self.weights()?.unwrap_or_else(|| WeightCase::F4.weights()))
    }

    pub fn catalog(&self) -> Result<Option<FlavorCatalog>> {
        self.flavors
            .as_ref()
            .map(|p| FlavorCatalog::load(p).with_context(|| format!("flavors {}", p.display())))
            .transpose()
    }

    pub fn catalog_or_default(&self) -> Result<FlavorCatalog> {
        Ok(self.catalog()?.unwrap_or_else(FlavorCatalog::standard))
    }
}

/// Comma-separated reals, one value or one per server.
pub fn per_server(text: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("{what}: `{s}` is not a number"))
        })
        .collect::<Result<Vec<_>>>()?;
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        k if k == n => Ok(values),
        k => anyhow::bail!("{what}: expected 1 or {n} values, found {k}"),
    }
}
