use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use vlbcac::calibration::{
    fit_alpha, fit_beta, generate_samples, parse_samples_csv, samples_to_csv,
};
use vlbcac::network::Matrix;
use vlbcac::oracle::{
    compare_with_heuristic, random_suite, Comparison, OracleInstance, DEFAULT_BINARY_LIMIT,
};
use vlbcac::predictor::{
    parse_trace_csv, replay, trace_to_csv, PredictorBank, DEFAULT_ORDER, DEFAULT_STEP,
};
use vlbcac::Sample;

use crate::manifest::{pretty, read_json, OutputArgs, Sink};
use crate::model::CoeffArgs;

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Measurements CSV `c_local,r_out,cpu,mem`.
    #[arg(
        long,
        required_unless_present = "synthetic",
        conflicts_with = "synthetic"
    )]
    pub samples: Option<PathBuf>,
    /// Generate this many synthetic trials from the given coefficients.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Half-width of uniform noise added to synthetic usage.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[command(flatten)]
    pub truth: CoeffArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateRun {
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Calibration {
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    cpu_residual: f64,
    mem_residual: f64,
    samples: usize,
}

pub fn calibrate(args: CalibrateArgs) -> Result<()> {
    let samples = match (&args.samples, args.synthetic) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_samples_csv(&text)?
        }
        (None, Some(trials)) => {
            let c = args.truth.resolve()?;
            anyhow::ensure!(
                args.noise.is_finite() && args.noise >= 0.0,
                "--noise must be nonnegative"
            );
            generate_samples(
                (c.alpha1, c.alpha2),
                (c.beta1, c.beta2),
                trials,
                args.noise,
                args.seed,
            )
        }
        (None, None) => bail!("give --samples or --synthetic"),
    };
    execute_calibrate(
        CalibrateRun { samples },
        args.seed,
        Sink::new(&args.output)?,
    )
}

pub fn execute_calibrate(run: CalibrateRun, seed: u64, mut sink: Sink) -> Result<()> {
    let a = fit_alpha(&run.samples)?;
    let b = fit_beta(&run.samples)?;
    let c = Calibration {
        alpha1: a.local,
        alpha2: a.relayed,
        beta1: b.local,
        beta2: b.relayed,
        cpu_residual: a.residual,
        mem_residual: b.residual,
        samples: run.samples.len(),
    };
    eprintln!(
        "alpha = ({:.6}, {:.6}), beta = ({:.6}, {:.6}) from {} samples",
        c.alpha1, c.alpha2, c.beta1, c.beta2, c.samples
    );
    let csv = || {
        format!(
            "alpha1,alpha2,beta1,beta2,cpu_residual,mem_residual,samples\n{},{},{},{},{},{},{}\n",
            c.alpha1, c.alpha2, c.beta1, c.beta2, c.cpu_residual, c.mem_residual, c.samples
        )
    };
    sink.primary("calibration", csv, || pretty(&c))?;
    sink.raw("samples.csv", &samples_to_csv(&run.samples))?;
    sink.finish("calibrate", seed, &run)
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Instance JSON `{topology, offered, resources}`.
    #[arg(long, required_unless_present = "random", conflicts_with = "random")]
    pub instance: Option<PathBuf>,
    /// Generate this many random instances; every fourth has ample capacity.
    #[arg(long)]
    pub random: Option<usize>,
    /// Servers per random instance.
    #[arg(long, default_value_t = 3)]
    pub servers: usize,
    /// Most routing binaries per random instance.
    #[arg(long, default_value_t = 16)]
    pub max_binaries: usize,
    /// Refuse instances with more routing binaries than this.
    #[arg(long, default_value_t = DEFAULT_BINARY_LIMIT)]
    pub limit: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRun {
    pub instances: Vec<OracleInstance>,
    pub limit: usize,
    /// A single instance file reports one object rather than a list.
    pub single: bool,
}

pub fn oracle(args: OracleArgs) -> Result<()> {
    let (instances, single) = match (&args.instance, args.random) {
        (Some(path), _) => (vec![read_json::<OracleInstance>(path)?], true),
        (None, Some(k)) => {
            anyhow::ensure!(args.servers >= 2, "--servers must be at least 2");
            (
                random_suite(args.seed, k, args.servers, args.max_binaries),
                false,
            )
        }
        (None, None) => bail!("give --instance or --random"),
    };
    let run = OracleRun {
        instances,
        limit: args.limit,
        single,
    };
    execute_oracle(run, args.seed, Sink::new(&args.output)?)
}

pub fn execute_oracle(run: OracleRun, seed: u64, mut sink: Sink) -> Result<()> {
    let reports = run
        .instances
        .iter()
        .map(|inst| compare_with_heuristic(inst, run.limit))
        .collect::<Result<Vec<Comparison>, _>>()?;
    let dominant = reports.iter().filter(|r| r.gap >= -1e-6).count();
    eprintln!(
        "LP total >= enumerated optimum on {dominant} of {} instances",
        reports.len()
    );
    let csv = || {
        let mut out = String::from("instance,oracle,heuristic,gap\n");
        for r in &reports {
            let _ = writeln!(out, "{},{},{},{}", r.instance, r.oracle, r.heuristic, r.gap);
        }
        out
    };
    let json = || {
        if run.single {
            pretty(&reports[0])
        } else {
            pretty(&reports)
        }
    };
    sink.primary("oracle", csv, json)?;
    if !run.single {
        sink.raw("instances.json", &pretty(&run.instances))?;
    }
    sink.finish("oracle", seed, &run)
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Trace CSV `slot,i,j,offered` with 1-based servers.
    #[arg(long)]
    pub trace: PathBuf,
    /// Number of servers.
    #[arg(long, default_value_t = 6)]
    pub servers: usize,
    /// Filter length.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    /// Step size, in (0, 2).
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub mu: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRun {
    pub n: usize,
    pub order: usize,
    pub mu: f64,
    pub trace: Vec<Matrix>,
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let text = fs::read_to_string(&args.trace)
        .with_context(|| format!("reading {}", args.trace.display()))?;
    let run = PredictRun {
        n: args.servers,
        order: args.order,
        mu: args.mu,
        trace: parse_trace_csv(&text, args.servers)?,
    };
    execute_predict(run, args.seed, Sink::new(&args.output)?)
}

/// Forecast for every slot of the trace and one beyond; slot 0 has no
/// history and is forecast as zero.
pub fn execute_predict(run: PredictRun, seed: u64, mut sink: Sink) -> Result<()> {
    let mut bank = PredictorBank::new(run.n, run.order, run.mu)?;
    let mut forecasts = vec![Matrix::zeros(run.n)];
    forecasts.extend(replay(&mut bank, &run.trace)?);
    let sq: f64 = run
        .trace
        .iter()
        .zip(&forecasts)
        .map(|(obs, f)| {
            obs.values()
                .iter()
                .zip(f.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    if run.trace.is_empty() {
        eprintln!("empty trace, only the zero forecast for slot 0");
    } else {
        let cells = (run.trace.len() * run.n * run.n) as f64;
        eprintln!(
            "{} slots, mean squared one-step error {:.4}",
            run.trace.len(),
            sq / cells
        );
    }
    let rows: Vec<Vec<Vec<f64>>> = forecasts.iter().map(Matrix::rows).collect();
    sink.primary("forecast", || trace_to_csv(&forecasts), || pretty(&rows))?;
    sink.finish("predict", seed, &run)
}
