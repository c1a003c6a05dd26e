use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Directory for artifacts and the run manifest. Without it the main
    /// artifact goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Artifact format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub format: Format,
    /// Fully resolved inputs of the command.
    pub config: serde_json::Value,
    /// Files written next to the manifest.
    pub artifacts: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Where a command's artifacts go.
pub struct Sink {
    dir: Option<PathBuf>,
    pub format: Format,
    written: Vec<String>,
}

impl Sink {
    pub fn new(args: &OutputArgs) -> Result<Self> {
        Self::with_format(args, args.format.unwrap_or(Format::Csv))
    }

    fn with_format(args: &OutputArgs, format: Format) -> Result<Self> {
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Self {
            dir: args.out.clone(),
            format,
            written: Vec::new(),
        })
    }

    fn pick(&self, csv: impl FnOnce() -> String, json: impl FnOnce() -> String) -> String {
        match self.format {
            Format::Csv => csv(),
            Format::Json => json(),
        }
    }

    /// Main artifact: a file under `--out`, stdout otherwise.
    pub fn primary(
        &mut self,
        stem: &str,
        csv: impl FnOnce() -> String,
        json: impl FnOnce() -> String,
    ) -> Result<()> {
        let body = self.pick(csv, json);
        if self.dir.is_some() {
            self.file(&format!("{stem}.{}", self.format.ext()), &body)
        } else {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            if !body.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }

    /// Extra artifact, written only under `--out`.
    pub fn secondary(
        &mut self,
        stem: &str,
        csv: impl FnOnce() -> String,
        json: impl FnOnce() -> String,
    ) -> Result<()> {
        if self.dir.is_none() {
            return Ok(());
        }
        let body = self.pick(csv, json);
        self.file(&format!("{stem}.{}", self.format.ext()), &body)
    }

    /// Fixed-format file, written only under `--out`.
    pub fn raw(&mut self, name: &str, body: &str) -> Result<()> {
        if self.dir.is_none() {
            return Ok(());
        }
        self.file(name, body)
    }

    fn file(&mut self, name: &str, body: &str) -> Result<()> {
        let dir = self.dir.as_ref().expect("checked by callers");
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Write the manifest when artifacts went to a directory.
    pub fn finish(mut self, command: &str, seed: u64, config: &impl Serialize) -> Result<()> {
        if self.dir.is_none() {
            return Ok(());
        }
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            format: self.format,
            config: serde_json::to_value(config)?,
            artifacts: std::mem::take(&mut self.written),
        };
        let body = serde_json::to_string_pretty(&manifest)?;
        self.file(MANIFEST_FILE, &body)
    }
}

pub fn pretty<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifacts serialize")
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Re-run a command from the resolved inputs in its manifest.
pub fn replay(path: &Path, output: OutputArgs) -> Result<()> {
    let m: RunManifest = read_json(path)?;
    if m.tool != env!("CARGO_PKG_NAME") {
        bail!("manifest was written by `{}`", m.tool);
    }
    if m.version != env!("CARGO_PKG_VERSION") {
        tracing::warn!(manifest = %m.version, tool = env!("CARGO_PKG_VERSION"), "version differs; output may not match");
    }
    let sink = Sink::with_format(&output, output.format.unwrap_or(m.format))?;
    let config = m.config;
    match m.command.as_str() {
        "solve" => crate::solve::execute(serde_json::from_value(config)?, m.seed, sink),
        "simulate" => crate::simulate::execute(serde_json::from_value(config)?, m.seed, sink),
        "calibrate" => {
            crate::tools::execute_calibrate(serde_json::from_value(config)?, m.seed, sink)
        }
        "oracle" => crate::tools::execute_oracle(serde_json::from_value(config)?, m.seed, sink),
        "predict" => crate::tools::execute_predict(serde_json::from_value(config)?, m.seed, sink),
        other => bail!("`{other}` runs talk to the network and cannot be replayed"),
    }
}
