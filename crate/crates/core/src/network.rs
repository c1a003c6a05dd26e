//! Topology, load matrices, resource profiles and the flavor catalog, plus
//! the built-in fixtures for the six-server test network.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid topology: {}", join_violations(.0))]
    Topology(Vec<TopologyViolation>),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("entry ({i}, {j}) is negative or non-finite: {value}")]
    BadEntry { i: usize, j: usize, value: f64 },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown flavor `{0}`")]
    UnknownFlavor(String),
    #[error("flavor catalog: {0}")]
    Catalog(String),
    #[error("invalid cost coefficients: {0}")]
    Coefficients(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{0}")]
    Io(String),
}

fn join_violations(v: &[TopologyViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// One problem found in a candidate adjacency matrix. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyViolation {
    Empty,
    NotSquare { row: usize, len: usize },
    NonBinary { i: usize, j: usize },
    Diagonal { i: usize },
    Asymmetric { i: usize, j: usize },
}

impl fmt::Display for TopologyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "no servers"),
            Self::NotSquare { row, len } => write!(f, "row {row} has {len} entries"),
            Self::NonBinary { i, j } => write!(f, "entry ({i}, {j}) is not 0/1"),
            Self::Diagonal { i } => write!(f, "diagonal entry ({i}, {i}) is nonzero"),
            Self::Asymmetric { i, j } => write!(f, "L[{i}][{j}] != L[{j}][{i}]"),
        }
    }
}

/// Symmetric 0/1 adjacency of SIP trunks between servers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct Topology {
    n: usize,
    adj: Vec<bool>,
}

impl TryFrom<Vec<Vec<u8>>> for Topology {
    type Error = NetworkError;
    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self, Self::Error> {
        Topology::validate(&rows)
    }
}

impl From<Topology> for Vec<Vec<u8>> {
    fn from(t: Topology) -> Self {
        t.rows()
    }
}

impl Topology {
    /// Validate a square 0/1 matrix, collecting every violation.
    pub fn validate(rows: &[Vec<u8>]) -> Result<Self, NetworkError> {
        let n = rows.len();
        let mut bad = Vec::new();
        if n == 0 {
            bad.push(TopologyViolation::Empty);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                bad.push(TopologyViolation::NotSquare {
                    row: i + 1,
                    len: row.len(),
                });
            }
        }
        if !bad.is_empty() {
            return Err(NetworkError::Topology(bad));
        }
        for i in 0..n {
            for j in 0..n {
                let v = rows[i][j];
                if v > 1 {
                    bad.push(TopologyViolation::NonBinary { i: i + 1, j: j + 1 });
                }
                if i == j && v != 0 {
                    bad.push(TopologyViolation::Diagonal { i: i + 1 });
                }
                if i < j && v != rows[j][i] {
                    bad.push(TopologyViolation::Asymmetric { i: i + 1, j: j + 1 });
                }
            }
        }
        if !bad.is_empty() {
            return Err(NetworkError::Topology(bad));
        }
        Ok(Self {
            n,
            adj: rows.iter().flatten().map(|&v| v == 1).collect(),
        })
    }

    /// Build from an undirected edge list with 1-based endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, NetworkError> {
        let mut rows = vec![vec![0u8; n]; n];
        for &(a, b) in edges {
            if a == 0 || b == 0 || a > n || b > n {
                return Err(NetworkError::Parse {
                    line: 0,
                    message: format!("edge {a}-{b} out of range 1..={n}"),
                });
            }
            rows[a - 1][b - 1] = 1;
            rows[b - 1][a - 1] = 1;
        }
        Self::validate(&rows)
    }

    /// The six-server ring used throughout the experiments:
    /// 1-2, 1-3, 2-4, 3-5, 4-6, 5-6.
    pub fn six_server_ring() -> Self {
        Self::from_edges(6, &[(1, 2), (1, 3), (2, 4), (3, 5), (4, 6), (5, 6)])
            .expect("fixture topology is valid")
    }

    /// Path graph 1-2-...-n.
    pub fn line(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|k| (k, k + 1)).collect();
        Self::from_edges(n, &edges).expect("line topology is valid")
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for a in 1..=n {
            for b in a + 1..=n {
                edges.push((a, b));
            }
        }
        Self::from_edges(n, &edges).expect("complete topology is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 0-based adjacency test.
    pub fn linked(&self, k: usize, l: usize) -> bool {
        self.adj[k * self.n + l]
    }

    pub fn neighbors(&self, l: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&k| self.linked(l, k))
    }

    /// Directed arcs (k, l) with L_kl = 1, row-major.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 0..self.n {
            for l in 0..self.n {
                if self.linked(k, l) {
                    out.push((k, l));
                }
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.linked(i, j) as u8).collect())
            .collect()
    }

    /// Copy with every link touching a down server removed.
    pub fn without(&self, down: &[bool]) -> Self {
        let mut t = self.clone();
        for k in 0..self.n {
            for l in 0..self.n {
                if down.get(k).copied().unwrap_or(false) || down.get(l).copied().unwrap_or(false) {
                    t.adj[k * self.n + l] = false;
                }
            }
        }
        t
    }

    /// Servers reachable from `src` (including `src`).
    pub fn reachable(&self, src: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![src];
        seen[src] = true;
        while let Some(k) = stack.pop() {
            for l in self.neighbors(k) {
                if !seen[l] {
                    seen[l] = true;
                    stack.push(l);
                }
            }
        }
        seen
    }

    /// Hop distance from `src` to every server; `usize::MAX` if unreachable.
    pub fn hops_from(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(k) = queue.pop_front() {
            for l in self.neighbors(k) {
                if dist[l] == usize::MAX {
                    dist[l] = dist[k] + 1;
                    queue.push_back(l);
                }
            }
        }
        dist
    }

    /// Parse the text format: first line `n`, then `n` rows of 0/1.
    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (first_no, first) = lines.next().ok_or(NetworkError::Parse {
            line: 1,
            message: "empty topology file".into(),
        })?;
        let n: usize = first.trim().parse().map_err(|_| NetworkError::Parse {
            line: first_no + 1,
            message: format!("expected server count, found `{}`", first.trim()),
        })?;
        let mut rows = Vec::with_capacity(n);
        for (no, line) in lines {
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u8>().map_err(|_| NetworkError::Parse {
                        line: no + 1,
                        message: format!("expected 0 or 1, found `{tok}`"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(NetworkError::Parse {
                line: 1,
                message: format!("declared {n} servers but found {} rows", rows.len()),
            });
        }
        Self::validate(&rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for row in self.rows() {
            let cells: Vec<_> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        Self::parse(&read(path)?)
    }
}

fn read(path: &Path) -> Result<String, NetworkError> {
    std::fs::read_to_string(path).map_err(|e| NetworkError::Io(format!("{}: {e}", path.display())))
}

/// Dense square matrix of nonnegative reals. Used for offered load, admitted
/// calls and forecasts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

/// `C̄`: requested calls per origin/destination pair per slot.
pub type OfferedLoad = Matrix;

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = NetworkError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.rows()
    }
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Square, finite, nonnegative rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, NetworkError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(NetworkError::NotSquare {
                    rows: n,
                    row: i + 1,
                    len: row.len(),
                });
            }
            for (j, v) in row.into_iter().enumerate() {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(NetworkError::BadEntry {
                        i: i + 1,
                        j: j + 1,
                        value: v,
                    });
                }
                data.push(v);
            }
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Panics on negative or non-finite values.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            v.is_finite() && v >= 0.0,
            "matrix entry must be finite and >= 0"
        );
        self.data[i * self.n + j] = v;
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| f(v).max(0.0)).collect(),
        }
    }

    /// Parse `n` whitespace-separated rows of `n` reals. An empty input gives
    /// a 0x0 matrix.
    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        let mut rows = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| NetworkError::Parse {
                        line: no + 1,
                        message: format!("expected a number, found `{tok}`"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let cells: Vec<_> = self.row(i).iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

const SCENARIO1: [[f64; 6]; 6] = [
    [10., 20., 48., 30., 60., 8.],
    [10., 50., 20., 54., 48., 54.],
    [44., 44., 100., 30., 40., 12.],
    [10., 20., 30., 46., 50., 14.],
    [50., 50., 30., 20., 54., 20.],
    [50., 40., 25., 40., 54., 15.],
];

const SCENARIO2: [[f64; 6]; 6] = [
    [50., 60., 64., 65., 93., 58.],
    [60., 95., 70., 70., 42., 40.],
    [40., 65., 70., 30., 60., 92.],
    [50., 30., 20., 86., 60., 94.],
    [90., 76., 60., 50., 70., 80.],
    [46., 95., 70., 44., 70., 85.],
];

const SCENARIO3: [[f64; 6]; 6] = [
    [110., 120., 84., 80., 105., 65.],
    [70., 105., 80., 75., 100., 98.],
    [78., 75., 125., 90., 120., 98.],
    [60., 90., 80., 95., 115., 100.],
    [100., 86., 108., 60., 102., 94.],
    [66., 105., 94., 104., 78., 85.],
];

pub const SCENARIO_NAMES: [&str; 3] = ["scenario1", "scenario2", "scenario3"];

/// Built-in scenario by name, or a matrix file otherwise.
pub fn load_scenario(name_or_path: &str) -> Result<OfferedLoad, NetworkError> {
    let fixed = match name_or_path {
        "scenario1" => Some(SCENARIO1),
        "scenario2" => Some(SCENARIO2),
        "scenario3" => Some(SCENARIO3),
        _ => None,
    };
    if let Some(m) = fixed {
        return Matrix::from_rows(m.iter().map(|r| r.to_vec()).collect());
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(NetworkError::UnknownScenario(name_or_path.to_string()));
    }
    Matrix::parse(&read(path)?)
}

/// Per-call resource costs. `alpha1`/`beta1` apply to a local call, `alpha2`/
/// `beta2` to each relayed flow unit entering or leaving a server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCoefficients {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// Length of the measurement window over which the published per-call costs
/// were taken, in seconds. Scenario entries are call rates, so a rate
/// sustained over this window costs `window * coefficient`.
pub const RATE_WINDOW_S: f64 = 3.0;

impl CostCoefficients {
    /// Calibrated on the small flavor.
    pub const SMALL: Self = Self {
        alpha1: 0.07841,
        alpha2: 0.02158,
        beta1: 0.06998,
        beta2: 0.01997,
    };

    /// Calibrated on the medium flavor.
    pub const MEDIUM: Self = Self {
        alpha1: 0.08012,
        alpha2: 0.02329,
        beta1: 0.07169,
        beta2: 0.02168,
    };

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            alpha1: self.alpha1 * factor,
            alpha2: self.alpha2 * factor,
            beta1: self.beta1 * factor,
            beta2: self.beta2 * factor,
        }
    }

    /// Costs per unit of call rate (calls/s) over the given window.
    pub fn per_rate(self, window_s: f64) -> Self {
        self.scaled(window_s)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let all = [self.alpha1, self.alpha2, self.beta1, self.beta2];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(NetworkError::Coefficients(format!("{self:?}")));
        }
        Ok(())
    }

    /// Soft checks that calibrated values usually satisfy.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.alpha1 < self.alpha2 {
            w.push(format!("alpha1 {} < alpha2 {}", self.alpha1, self.alpha2));
        }
        if self.beta1 < self.beta2 {
            w.push(format!("beta1 {} < beta2 {}", self.beta1, self.beta2));
        }
        w
    }
}

/// Remaining CPU and memory per server, in capacity units, and the cost
/// model used to charge calls against them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceProfile {
    pub cpu: Vec<f64>,
    pub mem: Vec<f64>,
    pub coeffs: CostCoefficients,
}

impl ResourceProfile {
    pub fn uniform(n: usize, cpu: f64, mem: f64, coeffs: CostCoefficients) -> Self {
        Self {
            cpu: vec![cpu; n],
            mem: vec![mem; n],
            coeffs,
        }
    }

    pub fn n(&self) -> usize {
        self.cpu.len()
    }

    pub fn validate(&self, n: usize) -> Result<(), NetworkError> {
        if self.cpu.len() != n || self.mem.len() != n {
            return Err(NetworkError::Dimension {
                expected: n,
                got: self.cpu.len().min(self.mem.len()),
            });
        }
        if self
            .cpu
            .iter()
            .chain(&self.mem)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(NetworkError::Coefficients(
                "remaining resources must be finite and >= 0".into(),
            ));
        }
        self.coeffs.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Flavor {
    pub name: String,
    pub memory_mb: u32,
    pub vcpus: u32,
    pub disk_gb: u32,
}

impl Flavor {
    /// `(P_f, M_f)`: 100 CPU units per vCPU, 100 memory units per 2048 MB.
    pub fn capacity_units(&self) -> (f64, f64) {
        (
            100.0 * self.vcpus as f64,
            100.0 * self.memory_mb as f64 / 2048.0,
        )
    }
}

/// Flavors in ascending capacity order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Flavor>", into = "Vec<Flavor>")]
pub struct FlavorCatalog {
    flavors: Vec<Flavor>,
}

impl TryFrom<Vec<Flavor>> for FlavorCatalog {
    type Error = NetworkError;
    fn try_from(v: Vec<Flavor>) -> Result<Self, Self::Error> {
        FlavorCatalog::new(v)
    }
}

impl From<FlavorCatalog> for Vec<Flavor> {
    fn from(c: FlavorCatalog) -> Self {
        c.flavors
    }
}

impl FlavorCatalog {
    pub fn new(flavors: Vec<Flavor>) -> Result<Self, NetworkError> {
        if flavors.is_empty() {
            return Err(NetworkError::Catalog("catalog is empty".into()));
        }
        for w in flavors.windows(2) {
            let (p0, m0) = w[0].capacity_units();
            let (p1, m1) = w[1].capacity_units();
            if p1 < p0 || m1 < m0 || (p1 == p0 && m1 == m0) {
                return Err(NetworkError::Catalog(format!(
                    "`{}` does not have more capacity than `{}`",
                    w[1].name, w[0].name
                )));
            }
        }
        Ok(Self { flavors })
    }

    /// m1.small through m1.xlarge.
    pub fn standard() -> Self {
        let f = |name: &str, memory_mb, vcpus, disk_gb| Flavor {
            name: name.into(),
            memory_mb,
            vcpus,
            disk_gb,
        };
        Self::new(vec![
            f("m1.small", 2048, 1, 20),
            f("m1.medium", 4096, 2, 40),
            f("m1.large", 8192, 4, 80),
            f("m1.xlarge", 16384, 8, 160),
        ])
        .expect("fixture catalog is valid")
    }

    pub fn flavors(&self) -> &[Flavor] {
        &self.flavors
    }

    pub fn len(&self) -> usize {
        self.flavors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flavors.is_empty()
    }

    pub fn get(&self, index: usize) -> &Flavor {
        &self.flavors[index]
    }

    pub fn index_of(&self, name: &str) -> Result<usize, NetworkError> {
        self.flavors
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| NetworkError::UnknownFlavor(name.to_string()))
    }

    pub fn largest(&self) -> usize {
        self.flavors.len() - 1
    }

    /// CSV with header `name,memory_mb,vcpus,disk_gb`.
    pub fn parse_csv(text: &str) -> Result<Self, NetworkError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let header = lines.next().map(|(_, l)| l.trim().replace(' ', ""));
        if header.as_deref() != Some("name,memory_mb,vcpus,disk_gb") {
            return Err(NetworkError::Parse {
                line: 1,
                message: "expected header `name,memory_mb,vcpus,disk_gb`".into(),
            });
        }
        let mut flavors = Vec::new();
        for (no, line) in lines {
            let cells: Vec<_> = line.split(',').map(str::trim).collect();
            let num = |s: &str| {
                s.parse::<u32>().map_err(|_| NetworkError::Parse {
                    line: no + 1,
                    message: format!("expected an integer, found `{s}`"),
                })
            };
            if cells.len() != 4 {
                return Err(NetworkError::Parse {
                    line: no + 1,
                    message: format!("expected 4 fields, found {}", cells.len()),
                });
            }
            flavors.push(Flavor {
                name: cells[0].to_string(),
                memory_mb: num(cells[1])?,
                vcpus: num(cells[2])?,
                disk_gb: num(cells[3])?,
            });
        }
        Self::new(flavors)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,memory_mb,vcpus,disk_gb\n");
        for f in &self.flavors {
            let _ = writeln!(out, "{},{},{},{}", f.name, f.memory_mb, f.vcpus, f.disk_gb);
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        Self::parse_csv(&read(path)?)
    }
}

/// Objective trade-off between admitting calls (`gamma`) and saving
/// resources (`phi`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub gamma: f64,
    pub phi: f64,
}

impl Weights {
    pub fn new(gamma: f64, phi: f64) -> Result<Self, NetworkError> {
        let w = Self { gamma, phi };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(self.gamma.is_finite() && self.phi.is_finite() && self.gamma >= 0.0 && self.phi >= 0.0)
        {
            return Err(NetworkError::Weights(format!(
                "gamma and phi must be finite and >= 0, got ({}, {})",
                self.gamma, self.phi
            )));
        }
        if self.gamma == 0.0 && self.phi == 0.0 {
            return Err(NetworkError::Weights("gamma and phi are both zero".into()));
        }
        Ok(())
    }
}

/// The four weight cases, from resource-preserving (`F1`) to
/// admission-dominant (`F4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightCase {
    F1,
    F2,
    F3,
    F4,
}

impl WeightCase {
    pub const ALL: [WeightCase; 4] = [Self::F1, Self::F2, Self::F3, Self::F4];

    pub fn weights(self) -> Weights {
        let phi = match self {
            Self::F1 => 4.0,
            Self::F2 => 1.0,
            Self::F3 => 0.2,
            Self::F4 => 0.05,
        };
        Weights { gamma: 1.0, phi }
    }
}

impl std::str::FromStr for WeightCase {
    type Err = NetworkError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Self::F1),
            "f2" => Ok(Self::F2),
            "f3" => Ok(Self::F3),
            "f4" => Ok(Self::F4),
            _ => Err(NetworkError::Weights(format!("unknown case `{s}`"))),
        }
    }
}
