use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// One slot of simulated time. Counts are calls within the slot; usage is a
/// percentage of each server's current flavor capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// Slot start, seconds.
    pub t: f64,
    pub offered: f64,
    pub admitted: f64,
    pub carried: f64,
    pub rejected: f64,
    pub retx: f64,
    pub cpu_avg: f64,
    pub mem_avg: f64,
    pub setup_delay_ms: f64,
    pub cpu: Vec<f64>,
    pub mem: Vec<f64>,
    pub flavors: Vec<String>,
}

impl MetricsRow {
    pub fn zero(t: f64, n: usize, flavors: Vec<String>) -> Self {
        Self {
            t,
            offered: 0.0,
            admitted: 0.0,
            carried: 0.0,
            rejected: 0.0,
            retx: 0.0,
            cpu_avg: 0.0,
            mem_avg: 0.0,
            setup_delay_ms: 0.0,
            cpu: vec![0.0; n],
            mem: vec![0.0; n],
            flavors,
        }
    }
}

/// Totals over a time window, as rates in calls per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub start: f64,
    pub end: f64,
    pub offered_rate: f64,
    pub admitted_rate: f64,
    pub carried_rate: f64,
    pub rejected_rate: f64,
    pub retx_rate: f64,
    /// Admitted over offered.
    pub admission: f64,
    /// Carried over offered.
    pub carried_ratio: f64,
    pub cpu_avg: f64,
    pub mem_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsLog {
    pub tau: f64,
    pub rows: Vec<MetricsRow>,
    /// Established calls torn down by server failures.
    pub dropped: f64,
    /// Phase boundaries of the schedule, seconds, with the run end last.
    pub phases: Vec<f64>,
}

impl MetricsLog {
    pub fn n(&self) -> usize {
        self.rows.first().map_or(0, |r| r.cpu.len())
    }

    pub fn csv_header(n: usize) -> String {
        let mut h =
            String::from("t,offered,admitted,carried,rejected,retx,cpu_avg,mem_avg,setup_delay_ms");
        for kind in ["cpu", "mem", "flavor"] {
            for l in 1..=n {
                let _ = write!(h, ",{kind}_{l}");
            }
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.n());
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.t,
                r.offered,
                r.admitted,
                r.carried,
                r.rejected,
                r.retx,
                r.cpu_avg,
                r.mem_avg,
                r.setup_delay_ms
            );
            for v in r.cpu.iter().chain(&r.mem) {
                let _ = write!(out, ",{v}");
            }
            for f in &r.flavors {
                let _ = write!(out, ",{f}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// Totals over the slots starting in `[start, end)`.
    pub fn window(&self, start: f64, end: f64) -> WindowSummary {
        let rows: Vec<&MetricsRow> = self
            .rows
            .iter()
            .filter(|r| r.t >= start && r.t < end)
            .collect();
        let span = rows.len() as f64 * self.tau;
        let sum = |f: fn(&MetricsRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>();
        let rate = |v: f64| if span > 0.0 { v / span } else { 0.0 };
        let mean = |v: f64| {
            if rows.is_empty() {
                0.0
            } else {
                v / rows.len() as f64
            }
        };
        let offered = sum(|r| r.offered);
        let ratio = |v: f64| if offered > 0.0 { v / offered } else { 1.0 };
        WindowSummary {
            start,
            end,
            offered_rate: rate(offered),
            admitted_rate: rate(sum(|r| r.admitted)),
            carried_rate: rate(sum(|r| r.carried)),
            rejected_rate: rate(sum(|r| r.rejected)),
            retx_rate: rate(sum(|r| r.retx)),
            admission: ratio(sum(|r| r.admitted)),
            carried_ratio: ratio(sum(|r| r.carried)),
            cpu_avg: mean(sum(|r| r.cpu_avg)),
            mem_avg: mean(sum(|r| r.mem_avg)),
        }
    }

    /// One summary per schedule phase.
    pub fn phase_summaries(&self) -> Vec<WindowSummary> {
        self.phases
            .windows(2)
            .map(|w| self.window(w[0], w[1]))
            .collect()
    }

    /// Flavor of `server` at the slot containing `t`.
    pub fn flavor_at(&self, server: usize, t: f64) -> Option<&str> {
        self.rows
            .iter()
            .rev()
            .find(|r| r.t <= t)
            .map(|r| r.flavors[server].as_str())
    }
}

pub fn summaries_to_csv(rows: &[WindowSummary]) -> String {
    let mut out = String::from(
        "start,end,offered_rate,admitted_rate,carried_rate,rejected_rate,retx_rate,admission,carried_ratio,cpu_avg,mem_avg\n",
    );
    for s in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.start,
            s.end,
            s.offered_rate,
            s.admitted_rate,
            s.carried_rate,
            s.rejected_rate,
            s.retx_rate,
            s.admission,
            s.carried_ratio,
            s.cpu_avg,
            s.mem_avg
        );
    }
    out
}
