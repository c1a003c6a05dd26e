//! UDP control plane: JSON datagrams between server agents and the
//! controller. Server ids are 1-based on the wire.

mod service;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admission;

pub use service::{
    agent_port, controller_port, controller_serve, controller_serve_on, mock_agent, mock_agent_on,
    parse_trace, AgentConfig, AgentOutcome, AgentState, ServeConfig, ServeOutcome, SlotRecord,
};

pub const PROTOCOL_VERSION: u32 = 1;
/// Largest UDP payload over IPv4.
pub const MAX_DATAGRAM: usize = 65507;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("datagram of {0} bytes exceeds {MAX_DATAGRAM}")]
    Oversize(usize),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("protocol version {got} is not supported (expected {PROTOCOL_VERSION})")]
    Version { got: u64 },
    #[error("invalid message: {0}")]
    Invalid(String),
    #[error("socket: {0}")]
    Io(String),
}

impl From<std::io::Error> for ProtocolError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Stats a server sends at a slot boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub v: u32,
    pub slot: u64,
    pub srv: u32,
    /// Remaining CPU and memory, capacity units.
    pub p: f64,
    pub m: f64,
    pub local: u64,
    /// New outbound requests per destination id.
    pub out: BTreeMap<u32, u64>,
}

/// Quotas for one server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directive {
    pub v: u32,
    pub slot: u64,
    pub srv: u32,
    /// Admitted calls per destination id.
    pub c: BTreeMap<u32, u64>,
    /// Relay quotas `[origin, dest, next hop, quota]` sent from this server.
    pub r: Vec<[u64; 4]>,
    pub flavor: Option<String>,
}

fn check_size(len: usize) -> Result<(), ProtocolError> {
    if len > MAX_DATAGRAM {
        Err(ProtocolError::Oversize(len))
    } else {
        Ok(())
    }
}

fn decode<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ProtocolError> {
    check_size(bytes.len())?;
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    match value.get("v").and_then(serde_json::Value::as_u64) {
        Some(v) if v == PROTOCOL_VERSION as u64 => {}
        Some(v) => return Err(ProtocolError::Version { got: v }),
        None => return Err(ProtocolError::Malformed("missing version field `v`".into())),
    }
    serde_json::from_value(value).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

fn encode<T: Serialize>(msg: &T) -> Result<Vec<u8>, ProtocolError> {
    let bytes = serde_json::to_vec(msg).map_err(|e| ProtocolError::Invalid(e.to_string()))?;
    check_size(bytes.len())?;
    Ok(bytes)
}

impl StatsReport {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.v != PROTOCOL_VERSION {
            return Err(ProtocolError::Version { got: self.v as u64 });
        }
        if self.srv == 0 || self.out.contains_key(&0) {
            return Err(ProtocolError::Invalid("server ids start at 1".into()));
        }
        if !(self.p.is_finite() && self.m.is_finite() && self.p >= 0.0 && self.m >= 0.0) {
            return Err(ProtocolError::Invalid(format!(
                "resources p={} m={}",
                self.p, self.m
            )));
        }
        Ok(())
    }

    /// From a 0-based report; counts are rounded to whole calls.
    pub fn from_report(r: &admission::ServerReport) -> Self {
        let count = |v: f64| v.max(0.0).round() as u64;
        Self {
            v: PROTOCOL_VERSION,
            slot: r.slot,
            srv: r.server as u32 + 1,
            p: r.cpu,
            m: r.mem,
            local: count(r.local),
            out: r
                .outbound
                .iter()
                .map(|(&j, &v)| (j as u32 + 1, count(v)))
                .collect(),
        }
    }

    pub fn to_report(&self) -> admission::ServerReport {
        admission::ServerReport {
            slot: self.slot,
            server: self.srv as usize - 1,
            cpu: self.p,
            mem: self.m,
            local: self.local as f64,
            outbound: self
                .out
                .iter()
                .map(|(&j, &v)| (j as usize - 1, v as f64))
                .collect(),
        }
    }
}

impl Directive {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.v != PROTOCOL_VERSION {
            return Err(ProtocolError::Version { got: self.v as u64 });
        }
        if self.srv == 0 || self.c.contains_key(&0) || self.r.iter().any(|e| e[..3].contains(&0)) {
            return Err(ProtocolError::Invalid("server ids start at 1".into()));
        }
        Ok(())
    }

    /// From a 0-based directive; zero entries are omitted.
    pub fn from_directive(d: &admission::Directive) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            slot: d.slot,
            srv: d.server as u32 + 1,
            c: d.admitted
                .iter()
                .enumerate()
                .filter(|(_, &q)| q > 0)
                .map(|(j, &q)| (j as u32 + 1, q))
                .collect(),
            r: d.relays
                .iter()
                .map(|&(i, j, l, q)| [i as u64 + 1, j as u64 + 1, l as u64 + 1, q])
                .collect(),
            flavor: d.flavor.clone(),
        }
    }

    /// Back to 0-based form with an admitted row of length `n`.
    pub fn to_directive(&self, n: usize) -> Result<admission::Directive, ProtocolError> {
        self.validate()?;
        let fits = |id: u64| (id as usize) <= n;
        if !fits(self.srv as u64)
            || !self.c.keys().all(|&j| fits(j as u64))
            || !self.r.iter().all(|e| e[..3].iter().all(|&x| fits(x)))
        {
            return Err(ProtocolError::Invalid(format!("server id beyond n = {n}")));
        }
        let mut admitted = vec![0; n];
        for (&j, &q) in &self.c {
            admitted[j as usize - 1] = q;
        }
        Ok(admission::Directive {
            slot: self.slot,
            server: self.srv as usize - 1,
            admitted,
            relays: self
                .r
                .iter()
                .map(|e| {
                    (
                        e[0] as usize - 1,
                        e[1] as usize - 1,
                        e[2] as usize - 1,
                        e[3],
                    )
                })
                .collect(),
            flavor: self.flavor.clone(),
        })
    }

    pub fn is_hold(&self) -> bool {
        self.c.values().all(|&q| q == 0) && self.r.iter().all(|e| e[3] == 0)
    }
}

pub fn encode_stats(report: &StatsReport) -> Result<Vec<u8>, ProtocolError> {
    report.validate()?;
    encode(report)
}

pub fn decode_stats(bytes: &[u8]) -> Result<StatsReport, ProtocolError> {
    let r: StatsReport = decode(bytes)?;
    r.validate()?;
    Ok(r)
}

pub fn encode_directive(directive: &Directive) -> Result<Vec<u8>, ProtocolError> {
    directive.validate()?;
    encode(directive)
}

pub fn decode_directive(bytes: &[u8]) -> Result<Directive, ProtocolError> {
    let d: Directive = decode(bytes)?;
    d.validate()?;
    Ok(d)
}
