// Copyright 2026 The afm-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Trace files.
//!
//! A trace directory holds:
//!
//! | file          | columns                                               |
//! |---------------|-------------------------------------------------------|
//! | `nodes.csv`   | `t,node,theta,omega`                                  |
//! | `buffers.csv` | `t,src,dst,beta,gamma`                                |
//! | `events.csv`  | `t,kind,link,value`                                   |
//! | `knots.csv`   | `node,t,theta`                                        |
//! | `samples.csv` | `node,k,t_sample,t_actuate,correction,omega,measurements` |
//! | `meta.json`   | fingerprint, parameters, per-link constants           |
//!
//! Rows are ordered by time and then node or link. Reals are written with
//! 12 significant digits.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{FatalEvent, FatalKind};
use crate::topology::NodeId;
use crate::trace::{BufferRow, NodeRow, Series, Trace};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{file} row {row}: {message}")]
    Malformed {
        file: &'static str,
        row: usize,
        message: String,
    },
}

/// `%.12g`-style formatting.
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_fraction(mantissa));
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_fraction(&format!("{x:.decimals$}")).to_string()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMeta {
    pub src: usize,
    pub dst: usize,
    pub latency: f64,
    pub gearbox: [u32; 2],
    pub initial_occupancy: i64,
    pub lambda: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub theta0: f64,
    pub omega_u: f64,
    pub omega_init: f64,
    pub omega_pre: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub fingerprint: Option<String>,
    pub t_max: f64,
    pub grid_step: f64,
    pub period: u64,
    pub delay: u64,
    pub omega_min: f64,
    pub epoch: f64,
    pub buffer_capacity: Option<u64>,
    pub nodes: Vec<NodeMeta>,
    pub links: Vec<LinkMeta>,
    pub fatal: bool,
}

impl TraceMeta {
    pub fn of(trace: &Trace) -> Self {
        let s = &trace.scenario;
        let topo = s.topology();
        TraceMeta {
            fingerprint: trace.fingerprint.clone(),
            t_max: trace.t_max,
            grid_step: trace.grid_step,
            period: s.params().period,
            delay: s.params().delay,
            omega_min: s.params().omega_min,
            epoch: s.params().epoch,
            buffer_capacity: match topo.capacity() {
                crate::topology::Capacity::Bounded(m) => Some(m),
                crate::topology::Capacity::Unbounded => None,
            },
            nodes: s
                .params()
                .nodes
                .iter()
                .map(|n| NodeMeta {
                    theta0: n.theta0,
                    omega_u: n.omega_u,
                    omega_init: n.omega_init,
                    omega_pre: n.omega_pre,
                })
                .collect(),
            links: topo
                .link_ids()
                .map(|id| {
                    let l = topo.link(id);
                    LinkMeta {
                        src: l.src.0,
                        dst: l.dst.0,
                        latency: l.latency,
                        gearbox: [l.gearbox.num, l.gearbox.den],
                        initial_occupancy: s.initial_occupancy(id),
                        lambda: trace.lambdas[id.0],
                    }
                })
                .collect(),
            fatal: trace.is_fatal(),
        }
    }
}

fn writer(dir: &Path, name: &str, header: &[&str]) -> Result<csv::Writer<fs::File>, OutputError> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    Ok(w)
}

/// Writes every trace file into `dir`, creating it if needed.
pub fn write_trace(trace: &Trace, dir: impl AsRef<Path>) -> Result<(), OutputError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let g = format_g12;

    let mut w = writer(dir, "nodes.csv", &["t", "node", "theta", "omega"])?;
    for r in &trace.series.nodes {
        w.write_record([g(r.t), r.node.to_string(), g(r.theta), g(r.omega)])?;
    }
    w.flush()?;

    let mut w = writer(dir, "buffers.csv", &["t", "src", "dst", "beta", "gamma"])?;
    for r in &trace.series.buffers {
        w.write_record([
            g(r.t),
            r.src.to_string(),
            r.dst.to_string(),
            r.beta.to_string(),
            r.gamma.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = writer(dir, "events.csv", &["t", "kind", "link", "value"])?;
    for e in &trace.fatal {
        w.write_record([
            g(e.t),
            e.kind.as_str().to_string(),
            format!("{}->{}", e.src, e.dst),
            e.occupancy.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = writer(dir, "knots.csv", &["node", "t", "theta"])?;
    for (k, theta) in trace.trajectories.iter().enumerate() {
        for (t, phase) in theta.knots() {
            w.write_record([k.to_string(), g(t), g(phase)])?;
        }
    }
    w.flush()?;

    let mut w = writer(
        dir,
        "samples.csv",
        &[
            "node",
            "k",
            "t_sample",
            "t_actuate",
            "correction",
            "omega",
            "measurements",
        ],
    )?;
    let mut samples: Vec<_> = trace.samples.iter().collect();
    samples.sort_by(|a, b| {
        a.sample_time
            .total_cmp(&b.sample_time)
            .then(a.node.cmp(&b.node))
    });
    for s in samples {
        let y = s
            .measurements
            .iter()
            .map(|m| format!("{}:{}", m.neighbor, m.occupancy))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            s.node.to_string(),
            s.k.to_string(),
            g(s.sample_time),
            g(s.actuation_time),
            g(s.correction),
            g(s.frequency),
            y,
        ])?;
    }
    w.flush()?;

    let meta = serde_json::to_string_pretty(&TraceMeta::of(trace))?;
    fs::write(dir.join("meta.json"), meta + "\n")?;
    Ok(())
}

/// The grid series, fatal events and metadata read back from a trace
/// directory.
#[derive(Debug, Clone)]
pub struct TraceFiles {
    pub meta: TraceMeta,
    pub series: Series,
    pub fatal: Vec<FatalEvent>,
}

#[derive(Deserialize)]
struct NodeRecord {
    t: f64,
    node: usize,
    theta: f64,
    omega: f64,
}

#[derive(Deserialize)]
struct BufferRecord {
    t: f64,
    src: usize,
    dst: usize,
    beta: i64,
    gamma: i64,
}

#[derive(Deserialize)]
struct EventRecord {
    t: f64,
    kind: String,
    link: String,
    value: i64,
}

pub fn read_trace_dir(dir: impl AsRef<Path>) -> Result<TraceFiles, OutputError> {
    let dir = dir.as_ref();
    let meta: TraceMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
    let mut series = Series::default();
    for r in csv::Reader::from_path(dir.join("nodes.csv"))?.deserialize() {
        let r: NodeRecord = r?;
        series.nodes.push(NodeRow {
            t: r.t,
            node: NodeId(r.node),
            theta: r.theta,
            omega: r.omega,
        });
    }
    for r in csv::Reader::from_path(dir.join("buffers.csv"))?.deserialize() {
        let r: BufferRecord = r?;
        series.buffers.push(BufferRow {
            t: r.t,
            src: NodeId(r.src),
            dst: NodeId(r.dst),
            beta: r.beta,
            gamma: r.gamma,
        });
    }
    let mut fatal = Vec::new();
    for (row, r) in csv::Reader::from_path(dir.join("events.csv"))?
        .deserialize()
        .enumerate()
    {
        let r: EventRecord = r?;
        let malformed = |message: String| OutputError::Malformed {
            file: "events.csv",
            row: row + 1,
            message,
        };
        let kind = match r.kind.as_str() {
            "overflow" => FatalKind::Overflow,
            "underflow" => FatalKind::Underflow,
            other => return Err(malformed(format!("unknown event kind {other:?}"))),
        };
        let (src, dst) = r
            .link
            .split_once("->")
            .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
            .ok_or_else(|| malformed(format!("bad link {:?}", r.link)))?;
        fatal.push(FatalEvent {
            kind,
            src: NodeId(src),
            dst: NodeId(dst),
            t: r.t,
            occupancy: r.value,
        });
    }
    Ok(TraceFiles {
        meta,
        series,
        fatal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_formatting() {
        assert_eq!(format_g12(0.0), "0");
        assert_eq!(format_g12(-0.0), "0");
        assert_eq!(format_g12(1.0), "1");
        assert_eq!(format_g12(0.5), "0.5");
        assert_eq!(format_g12(-25.0), "-25");
        assert_eq!(format_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_g12(2.0 / 1.1), "1.81818181818");
        assert_eq!(format_g12(123456.789), "123456.789");
        assert_eq!(format_g12(1e-7), "1e-7");
        assert_eq!(format_g12(1.5e13), "1.5e13");
        assert_eq!(format_g12(0.1 + 0.2), "0.3");
        assert_eq!(format_g12(9.9999999999999), "10");
    }
}
