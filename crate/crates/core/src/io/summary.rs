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

//! Run summaries computed from the grid series.

use std::collections::BTreeMap;
use std::fmt;

use crate::engine::FatalEvent;
use crate::io::output::format_g12;
use crate::topology::NodeId;
use crate::trace::{Series, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSummary {
    pub src: NodeId,
    pub dst: NodeId,
    pub min: i64,
    pub max: i64,
}

/// Behavior of `beta_ab + beta_ba` over the run for the edge `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSummary {
    pub a: NodeId,
    pub b: NodeId,
    pub initial_sum: i64,
    /// Largest `|sum(t) - sum(0)|` on the grid.
    pub max_deviation: i64,
    /// Grid times at which the deviation exceeded `gamma_ab + gamma_ba`.
    pub bound_exceeded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub final_time: f64,
    pub final_frequencies: Vec<f64>,
    pub mean_frequency: f64,
    /// `max_i omega_i - min_i omega_i` at the final grid time.
    pub frequency_spread: f64,
    pub links: Vec<LinkSummary>,
    pub edges: Vec<EdgeSummary>,
    pub first_fatal: Option<FatalEvent>,
}

impl Summary {
    pub fn relative_spread(&self) -> f64 {
        self.frequency_spread / self.mean_frequency
    }
}

pub fn summarize(trace: &Trace) -> Summary {
    summarize_series(&trace.series, &trace.fatal)
}

pub fn summarize_series(series: &Series, fatal: &[FatalEvent]) -> Summary {
    let final_time = series.nodes.last().map_or(0.0, |r| r.t);
    let final_frequencies: Vec<f64> = series
        .nodes
        .iter()
        .filter(|r| r.t == final_time)
        .map(|r| r.omega)
        .collect();
    let n = final_frequencies.len().max(1) as f64;
    let mean_frequency = final_frequencies.iter().sum::<f64>() / n;
    let (lo, hi) = final_frequencies
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &w| {
            (lo.min(w), hi.max(w))
        });
    let frequency_spread = if final_frequencies.is_empty() {
        0.0
    } else {
        hi - lo
    };

    let mut links: BTreeMap<(NodeId, NodeId), LinkSummary> = BTreeMap::new();
    for r in &series.buffers {
        links
            .entry((r.src, r.dst))
            .and_modify(|s| {
                s.min = s.min.min(r.beta);
                s.max = s.max.max(r.beta);
            })
            .or_insert(LinkSummary {
                src: r.src,
                dst: r.dst,
                min: r.beta,
                max: r.beta,
            });
    }

    // Per grid time, the (beta, gamma) of each directed link.
    let mut at: BTreeMap<(NodeId, NodeId), Vec<(i64, i64)>> = BTreeMap::new();
    for r in &series.buffers {
        at.entry((r.src, r.dst))
            .or_default()
            .push((r.beta, r.gamma));
    }
    let mut edges = Vec::new();
    for (&(a, b), forward) in at.iter().filter(|((a, b), _)| a < b) {
        let Some(backward) = at.get(&(b, a)) else {
            continue;
        };
        let initial_sum = forward[0].0 + backward[0].0;
        let mut summary = EdgeSummary {
            a,
            b,
            initial_sum,
            max_deviation: 0,
            bound_exceeded: 0,
        };
        for (f, r) in forward.iter().zip(backward) {
            let deviation = (f.0 + r.0 - initial_sum).abs();
            summary.max_deviation = summary.max_deviation.max(deviation);
            if deviation > f.1 + r.1 {
                summary.bound_exceeded += 1;
            }
        }
        edges.push(summary);
    }

    Summary {
        final_time,
        final_frequencies,
        mean_frequency,
        frequency_spread,
        links: links.into_values().collect(),
        edges,
        first_fatal: fatal.first().copied(),
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = format_g12;
        writeln!(f, "final time: {}", g(self.final_time))?;
        for (k, w) in self.final_frequencies.iter().enumerate() {
            writeln!(f, "  omega[{k}] = {}", g(*w))?;
        }
        writeln!(
            f,
            "frequency spread: {} ({} of mean {})",
            g(self.frequency_spread),
            g(self.relative_spread()),
            g(self.mean_frequency)
        )?;
        for l in &self.links {
            writeln!(f, "  beta[{}->{}] in [{}, {}]", l.src, l.dst, l.min, l.max)?;
        }
        for e in &self.edges {
            writeln!(
                f,
                "  edge {}-{}: initial sum {}, max deviation {}, above link bound {} times",
                e.a, e.b, e.initial_sum, e.max_deviation, e.bound_exceeded
            )?;
        }
        match &self.first_fatal {
            Some(ev) => writeln!(
                f,
                "first fatal event: {} on {}->{} at t = {} (occupancy {})",
                ev.kind.as_str(),
                ev.src,
                ev.dst,
                g(ev.t),
                ev.occupancy
            ),
            None => writeln!(f, "no fatal events"),
        }
    }
}
