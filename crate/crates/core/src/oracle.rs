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

//! Frame-by-frame discrete-event replay.
//!
//! Given finished phase trajectories, the oracle enumerates every integer
//! crossing of every (geared) clock, moves individual frames through FIFO
//! links and elastic buffers, and records exact occupancies as step functions
//! of wall time. It shares no counting code with [`crate::frames`], so it can
//! be used to check those formulas.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

use crate::engine::FatalKind;
use crate::topology::{LinkId, NodeId, Scenario};
use crate::trace::Trace;
use crate::trajectory::{ClockTrajectory, TrajectoryError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("trajectory of node {node} does not cover the replay window: {source}")]
    Coverage {
        node: NodeId,
        source: TrajectoryError,
    },
    #[error("expected {expected} trajectories, got {got}")]
    TrajectoryCount { expected: usize, got: usize },
}

/// Ordering of events at equal times: arrivals, then consumptions, then sends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrameEventKind {
    Arrive,
    Consume,
    Send,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameEvent {
    pub kind: FrameEventKind,
    pub link: LinkId,
    pub t: f64,
    /// Tick index of the sender (for send/arrive) or receiver (for consume)
    /// at which the event happens.
    pub seq: i64,
}

impl FrameEvent {
    fn key(&self) -> (f64, FrameEventKind, LinkId, i64) {
        (self.t, self.kind, self.link, self.seq)
    }
}

impl Eq for FrameEvent {}

impl Ord for FrameEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    }
}

impl PartialOrd for FrameEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Integer-valued right-continuous step function starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    times: Vec<f64>,
    values: Vec<i64>,
}

impl StepFunction {
    fn new(initial: i64) -> Self {
        StepFunction {
            times: vec![0.0],
            values: vec![initial],
        }
    }

    fn push(&mut self, t: f64, value: i64) {
        self.times.push(t);
        self.values.push(value);
    }

    /// Value after every event at times `<= t`; `None` before `t = 0`.
    pub fn at(&self, t: f64) -> Option<i64> {
        let idx = self.times.partition_point(|&s| s <= t);
        idx.checked_sub(1).map(|k| self.values[k])
    }

    pub fn initial(&self) -> i64 {
        self.values[0]
    }

    /// `(time, value)` after each change, including the initial value.
    pub fn steps(&self) -> impl Iterator<Item = (f64, i64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn min(&self) -> i64 {
        *self.values.iter().min().expect("nonempty")
    }

    pub fn max(&self) -> i64 {
        *self.values.iter().max().expect("nonempty")
    }
}

/// A buffer leaving `[0, capacity]`, timed at the exact frame event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleViolation {
    pub kind: FatalKind,
    pub link: LinkId,
    pub t: f64,
    pub occupancy: i64,
}

#[derive(Debug, Clone)]
pub struct OracleOutput {
    pub t_max: f64,
    pub events: Vec<FrameEvent>,
    /// Buffer occupancy per link, fed by that link.
    pub buffers: Vec<StepFunction>,
    /// Frames in flight per link.
    pub in_flight: Vec<StepFunction>,
    pub violations: Vec<OracleViolation>,
    /// Arrivals that did not match the head of their link queue.
    pub fifo_breaks: Vec<FrameEvent>,
}

impl OracleOutput {
    pub fn buffer_at(&self, link: LinkId, t: f64) -> Option<i64> {
        self.buffers[link.0].at(t)
    }

    pub fn in_flight_at(&self, link: LinkId, t: f64) -> Option<i64> {
        self.in_flight[link.0].at(t)
    }

    /// Times at which the frame total on the edge `a`/`b` (both links and both
    /// buffers) differs from its value at `t = 0`. Meaningful when the two
    /// links share a gearbox ratio.
    pub fn edge_total_breaks(&self, a: LinkId, b: LinkId) -> Vec<(f64, i64)> {
        let parts = [
            &self.buffers[a.0],
            &self.in_flight[a.0],
            &self.buffers[b.0],
            &self.in_flight[b.0],
        ];
        let total = |t: f64| parts.iter().map(|f| f.at(t).expect("t >= 0")).sum::<i64>();
        let reference = total(0.0);
        let mut times: Vec<f64> = parts.iter().flat_map(|f| f.times.iter().copied()).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
            .into_iter()
            .map(|t| (t, total(t)))
            .filter(|&(_, v)| v != reference)
            .collect()
    }
}

/// Integer ticks `m` of `g * theta` with crossing time in `(from, to]`, paired
/// with their crossing times.
fn crossings(
    theta: &ClockTrajectory,
    gearbox: crate::topology::Gearbox,
    from: f64,
    to: f64,
) -> Result<Vec<(i64, f64)>, TrajectoryError> {
    let first = gearbox.floor(theta.eval(from)?) + 1;
    let last = gearbox.floor(theta.eval(to)?);
    (first..=last)
        .map(|m| Ok((m, theta.inverse(gearbox.phase_of_tick(m))?)))
        .collect()
}

/// Replays every frame on `[0, t_max]`.
pub fn replay(
    trajectories: &[ClockTrajectory],
    scenario: &Scenario,
    t_max: f64,
) -> Result<OracleOutput, OracleError> {
    let topo = scenario.topology();
    if trajectories.len() != topo.n_nodes() {
        return Err(OracleError::TrajectoryCount {
            expected: topo.n_nodes(),
            got: trajectories.len(),
        });
    }
    let capacity = topo.capacity();
    let n_links = topo.links().len();
    let mut heap = BinaryHeap::new();
    let mut queues: Vec<VecDeque<(i64, f64)>> = vec![VecDeque::new(); n_links];
    let mut buffer_count = Vec::with_capacity(n_links);
    let mut buffers = Vec::with_capacity(n_links);
    let mut in_flight = Vec::with_capacity(n_links);

    for id in topo.link_ids() {
        let link = topo.link(id);
        let src = &trajectories[link.src.0];
        let dst = &trajectories[link.dst.0];
        let coverage = |node| move |source| OracleError::Coverage { node, source };

        // Frames already on the link at t = 0 were sent on (-l, 0].
        let pending =
            crossings(src, link.gearbox, -link.latency, 0.0).map_err(coverage(link.src))?;
        for &(m, sent) in &pending {
            let arrival = sent + link.latency;
            queues[id.0].push_back((m, arrival));
            if arrival <= t_max {
                heap.push(Reverse(FrameEvent {
                    kind: FrameEventKind::Arrive,
                    link: id,
                    t: arrival,
                    seq: m,
                }));
            }
        }
        for (m, t) in crossings(src, link.gearbox, 0.0, t_max).map_err(coverage(link.src))? {
            heap.push(Reverse(FrameEvent {
                kind: FrameEventKind::Send,
                link: id,
                t,
                seq: m,
            }));
        }
        for (m, t) in crossings(dst, link.gearbox, 0.0, t_max).map_err(coverage(link.dst))? {
            heap.push(Reverse(FrameEvent {
                kind: FrameEventKind::Consume,
                link: id,
                t,
                seq: m,
            }));
        }
        let beta0 = scenario.initial_occupancy(id);
        buffer_count.push(beta0);
        buffers.push(StepFunction::new(beta0));
        in_flight.push(StepFunction::new(pending.len() as i64));
    }

    let mut events = Vec::with_capacity(heap.len() * 2);
    let mut violations = Vec::new();
    let mut fifo_breaks = Vec::new();
    while let Some(Reverse(ev)) = heap.pop() {
        let k = ev.link.0;
        let link = topo.link(ev.link);
        match ev.kind {
            FrameEventKind::Send => {
                let arrival = ev.t + link.latency;
                queues[k].push_back((ev.seq, arrival));
                if arrival <= t_max {
                    heap.push(Reverse(FrameEvent {
                        kind: FrameEventKind::Arrive,
                        link: ev.link,
                        t: arrival,
                        seq: ev.seq,
                    }));
                }
                in_flight[k].push(ev.t, queues[k].len() as i64);
            }
            FrameEventKind::Arrive => {
                match queues[k].pop_front() {
                    Some((seq, _)) if seq == ev.seq => {}
                    _ => fifo_breaks.push(ev),
                }
                in_flight[k].push(ev.t, queues[k].len() as i64);
                let before = buffer_count[k];
                buffer_count[k] += 1;
                buffers[k].push(ev.t, buffer_count[k]);
                if capacity.admits(before) && !capacity.admits(buffer_count[k]) {
                    violations.push(OracleViolation {
                        kind: FatalKind::Overflow,
                        link: ev.link,
                        t: ev.t,
                        occupancy: buffer_count[k],
                    });
                }
            }
            FrameEventKind::Consume => {
                let before = buffer_count[k];
                buffer_count[k] -= 1;
                buffers[k].push(ev.t, buffer_count[k]);
                if before >= 0 && buffer_count[k] < 0 {
                    violations.push(OracleViolation {
                        kind: FatalKind::Underflow,
                        link: ev.link,
                        t: ev.t,
                        occupancy: buffer_count[k],
                    });
                }
            }
        }
        events.push(ev);
    }

    Ok(OracleOutput {
        t_max,
        events,
        buffers,
        in_flight,
        violations,
        fifo_breaks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Buffer occupancy at a controller sample.
    SampledBuffer,
    /// Buffer occupancy on the output grid.
    GridBuffer,
    /// Link occupancy on the output grid.
    GridLink,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mismatch {
    pub t: f64,
    pub src: NodeId,
    pub dst: NodeId,
    pub quantity: Quantity,
    pub oracle: Option<i64>,
    pub formula: i64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checked: usize,
    /// Grid rows not compared because a phase sat on a frame boundary.
    pub skipped: usize,
    /// Sorted by time.
    pub mismatches: Vec<Mismatch>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn first(&self) -> Option<&Mismatch> {
        self.mismatches.first()
    }
}

/// Checks every sampled measurement and every grid row of `trace` that lies
/// within the replay window against the oracle.
pub fn compare(oracle: &OracleOutput, trace: &Trace) -> Report {
    let topo = trace.scenario.topology();
    let mut report = Report::default();
    let check = |t: f64, src: NodeId, dst: NodeId, quantity, formula: i64, report: &mut Report| {
        let link = topo.link_between(src, dst).expect("link exists");
        let oracle_value = match quantity {
            Quantity::GridLink => oracle.in_flight_at(link, t),
            _ => oracle.buffer_at(link, t),
        };
        report.checked += 1;
        if oracle_value != Some(formula) {
            report.mismatches.push(Mismatch {
                t,
                src,
                dst,
                quantity,
                oracle: oracle_value,
                formula,
            });
        }
    };
    for rec in trace
        .samples
        .iter()
        .filter(|r| r.sample_time <= oracle.t_max)
    {
        for m in &rec.measurements {
            check(
                rec.sample_time,
                m.neighbor,
                rec.node,
                Quantity::SampledBuffer,
                m.occupancy,
                &mut report,
            );
        }
    }
    for row in trace.series.buffers.iter().filter(|r| r.t <= oracle.t_max) {
        if on_boundary(trace, row.src, row.dst, row.t) {
            report.skipped += 1;
            continue;
        }
        check(
            row.t,
            row.src,
            row.dst,
            Quantity::GridBuffer,
            row.beta,
            &mut report,
        );
        check(
            row.t,
            row.src,
            row.dst,
            Quantity::GridLink,
            row.gamma,
            &mut report,
        );
    }
    report.mismatches.sort_by(|a, b| a.t.total_cmp(&b.t));
    report
}

/// Output-grid times are arbitrary, so a geared phase there can sit exactly
/// on an integer, where rounding decides the floor. Sample times are kept
/// away from integers by validation and are never skipped.
fn on_boundary(trace: &Trace, src: NodeId, dst: NodeId, t: f64) -> bool {
    const TOLERANCE: f64 = 1e-9;
    let topo = trace.scenario.topology();
    let link = topo.link(topo.link_between(src, dst).expect("link exists"));
    let g = link.gearbox.ratio();
    let phases = [
        trace.trajectories[src.0].eval(t - link.latency),
        trace.trajectories[src.0].eval(t),
        trace.trajectories[dst.0].eval(t),
    ];
    phases.into_iter().flatten().any(|p| {
        let x = g * p;
        (x - x.round()).abs() < TOLERANCE
    })
}

/// Runs the oracle over a finished trace and compares.
pub fn verify(trace: &Trace) -> Result<(OracleOutput, Report), OracleError> {
    let oracle = replay(&trace.trajectories, &trace.scenario, trace.t_max)?;
    let report = compare(&oracle, trace);
    Ok((oracle, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::ControllerSpec;
    use crate::engine::{run, RunOptions};
    use crate::topology::{validate, Capacity, Link, NodeParams, SystemParams, Topology};

    fn line(offset: f64, slope: f64) -> ClockTrajectory {
        ClockTrajectory::from_knots(
            &[
                (-30.0, offset - 30.0 * slope),
                (30.0, offset + 30.0 * slope),
            ],
            0.1,
        )
        .unwrap()
    }

    fn two_nodes(theta0: [f64; 2], omega: [f64; 2], beta0: i64) -> Scenario {
        validate(
            Topology::new(
                2,
                vec![Link::new(0, 1, 1.0), Link::new(1, 0, 1.0)],
                Capacity::Unbounded,
            ),
            SystemParams {
                period: 10,
                delay: 2,
                omega_min: 0.1,
                epoch: -25.0,
                nodes: vec![
                    NodeParams::steady(theta0[0], omega[0]),
                    NodeParams::steady(theta0[1], omega[1]),
                ],
                initial_occupancy: vec![beta0; 2],
            },
        )
        .unwrap()
    }

    #[test]
    fn identical_nodes_hold_occupancy() {
        let s = two_nodes([0.5, 0.5], [1.0, 1.0], 7);
        let theta = line(0.5, 1.0);
        let out = replay(&[theta.clone(), theta], &s, 20.0).unwrap();
        for f in &out.buffers {
            // arrivals coincide with consumptions and are applied first
            assert!(f.min() >= 6 && f.max() <= 8);
            for t in [0.0, 0.3, 5.2, 11.9, 19.99] {
                assert_eq!(f.at(t), Some(7));
            }
        }
        assert!(out.violations.is_empty());
        assert!(out.fifo_breaks.is_empty());
    }

    #[test]
    fn fast_sender_matches_hand_count() {
        // sender slope 2 on link 0 -> 1, receiver slope 1
        let s = two_nodes([0.3, 0.6], [2.0, 1.0], 20);
        let (send, recv) = (line(0.3, 2.0), line(0.6, 1.0));
        let out = replay(&[send.clone(), recv.clone()], &s, 10.0).unwrap();
        let link = LinkId(0);
        for k in 0..=97 {
            let t = 0.1 * k as f64 + 0.0123;
            // direct enumeration of crossings
            let sent = (-5..100)
                .filter(|&m| {
                    let c = (m as f64 - 0.3) / 2.0;
                    c > -1.0 && c <= t - 1.0
                })
                .count() as i64;
            let consumed = (1..100)
                .filter(|&m| {
                    let c = m as f64 - 0.6;
                    c > 0.0 && c <= t
                })
                .count() as i64;
            assert_eq!(
                out.buffer_at(link, t),
                Some(20 + sent - consumed),
                "t = {t}"
            );
            let formula = (send.eval(t - 1.0).unwrap().floor() - send.eval(-1.0).unwrap().floor())
                - (recv.eval(t).unwrap().floor() - recv.eval(0.0).unwrap().floor());
            assert_eq!(out.buffer_at(link, t), Some(20 + formula as i64));
        }
    }

    #[test]
    fn reports_first_underflow_time() {
        let s = two_nodes([0.3, 0.6], [2.0, 1.0], 2);
        let out = replay(&[line(0.3, 2.0), line(0.6, 1.0)], &s, 10.0).unwrap();
        let v = out.violations.iter().find(|v| v.link == LinkId(1)).unwrap();
        assert_eq!(v.kind, FatalKind::Underflow);
        assert_eq!(v.occupancy, -1);
        // node 0 consumes at phases 1, 2, ... i.e. t = (m - 0.3) / 2; node 1's
        // frames arrive at t = m - 0.6 + 1.
        let t = v.t;
        assert!((t * 2.0 + 0.3 - (t * 2.0 + 0.3).round()).abs() < 1e-9);
    }

    #[test]
    fn edge_totals_are_constant() {
        let s = two_nodes([0.3, 0.6], [2.0, 1.3], 20);
        let out = replay(&[line(0.3, 2.0), line(0.6, 1.3)], &s, 25.0).unwrap();
        assert!(out.edge_total_breaks(LinkId(0), LinkId(1)).is_empty());
    }

    #[test]
    fn events_are_time_ordered_and_fifo() {
        let s = two_nodes([0.3, 0.6], [2.0, 1.3], 20);
        let out = replay(&[line(0.3, 2.0), line(0.6, 1.3)], &s, 25.0).unwrap();
        assert!(out.events.windows(2).all(|w| w[0] <= w[1]));
        let arrivals: Vec<i64> = out
            .events
            .iter()
            .filter(|e| e.kind == FrameEventKind::Arrive && e.link == LinkId(0))
            .map(|e| e.seq)
            .collect();
        assert!(arrivals.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn engine_run_agrees_with_oracle() {
        let s = two_nodes([0.3, 0.6], [1.2, 1.7], 30);
        let trace = run(
            &s,
            ControllerSpec::proportional(0.02).build_all(2),
            &RunOptions::new(60.0),
        )
        .unwrap();
        let (_, report) = verify(&trace).unwrap();
        assert!(report.checked > 100);
        assert!(report.is_clean(), "{:?}", report.first());
    }

    #[test]
    fn short_trajectories_are_rejected() {
        let s = two_nodes([0.5, 0.5], [1.0, 1.0], 7);
        let theta = line(0.5, 1.0);
        assert!(matches!(
            replay(&[theta.clone(), theta], &s, 40.0),
            Err(OracleError::Coverage { .. })
        ));
    }
}
