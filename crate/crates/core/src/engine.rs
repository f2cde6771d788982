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

//! The constructive simulation loop.
//!
//! The state is one phase trajectory per node. Each step picks the node whose
//! trajectory ends earliest, samples its buffers at the phase `d` ticks before
//! that end, runs its controller, and extends the trajectory by one sample
//! period at the corrected frequency. Because the chosen node always has the
//! shortest domain, every neighbor phase needed for the measurement is already
//! known.

use serde::Serialize;
use thiserror::Error;

use crate::controller::{Controller, Measurement};
use crate::frames;
use crate::topology::{Capacity, LinkId, NodeId, Scenario};
use crate::trace::{BufferRow, NodeRow, Series, Trace};
use crate::trajectory::{ClockTrajectory, TrajectoryError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(
        "inadmissible correction at node {node} step {k}: c = {correction} gives frequency \
         {frequency} <= omega_min {omega_min}"
    )]
    Inadmissible {
        node: NodeId,
        k: u64,
        correction: f64,
        frequency: f64,
        omega_min: f64,
    },
    #[error("trajectory query outside its domain at node {node} step {k}: {source}")]
    Domain {
        node: NodeId,
        k: u64,
        source: TrajectoryError,
    },
    #[error("expected {expected} controllers, got {got}")]
    ControllerCount { expected: usize, got: usize },
}

/// Which node to extend when several trajectories end at the same time.
/// The resulting solution does not depend on this choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestId,
    HighestId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub t_max: f64,
    /// Spacing of the resampled output series.
    pub grid_step: f64,
    pub tie_break: TieBreak,
}

impl RunOptions {
    pub fn new(t_max: f64) -> Self {
        RunOptions {
            t_max,
            grid_step: 0.5,
            tie_break: TieBreak::LowestId,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FatalKind {
    Overflow,
    Underflow,
}

impl FatalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FatalKind::Overflow => "overflow",
            FatalKind::Underflow => "underflow",
        }
    }
}

/// A buffer observed outside `[0, capacity]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FatalEvent {
    pub kind: FatalKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub t: f64,
    pub occupancy: i64,
}

impl FatalEvent {
    pub fn check(
        capacity: Capacity,
        src: NodeId,
        dst: NodeId,
        t: f64,
        occupancy: i64,
    ) -> Option<Self> {
        let kind = if occupancy < 0 {
            FatalKind::Underflow
        } else if !capacity.admits(occupancy) {
            FatalKind::Overflow
        } else {
            return None;
        };
        Some(FatalEvent {
            kind,
            src,
            dst,
            t,
            occupancy,
        })
    }
}

/// One controller invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub node: NodeId,
    pub k: u64,
    /// Wall time at which the phase equals `theta0 + k p`.
    pub sample_time: f64,
    pub measurements: Vec<Measurement>,
    /// Wall time at which the phase equals `theta0 + k p + d`; the correction
    /// takes effect here.
    pub actuation_time: f64,
    pub correction: f64,
    pub frequency: f64,
}

pub struct Engine {
    scenario: Scenario,
    trajectories: Vec<ClockTrajectory>,
    controllers: Vec<Box<dyn Controller>>,
    lambdas: Vec<i64>,
    steps: Vec<u64>,
    tie_break: TieBreak,
    samples: Vec<SampleRecord>,
    fatal: Vec<FatalEvent>,
}

impl Engine {
    /// Sets up the initial phase histories and the per-link constants.
    pub fn new(
        scenario: Scenario,
        controllers: Vec<Box<dyn Controller>>,
    ) -> Result<Self, EngineError> {
        let n = scenario.topology().n_nodes();
        if controllers.len() != n {
            return Err(EngineError::ControllerCount {
                expected: n,
                got: controllers.len(),
            });
        }
        let params = scenario.params();
        let trajectories = params
            .nodes
            .iter()
            .enumerate()
            .map(|(k, node)| {
                ClockTrajectory::initial(
                    node.theta0,
                    node.omega_pre,
                    node.omega_init,
                    params.epoch,
                    params.delay as f64,
                    params.omega_min,
                )
                .map_err(|source| EngineError::Domain {
                    node: NodeId(k),
                    k: 0,
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let topo = scenario.topology();
        let lambdas = topo
            .link_ids()
            .map(|id| {
                let link = topo.link(id);
                frames::offset_constant(
                    &trajectories[link.src.0],
                    &trajectories[link.dst.0],
                    link,
                    scenario.initial_occupancy(id),
                    0.0,
                )
                .map_err(|source| EngineError::Domain {
                    node: link.dst,
                    k: 0,
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Engine {
            steps: vec![0; n],
            scenario,
            trajectories,
            controllers,
            lambdas,
            tie_break: TieBreak::LowestId,
            samples: Vec::new(),
            fatal: Vec::new(),
        })
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn trajectories(&self) -> &[ClockTrajectory] {
        &self.trajectories
    }

    pub fn trajectory(&self, i: NodeId) -> &ClockTrajectory {
        &self.trajectories[i.0]
    }

    pub fn lambdas(&self) -> &[i64] {
        &self.lambdas
    }

    pub fn lambda(&self, link: LinkId) -> i64 {
        self.lambdas[link.0]
    }

    pub fn steps_taken(&self, i: NodeId) -> u64 {
        self.steps[i.0]
    }

    pub fn samples(&self) -> &[SampleRecord] {
        &self.samples
    }

    pub fn fatal_events(&self) -> &[FatalEvent] {
        &self.fatal
    }

    /// Least-advanced node; ties resolved by the configured rule.
    pub fn next_node(&self) -> NodeId {
        let ends = self.trajectories.iter().map(ClockTrajectory::max_dom);
        let pick = match self.tie_break {
            TieBreak::LowestId => {
                ends.enumerate().fold(
                    (0, f64::INFINITY),
                    |best, (k, s)| if s < best.1 { (k, s) } else { best },
                )
            }
            TieBreak::HighestId => {
                ends.enumerate().fold(
                    (0, f64::INFINITY),
                    |best, (k, s)| if s <= best.1 { (k, s) } else { best },
                )
            }
        };
        NodeId(pick.0)
    }

    /// Domain end of the least-advanced trajectory.
    pub fn horizon(&self) -> f64 {
        self.trajectories
            .iter()
            .map(ClockTrajectory::max_dom)
            .fold(f64::INFINITY, f64::min)
    }

    /// Occupancy of the buffer fed by `link` at time `t`.
    pub fn buffer_occupancy(&self, link: LinkId, t: f64) -> Result<i64, TrajectoryError> {
        let l = self.scenario.topology().link(link);
        frames::buffer_occupancy(
            &self.trajectories[l.src.0],
            &self.trajectories[l.dst.0],
            l,
            self.lambdas[link.0],
            t,
        )
    }

    /// Buffer occupancies at node `i` at time `t`, by ascending neighbor id.
    pub fn measure(&self, i: NodeId, t: f64) -> Result<Vec<Measurement>, TrajectoryError> {
        let topo = self.scenario.topology();
        let neighbors = topo.neighbors(i).expect("node in range");
        neighbors
            .iter()
            .map(|&j| {
                let link = topo.link_between(j, i).expect("neighbor has a link");
                Ok(Measurement {
                    neighbor: j,
                    occupancy: self.buffer_occupancy(link, t)?,
                })
            })
            .collect()
    }

    /// Extends the least-advanced trajectory by one sample period.
    pub fn step(&mut self) -> Result<&SampleRecord, EngineError> {
        let i = self.next_node();
        let k = self.steps[i.0];
        let params = self.scenario.params();
        let node = *self.scenario.node(i);
        let (period, delay) = (params.period, params.delay);
        let omega_min = params.omega_min;
        let domain = |source| EngineError::Domain { node: i, k, source };

        let theta = &self.trajectories[i.0];
        let actuation_time = theta.max_dom();
        let sample_time = theta
            .inverse(node.theta0 + (k * period) as f64)
            .map_err(domain)?;
        let measurements = self.measure(i, sample_time).map_err(domain)?;

        let capacity = self.scenario.topology().capacity();
        for m in &measurements {
            if let Some(ev) = FatalEvent::check(capacity, m.neighbor, i, sample_time, m.occupancy) {
                self.fatal.push(ev);
            }
        }

        let correction = self.controllers[i.0].update(&measurements);
        let frequency = correction + node.omega_u;
        let inadmissible = EngineError::Inadmissible {
            node: i,
            k,
            correction,
            frequency,
            omega_min,
        };
        if !(frequency > omega_min) {
            return Err(inadmissible);
        }
        let next_phase = node.theta0 + ((k + 1) * period + delay) as f64;
        self.trajectories[i.0]
            .append(actuation_time + period as f64 / frequency, next_phase)
            .map_err(|_| inadmissible)?;
        self.steps[i.0] = k + 1;

        self.samples.push(SampleRecord {
            node: i,
            k,
            sample_time,
            measurements,
            actuation_time,
            correction,
            frequency,
        });
        Ok(self.samples.last().expect("just pushed"))
    }

    /// Steps until every trajectory extends past `t_max`.
    pub fn run_until(&mut self, t_max: f64) -> Result<(), EngineError> {
        while self.horizon() <= t_max {
            self.step()?;
        }
        Ok(())
    }

    /// Resamples the state on the output grid and packages the run.
    pub fn into_trace(mut self, options: &RunOptions) -> Trace {
        let series = self.resample(options);
        self.fatal.sort_by(|a, b| {
            a.t.total_cmp(&b.t)
                .then((a.src, a.dst).cmp(&(b.src, b.dst)))
        });
        Trace {
            scenario: self.scenario,
            trajectories: self.trajectories,
            lambdas: self.lambdas,
            samples: self.samples,
            series,
            fatal: self.fatal,
            t_max: options.t_max,
            grid_step: options.grid_step,
            fingerprint: None,
        }
    }

    fn resample(&mut self, options: &RunOptions) -> Series {
        let mut series = Series::default();
        let horizon = options.t_max.min(self.horizon());
        if !(options.grid_step > 0.0) {
            return series;
        }
        let topo = self.scenario.topology().clone();
        let capacity = topo.capacity();
        let count = (horizon / options.grid_step + 1e-9).floor() as u64;
        for n in 0..=count {
            let t = n as f64 * options.grid_step;
            for (k, theta) in self.trajectories.iter().enumerate() {
                series.nodes.push(NodeRow {
                    t,
                    node: NodeId(k),
                    theta: theta.eval(t).expect("grid inside horizon"),
                    omega: theta.slope_at(t).expect("grid inside horizon"),
                });
            }
            for id in topo.link_ids() {
                let link = topo.link(id);
                let beta = self.buffer_occupancy(id, t).expect("grid inside horizon");
                let gamma = frames::link_occupancy(&self.trajectories[link.src.0], link, t)
                    .expect("grid inside horizon");
                if let Some(ev) = FatalEvent::check(capacity, link.src, link.dst, t, beta) {
                    self.fatal.push(ev);
                }
                series.buffers.push(BufferRow {
                    t,
                    src: link.src,
                    dst: link.dst,
                    beta,
                    gamma,
                });
            }
        }
        series
    }
}

/// Runs a scenario to `options.t_max`.
pub fn run(
    scenario: &Scenario,
    controllers: Vec<Box<dyn Controller>>,
    options: &RunOptions,
) -> Result<Trace, EngineError> {
    let mut engine = Engine::new(scenario.clone(), controllers)?.with_tie_break(options.tie_break);
    engine.run_until(options.t_max)?;
    Ok(engine.into_trace(options))
}
