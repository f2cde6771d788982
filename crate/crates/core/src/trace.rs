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

//! Results of a simulation run.

use crate::engine::{FatalEvent, SampleRecord};
use crate::topology::{NodeId, Scenario};
use crate::trajectory::ClockTrajectory;

/// Node state at one output-grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRow {
    pub t: f64,
    pub node: NodeId,
    pub theta: f64,
    pub omega: f64,
}

/// Buffer and link occupancy of one directed link at one output-grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferRow {
    pub t: f64,
    pub src: NodeId,
    pub dst: NodeId,
    pub beta: i64,
    pub gamma: i64,
}

/// Grid-resampled observables, ordered by time and then node or link.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    pub nodes: Vec<NodeRow>,
    pub buffers: Vec<BufferRow>,
}

impl Series {
    pub fn times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.nodes.iter().map(|r| r.t).collect();
        ts.dedup();
        ts
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub scenario: Scenario,
    pub trajectories: Vec<ClockTrajectory>,
    pub lambdas: Vec<i64>,
    pub samples: Vec<SampleRecord>,
    pub series: Series,
    /// Sorted by time, then link.
    pub fatal: Vec<FatalEvent>,
    pub t_max: f64,
    pub grid_step: f64,
    /// Content hash of the configuration that produced the run, if known.
    pub fingerprint: Option<String>,
}

impl Trace {
    pub fn is_fatal(&self) -> bool {
        !self.fatal.is_empty()
    }

    pub fn first_fatal(&self) -> Option<&FatalEvent> {
        self.fatal.first()
    }

    /// Frequencies in effect at the latest actuation of each node.
    pub fn final_frequencies(&self) -> Vec<f64> {
        self.trajectories
            .iter()
            .map(|th| th.segment_slope(th.len() - 2))
            .collect()
    }
}
