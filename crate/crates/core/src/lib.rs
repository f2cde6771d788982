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

//! Simulation of the abstract frame model of a bittide network.
//!
//! Each node runs a clock whose phase `theta_i(t)` is piecewise linear in wall
//! time. A node sends one frame per outgoing link and removes one frame from
//! each of its elastic buffers every time its phase crosses an integer, so the
//! position of every frame follows from the phase histories alone. Every `p`
//! local ticks a node samples its buffer occupancies and, `d` ticks later,
//! applies a frequency correction chosen by its controller.
//!
//! * [`trajectory`]: phase histories.
//! * [`topology`]: graph, parameters and validation.
//! * [`frames`]: frame counts as differences of floors.
//! * [`controller`]: decentralized controllers and admissibility.
//! * [`engine`]: the simulation loop.
//! * [`oracle`]: frame-by-frame replay for cross-checking [`frames`].
//! * [`io`]: config files, trace files, summaries and plots.

// `!(x > 0.0)` style checks are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod engine;
pub mod frames;
pub mod io;
pub mod oracle;
pub mod sweep;
pub mod topology;
pub mod trace;
pub mod trajectory;

pub use controller::{Admissibility, Controller, ControllerKind, ControllerSpec, Measurement};
pub use engine::{
    run, Engine, EngineError, FatalEvent, FatalKind, RunOptions, SampleRecord, TieBreak,
};
pub use topology::{
    validate, Capacity, Gearbox, Link, LinkId, NodeId, NodeParams, Scenario, SystemParams,
    Topology, Violation,
};
pub use trace::Trace;
pub use trajectory::{ClockTrajectory, TrajectoryError};
