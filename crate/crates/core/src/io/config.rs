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

//! Scenario configuration files.
//!
//! A scenario is a JSON document with four sections:
//!
//! ```json
//! {
//!   "name": "paper_triangle",
//!   "topology": {
//!     "nodes": 3,
//!     "buffer_capacity": null,
//!     "links": [{ "src": 0, "dst": 1, "latency": 1.0, "initial_occupancy": 50 }, ...]
//!   },
//!   "params": {
//!     "period": 10, "delay": 2, "omega_min": 0.1, "epoch": -25.0,
//!     "nodes": [{ "theta0": 0.1, "omega_u": 1.1 }, ...]
//!   },
//!   "controller": { "kind": "proportional", "gain": 0.01 },
//!   "run": { "t_max": 500.0, "output_step": 0.5 }
//! }
//! ```
//!
//! Links are directed and both directions of every edge must be listed. A
//! link may carry `"gearbox": { "num": 2, "den": 1 }`. Per-node `omega_init`
//! and `omega_pre` (the frequencies before the first actuation and before
//! `t = 0`) default to `omega_u`. `buffer_capacity` is a frame count or
//! `null` for unbounded buffers.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controller::{Controller, ControllerSpec};
use crate::engine::{self, EngineError, RunOptions, TieBreak};
use crate::topology::{
    self, Capacity, Gearbox, Link, NodeParams, Scenario, SystemParams, Topology, Violation,
};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub topology: TopologyConfig,
    pub params: ParamsConfig,
    pub controller: ControllerSpec,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub nodes: usize,
    #[serde(default)]
    pub buffer_capacity: Option<u64>,
    pub links: Vec<LinkConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub src: usize,
    pub dst: usize,
    pub latency: f64,
    pub initial_occupancy: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gearbox: Option<Gearbox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub period: u64,
    pub delay: u64,
    pub omega_min: f64,
    pub epoch: f64,
    pub nodes: Vec<NodeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub theta0: f64,
    pub omega_u: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_pre: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_max: f64,
    #[serde(default = "default_output_step")]
    pub output_step: f64,
    /// Seed used when this scenario was generated by a randomized sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tie_break: TieBreak,
}

fn default_output_step() -> f64 {
    0.5
}

/// A constraint violation located in the config document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigViolation {
    pub path: String,
    pub violation: Violation,
}

impl std::fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.violation)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario:\n{}", list(.0))]
    Invalid(Vec<ConfigViolation>),
    #[error("invalid run settings: {0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn list(v: &[ConfigViolation]) -> String {
    v.iter()
        .map(|c| format!("  {c}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A config together with the scenario it validated to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
}

impl LoadedConfig {
    pub fn fingerprint(&self) -> String {
        self.config.fingerprint()
    }

    pub fn controllers(&self) -> Vec<Box<dyn Controller>> {
        self.config
            .controller
            .build_all(self.scenario.topology().n_nodes())
    }

    pub fn run_options(&self, t_max: Option<f64>) -> RunOptions {
        RunOptions {
            t_max: t_max.unwrap_or(self.config.run.t_max),
            grid_step: self.config.run.output_step,
            tie_break: self.config.run.tie_break,
        }
    }

    /// Runs the scenario with its configured controller.
    pub fn run(&self, t_max: Option<f64>) -> Result<Trace, EngineError> {
        let mut trace = engine::run(&self.scenario, self.controllers(), &self.run_options(t_max))?;
        trace.fingerprint = Some(self.fingerprint());
        Ok(trace)
    }
}

impl ScenarioConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn topology(&self) -> Topology {
        let capacity = match self.topology.buffer_capacity {
            Some(max) => Capacity::Bounded(max),
            None => Capacity::Unbounded,
        };
        let links = self
            .topology
            .links
            .iter()
            .map(|l| Link::new(l.src, l.dst, l.latency).with_gearbox(l.gearbox.unwrap_or_default()))
            .collect();
        Topology::new(self.topology.nodes, links, capacity)
    }

    pub fn system_params(&self, topology: &Topology) -> SystemParams {
        // Occupancies follow the topology's (src, dst) link order.
        let initial_occupancy = topology
            .links()
            .iter()
            .map(|link| {
                self.topology
                    .links
                    .iter()
                    .find(|c| c.src == link.src.0 && c.dst == link.dst.0)
                    .map_or(0, |c| c.initial_occupancy)
            })
            .collect();
        SystemParams {
            period: self.params.period,
            delay: self.params.delay,
            omega_min: self.params.omega_min,
            epoch: self.params.epoch,
            nodes: self
                .params
                .nodes
                .iter()
                .map(|n| NodeParams {
                    theta0: n.theta0,
                    omega_u: n.omega_u,
                    omega_init: n.omega_init.unwrap_or(n.omega_u),
                    omega_pre: n.omega_pre.unwrap_or(n.omega_u),
                })
                .collect(),
            initial_occupancy,
        }
    }

    /// Validates the config and builds the scenario.
    pub fn validate(&self) -> Result<Scenario, ConfigError> {
        let topology = self.topology();
        let params = self.system_params(&topology);
        let mut found = match topology::validate(topology, params) {
            Ok(scenario) => {
                if !(self.run.t_max > 0.0) || !(self.run.output_step > 0.0) {
                    return Err(ConfigError::Run(format!(
                        "t_max {} and output_step {} must be positive",
                        self.run.t_max, self.run.output_step
                    )));
                }
                return Ok(scenario);
            }
            Err(v) => v,
        };
        let located = found
            .drain(..)
            .map(|violation| ConfigViolation {
                path: self.path_of(&violation),
                violation,
            })
            .collect();
        Err(ConfigError::Invalid(located))
    }

    fn link_path(&self, name: &str, field: &str) -> String {
        let index = self
            .topology
            .links
            .iter()
            .position(|l| format!("{}->{}", l.src, l.dst) == name);
        match index {
            Some(k) if field.is_empty() => format!("topology.links[{k}]"),
            Some(k) => format!("topology.links[{k}].{field}"),
            None => "topology.links".to_string(),
        }
    }

    fn path_of(&self, v: &Violation) -> String {
        use Violation::*;
        let node = |id: &topology::NodeId, field: &str| format!("params.nodes[{}].{field}", id.0);
        match v {
            NoNodes => "topology.nodes".into(),
            UnknownNode { link, .. }
            | SelfLink { link }
            | DuplicateLink { link }
            | MissingReverseLink { link } => self.link_path(link, ""),
            NonPositiveLatency { link, .. } => self.link_path(link, "latency"),
            EpochTooLate { .. } | EpochNotNegative(_) => "params.epoch".into(),
            InvalidGearbox { link, .. } | GearedPhaseNearInteger { link, .. } => {
                self.link_path(link, "gearbox")
            }
            NegativeOccupancy { link, .. } | OccupancyAboveCapacity { link, .. } => {
                self.link_path(link, "initial_occupancy")
            }
            NonPositivePeriod => "params.period".into(),
            NonPositiveDelay | DelayNotBelowPeriod { .. } => "params.delay".into(),
            NonPositiveMinFrequency(_) => "params.omega_min".into(),
            NodeCountMismatch { .. } => "params.nodes".into(),
            OccupancyCountMismatch { .. } => "topology.links".into(),
            InitialPhaseIntegral { node: id, .. }
            | InitialPhaseNotPositive { node: id, .. }
            | InitialPhaseNearInteger { node: id, .. } => node(id, "theta0"),
            NonPositiveUncorrectedFrequency { node: id, .. } => node(id, "omega_u"),
            InitialFrequencyTooLow {
                node: id, which, ..
            } => node(id, which),
        }
    }
}

/// Parses and validates a scenario document.
pub fn load_config(text: &str) -> Result<LoadedConfig, ConfigError> {
    let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let scenario = config.validate()?;
    Ok(LoadedConfig { config, scenario })
}

pub fn load_config_file(path: impl AsRef<std::path::Path>) -> Result<LoadedConfig, ConfigError> {
    load_config(&std::fs::read_to_string(path)?)
}

/// The three-node triangle with the proportional controller, as bundled in
/// `scenarios/paper_triangle.json`.
pub fn paper_triangle() -> LoadedConfig {
    load_config(PAPER_TRIANGLE).expect("bundled scenario is valid")
}

pub const PAPER_TRIANGLE: &str = include_str!("../../scenarios/paper_triangle.json");
