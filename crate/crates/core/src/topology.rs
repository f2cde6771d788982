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

//! Node/link graph, model parameters, and their well-posedness checks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Zero-based node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Index into [`Topology::links`]. Links are sorted by `(src, dst)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

/// Rate multiplier on a link: the sender emits `num / den` frames per tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gearbox {
    pub num: u32,
    pub den: u32,
}

impl Gearbox {
    pub const UNIT: Gearbox = Gearbox { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Self {
        Gearbox { num, den }
    }

    pub fn is_unit(&self) -> bool {
        self.num == self.den
    }

    pub fn ratio(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `floor(g * phase)`.
    pub fn floor(&self, phase: f64) -> i64 {
        if self.is_unit() {
            phase.floor() as i64
        } else {
            (phase * self.num as f64 / self.den as f64).floor() as i64
        }
    }

    /// Local phase at which `g * phase` reaches the integer `m`.
    pub fn phase_of_tick(&self, m: i64) -> f64 {
        if self.is_unit() {
            m as f64
        } else {
            m as f64 * self.den as f64 / self.num as f64
        }
    }
}

impl Default for Gearbox {
    fn default() -> Self {
        Gearbox::UNIT
    }
}

impl fmt::Display for Gearbox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Directed link `src -> dst`. The elastic buffer it feeds lives at `dst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    pub latency: f64,
    pub gearbox: Gearbox,
}

impl Link {
    pub fn new(src: usize, dst: usize, latency: f64) -> Self {
        Link {
            src: NodeId(src),
            dst: NodeId(dst),
            latency,
            gearbox: Gearbox::UNIT,
        }
    }

    pub fn with_gearbox(mut self, gearbox: Gearbox) -> Self {
        self.gearbox = gearbox;
        self
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src, self.dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capacity {
    #[default]
    Unbounded,
    Bounded(u64),
}

impl Capacity {
    pub fn admits(&self, occupancy: i64) -> bool {
        match *self {
            Capacity::Unbounded => true,
            Capacity::Bounded(max) => occupancy <= max as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n_nodes: usize,
    links: Vec<Link>,
    index: BTreeMap<(NodeId, NodeId), LinkId>,
    neighbors: Vec<Vec<NodeId>>,
    capacity: Capacity,
}

impl Topology {
    /// Builds the graph without checking it; see [`validate`].
    pub fn new(n_nodes: usize, mut links: Vec<Link>, capacity: Capacity) -> Self {
        links.sort_by_key(|l| (l.src, l.dst));
        let mut index = BTreeMap::new();
        let mut neighbors = vec![Vec::new(); n_nodes];
        for (k, link) in links.iter().enumerate() {
            index.entry((link.src, link.dst)).or_insert(LinkId(k));
            // A node's neighbors are the sources of its incoming links.
            if let Some(list) = neighbors.get_mut(link.dst.0) {
                list.push(link.src);
            }
        }
        for list in &mut neighbors {
            list.sort();
            list.dedup();
        }
        Topology {
            n_nodes,
            links,
            index,
            neighbors,
            capacity,
        }
    }

    /// Bidirectional edges with the same latency in both directions.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize, f64)], capacity: Capacity) -> Self {
        let links = edges
            .iter()
            .flat_map(|&(a, b, l)| [Link::new(a, b, l), Link::new(b, a, l)])
            .collect();
        Topology::new(n_nodes, links, capacity)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n_nodes).map(NodeId)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn link_ids(&self) -> impl Iterator<Item = LinkId> {
        (0..self.links.len()).map(LinkId)
    }

    pub fn link_between(&self, src: NodeId, dst: NodeId) -> Option<LinkId> {
        self.index.get(&(src, dst)).copied()
    }

    pub fn capacity(&self) -> Capacity {
        self.capacity
    }

    /// Neighbors of `i` in ascending id order.
    pub fn neighbors(&self, i: NodeId) -> Result<&[NodeId], UnknownNode> {
        self.neighbors
            .get(i.0)
            .map(Vec::as_slice)
            .ok_or(UnknownNode(i))
    }

    /// Undirected edges `(a, b)` with `a < b`, each listed once.
    pub fn edges(&self) -> Vec<(LinkId, LinkId)> {
        self.links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.src < l.dst)
            .filter_map(|(k, l)| Some((LinkId(k), self.link_between(l.dst, l.src)?)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("unknown node {0}")]
pub struct UnknownNode(pub NodeId);

/// Per-node initial conditions and oscillator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    /// Phase at `t = 0`; must not be an integer.
    pub theta0: f64,
    /// Uncorrected oscillator frequency.
    pub omega_u: f64,
    /// Frequency on `[0, d / omega_init]`.
    pub omega_init: f64,
    /// Frequency on `[epoch, 0]`.
    pub omega_pre: f64,
}

impl NodeParams {
    /// Initial frequencies equal to the uncorrected frequency.
    pub fn steady(theta0: f64, omega_u: f64) -> Self {
        NodeParams {
            theta0,
            omega_u,
            omega_init: omega_u,
            omega_pre: omega_u,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Sample period in local ticks.
    pub period: u64,
    /// Delay from sampling to actuation in local ticks.
    pub delay: u64,
    pub omega_min: f64,
    pub epoch: f64,
    pub nodes: Vec<NodeParams>,
    /// Initial buffer occupancy per link, in [`Topology::links`] order.
    pub initial_occupancy: Vec<i64>,
}

/// Minimum distance of a sampled phase's fractional part from an integer.
pub const PHASE_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("topology has no nodes")]
    NoNodes,
    #[error("link {link} refers to a node outside 0..{n_nodes}")]
    UnknownNode { link: String, n_nodes: usize },
    #[error("link {link} is a self-link")]
    SelfLink { link: String },
    #[error("link {link} is listed more than once")]
    DuplicateLink { link: String },
    #[error("link {link} has no reverse link")]
    MissingReverseLink { link: String },
    #[error("link {link} latency {latency} is not positive")]
    NonPositiveLatency { link: String, latency: f64 },
    #[error("link {link} gearbox {gearbox} is not a positive ratio")]
    InvalidGearbox { link: String, gearbox: Gearbox },
    #[error("sample period must be positive")]
    NonPositivePeriod,
    #[error("delay must be positive")]
    NonPositiveDelay,
    #[error("delay {delay} must be smaller than period {period}")]
    DelayNotBelowPeriod { delay: u64, period: u64 },
    #[error("minimum frequency {0} is not positive")]
    NonPositiveMinFrequency(f64),
    #[error("epoch {0} is not negative")]
    EpochNotNegative(f64),
    #[error("epoch too late: {epoch} > {bound} required by link {link}")]
    EpochTooLate {
        epoch: f64,
        bound: f64,
        link: String,
    },
    #[error("expected parameters for {expected} nodes, got {got}")]
    NodeCountMismatch { expected: usize, got: usize },
    #[error("expected initial occupancies for {expected} links, got {got}")]
    OccupancyCountMismatch { expected: usize, got: usize },
    #[error("node {node} initial phase {theta0} is integral")]
    InitialPhaseIntegral { node: NodeId, theta0: f64 },
    #[error("node {node} initial phase {theta0} is not positive")]
    InitialPhaseNotPositive { node: NodeId, theta0: f64 },
    #[error("node {node} initial phase {theta0} is within {PHASE_GUARD} of an integer")]
    InitialPhaseNearInteger { node: NodeId, theta0: f64 },
    #[error("link {link}: geared sample phase {phase} is within {PHASE_GUARD} of an integer")]
    GearedPhaseNearInteger { link: String, phase: f64 },
    #[error("node {node} uncorrected frequency {omega} is not positive")]
    NonPositiveUncorrectedFrequency { node: NodeId, omega: f64 },
    #[error("node {node} {which} {omega} does not exceed minimum frequency {omega_min}")]
    InitialFrequencyTooLow {
        node: NodeId,
        which: &'static str,
        omega: f64,
        omega_min: f64,
    },
    #[error("link {link} initial occupancy {occupancy} is negative")]
    NegativeOccupancy { link: String, occupancy: i64 },
    #[error("link {link} initial occupancy {occupancy} exceeds capacity {capacity}")]
    OccupancyAboveCapacity {
        link: String,
        occupancy: i64,
        capacity: u64,
    },
}

/// A parameter set that has passed [`validate`]. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    topology: Topology,
    params: SystemParams,
}

impl Scenario {
    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn node(&self, i: NodeId) -> &NodeParams {
        &self.params.nodes[i.0]
    }

    pub fn initial_occupancy(&self, link: LinkId) -> i64 {
        self.params.initial_occupancy[link.0]
    }

    /// The same system with node `i` renamed to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Scenario, Vec<Violation>> {
        let n = self.topology.n_nodes;
        assert_eq!(perm.len(), n, "permutation length");
        let mut links = Vec::with_capacity(self.topology.links.len());
        let mut occupancy = BTreeMap::new();
        for (k, l) in self.topology.links.iter().enumerate() {
            let (src, dst) = (NodeId(perm[l.src.0]), NodeId(perm[l.dst.0]));
            links.push(Link { src, dst, ..*l });
            occupancy.insert((src, dst), self.params.initial_occupancy[k]);
        }
        let mut nodes = self.params.nodes.clone();
        for (old, &new) in perm.iter().enumerate() {
            nodes[new] = self.params.nodes[old];
        }
        let topology = Topology::new(n, links, self.topology.capacity);
        let initial_occupancy = topology
            .links
            .iter()
            .map(|l| occupancy[&(l.src, l.dst)])
            .collect();
        validate(
            topology,
            SystemParams {
                nodes,
                initial_occupancy,
                ..self.params.clone()
            },
        )
    }
}

fn fractional(x: f64) -> f64 {
    x - x.floor()
}

fn near_integer(x: f64) -> bool {
    let f = fractional(x);
    !(PHASE_GUARD..=1.0 - PHASE_GUARD).contains(&f)
}

/// Checks every well-posedness constraint and returns all violations found.
pub fn validate(topology: Topology, params: SystemParams) -> Result<Scenario, Vec<Violation>> {
    let mut v = Vec::new();
    let n = topology.n_nodes;
    if n == 0 {
        v.push(Violation::NoNodes);
    }
    if params.period == 0 {
        v.push(Violation::NonPositivePeriod);
    }
    if params.delay == 0 {
        v.push(Violation::NonPositiveDelay);
    }
    if params.delay >= params.period {
        v.push(Violation::DelayNotBelowPeriod {
            delay: params.delay,
            period: params.period,
        });
    }
    let omega_min_ok = params.omega_min > 0.0;
    if !omega_min_ok {
        v.push(Violation::NonPositiveMinFrequency(params.omega_min));
    }
    if !(params.epoch < 0.0) {
        v.push(Violation::EpochNotNegative(params.epoch));
    }
    if params.nodes.len() != n {
        v.push(Violation::NodeCountMismatch {
            expected: n,
            got: params.nodes.len(),
        });
    }
    if params.initial_occupancy.len() != topology.links.len() {
        v.push(Violation::OccupancyCountMismatch {
            expected: topology.links.len(),
            got: params.initial_occupancy.len(),
        });
    }

    for (k, node) in params.nodes.iter().enumerate() {
        let id = NodeId(k);
        if node.theta0 <= 0.0 {
            v.push(Violation::InitialPhaseNotPositive {
                node: id,
                theta0: node.theta0,
            });
        }
        if node.theta0.fract() == 0.0 {
            v.push(Violation::InitialPhaseIntegral {
                node: id,
                theta0: node.theta0,
            });
        } else if near_integer(node.theta0) {
            v.push(Violation::InitialPhaseNearInteger {
                node: id,
                theta0: node.theta0,
            });
        }
        if !(node.omega_u > 0.0) {
            v.push(Violation::NonPositiveUncorrectedFrequency {
                node: id,
                omega: node.omega_u,
            });
        }
        for (which, omega) in [
            ("omega_init", node.omega_init),
            ("omega_pre", node.omega_pre),
        ] {
            if !(omega > params.omega_min) {
                v.push(Violation::InitialFrequencyTooLow {
                    node: id,
                    which,
                    omega,
                    omega_min: params.omega_min,
                });
            }
        }
    }

    let mut seen = BTreeMap::new();
    for (k, link) in topology.links.iter().enumerate() {
        let name = link.to_string();
        if link.src.0 >= n || link.dst.0 >= n {
            v.push(Violation::UnknownNode {
                link: name.clone(),
                n_nodes: n,
            });
        }
        if link.src == link.dst {
            v.push(Violation::SelfLink { link: name.clone() });
        }
        if seen.insert((link.src, link.dst), ()).is_some() {
            v.push(Violation::DuplicateLink { link: name.clone() });
        }
        if topology.link_between(link.dst, link.src).is_none() {
            v.push(Violation::MissingReverseLink { link: name.clone() });
        }
        if !(link.latency > 0.0) {
            v.push(Violation::NonPositiveLatency {
                link: name.clone(),
                latency: link.latency,
            });
        }
        let gear_ok = link.gearbox.num > 0 && link.gearbox.den > 0;
        if !gear_ok {
            v.push(Violation::InvalidGearbox {
                link: name.clone(),
                gearbox: link.gearbox,
            });
        }
        if omega_min_ok {
            let bound = -(link.latency + params.delay as f64 / params.omega_min);
            if params.epoch > bound {
                v.push(Violation::EpochTooLate {
                    epoch: params.epoch,
                    bound,
                    link: name.clone(),
                });
            }
        }
        // The receiver samples at phases theta0 + k p; with a gearbox the floor is
        // taken of g times that phase, which cycles with period `den` in k.
        if gear_ok && !link.gearbox.is_unit() {
            if let Some(node) = params.nodes.get(link.dst.0) {
                let g = link.gearbox;
                for k in 0..g.den as u64 {
                    let phase = g.ratio() * (node.theta0 + (k * params.period) as f64);
                    if near_integer(phase) {
                        v.push(Violation::GearedPhaseNearInteger {
                            link: name.clone(),
                            phase,
                        });
                        break;
                    }
                }
            }
        }
        if let Some(&occupancy) = params.initial_occupancy.get(k) {
            if occupancy < 0 {
                v.push(Violation::NegativeOccupancy {
                    link: name.clone(),
                    occupancy,
                });
            }
            if let Capacity::Bounded(capacity) = topology.capacity {
                if occupancy > capacity as i64 {
                    v.push(Violation::OccupancyAboveCapacity {
                        link: name,
                        occupancy,
                        capacity,
                    });
                }
            }
        }
    }

    if v.is_empty() {
        Ok(Scenario { topology, params })
    } else {
        Err(v)
    }
}
