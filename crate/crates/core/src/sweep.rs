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

//! Randomized scenario generation for sweeps and property tests.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controller::ControllerSpec;
use crate::engine::TieBreak;
use crate::io::config::{
    LinkConfig, NodeConfig, ParamsConfig, RunConfig, ScenarioConfig, TopologyConfig,
};

/// Ranges for [`random_config`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRanges {
    pub nodes: (usize, usize),
    pub latency: (f64, f64),
    pub omega_u: (f64, f64),
    pub initial_occupancy: (i64, i64),
    pub gain: (f64, f64),
    pub omega_min: f64,
    pub t_max: f64,
    /// Chance of each non-tree edge being present.
    pub extra_edge_probability: f64,
}

impl Default for SweepRanges {
    fn default() -> Self {
        SweepRanges {
            nodes: (3, 6),
            latency: (0.5, 3.0),
            omega_u: (0.9, 2.1),
            initial_occupancy: (20, 80),
            gain: (0.005, 0.02),
            omega_min: 0.5,
            t_max: 200.0,
            extra_edge_probability: 0.35,
        }
    }
}

/// A connected scenario with a proportional controller, drawn from `seed`.
/// Always passes validation and the static admissibility check.
pub fn random_config(seed: u64, ranges: &SweepRanges) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(ranges.nodes.0..=ranges.nodes.1);

    // Random spanning tree plus extra edges.
    let mut edges = BTreeSet::new();
    for k in 1..n {
        let parent = rng.gen_range(0..k);
        edges.insert((parent, k));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(ranges.extra_edge_probability) {
                edges.insert((a, b));
            }
        }
    }

    let mut links = Vec::new();
    for &(a, b) in &edges {
        for (src, dst) in [(a, b), (b, a)] {
            links.push(LinkConfig {
                src,
                dst,
                latency: rng.gen_range(ranges.latency.0..=ranges.latency.1),
                initial_occupancy: rng
                    .gen_range(ranges.initial_occupancy.0..=ranges.initial_occupancy.1),
                gearbox: None,
            });
        }
    }

    let period = rng.gen_range(6..=14u64);
    let delay = rng.gen_range(1..period.min(5));
    let nodes = (0..n)
        .map(|_| NodeConfig {
            theta0: rng.gen_range(0u32..3) as f64 + rng.gen_range(0.02..0.98),
            omega_u: rng.gen_range(ranges.omega_u.0..=ranges.omega_u.1),
            omega_init: None,
            omega_pre: None,
        })
        .collect();
    let max_latency = links.iter().map(|l| l.latency).fold(0.0, f64::max);
    let epoch = -(max_latency + delay as f64 / ranges.omega_min).ceil() - 1.0;

    ScenarioConfig {
        name: format!("random-{seed}"),
        topology: TopologyConfig {
            nodes: n,
            buffer_capacity: None,
            links,
        },
        params: ParamsConfig {
            period,
            delay,
            omega_min: ranges.omega_min,
            epoch,
            nodes,
        },
        controller: ControllerSpec::proportional(rng.gen_range(ranges.gain.0..=ranges.gain.1)),
        run: RunConfig {
            t_max: ranges.t_max,
            output_step: 0.5,
            seed: Some(seed),
            tie_break: TieBreak::LowestId,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_configs_validate() {
        let ranges = SweepRanges::default();
        for seed in 0..200 {
            let config = random_config(seed, &ranges);
            let scenario = config
                .validate()
                .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            let omega_u: Vec<f64> = scenario.params().nodes.iter().map(|n| n.omega_u).collect();
            assert!(config.controller.is_admissible(&omega_u, ranges.omega_min));
            let n = scenario.topology().n_nodes();
            assert!((3..=6).contains(&n));
            // connected: every node has a neighbor
            assert!(scenario.topology().nodes().all(|i| !scenario
                .topology()
                .neighbors(i)
                .unwrap()
                .is_empty()));
        }
    }

    #[test]
    fn same_seed_same_config() {
        let r = SweepRanges::default();
        assert_eq!(random_config(7, &r), random_config(7, &r));
        assert_ne!(random_config(7, &r), random_config(8, &r));
    }
}
