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

//! Shared fixtures for the simulator benchmarks.

use afm_core::io::{self, LoadedConfig};
use afm_core::sweep::{random_config, SweepRanges};

/// The three-node reference scenario.
pub fn triangle() -> LoadedConfig {
    io::paper_triangle()
}

/// A random connected scenario with `nodes` nodes.
pub fn random(seed: u64, nodes: usize, t_max: f64) -> LoadedConfig {
    let ranges = SweepRanges {
        nodes: (nodes, nodes),
        t_max,
        ..SweepRanges::default()
    };
    let config = random_config(seed, &ranges);
    let scenario = config.validate().expect("sweep configs are valid");
    LoadedConfig { config, scenario }
}
