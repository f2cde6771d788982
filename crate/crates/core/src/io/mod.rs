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

//! Configuration loading, trace files, summaries and plotting.

pub mod config;
pub mod output;
pub mod plot;
pub mod summary;

pub use config::{
    load_config, load_config_file, paper_triangle, ConfigError, LoadedConfig, ScenarioConfig,
};
pub use output::{read_trace_dir, write_trace, OutputError, TraceFiles};
pub use plot::emit_plot_script;
pub use summary::{summarize, summarize_series, Summary};
