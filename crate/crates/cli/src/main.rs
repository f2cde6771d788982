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

//! `afm`: run, verify, summarize and plot abstract frame model scenarios.
//!
//! Exit status is 0 on success, 1 when a run hits a buffer overflow or
//! underflow or verification finds a mismatch, and 2 on any other error.

use std::path::PathBuf;
use std::process::ExitCode;

use afm_core::io::{self, output::format_g12, LoadedConfig};
use afm_core::oracle::{self, Quantity};
use afm_core::sweep::{random_config, SweepRanges};
use afm_core::Admissibility;
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afm", version, about = "Abstract frame model simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its trace files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `run.t_max` from the config.
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Run even if the controller fails the static admissibility check.
        #[arg(long)]
        force: bool,
    },
    /// Simulate a scenario and check it against the frame-level oracle.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        force: bool,
    },
    /// Print statistics for a trace directory.
    Summarize {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Write a matplotlib script for a trace directory.
    Plot {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Print a random admissible scenario config.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Status {
    Ok,
    Failed,
}

fn load(path: &PathBuf, force: bool) -> Result<LoadedConfig> {
    let loaded =
        io::load_config_file(path).with_context(|| format!("loading {}", path.display()))?;
    let omega_u: Vec<f64> = loaded
        .scenario
        .params()
        .nodes
        .iter()
        .map(|n| n.omega_u)
        .collect();
    if let Admissibility::Inadmissible(w) = loaded
        .config
        .controller
        .admissibility(&omega_u, loaded.scenario.params().omega_min)
    {
        let msg = format!(
            "controller is not admissible: node {} can reach frequency {} <= omega_min {}",
            w.node, w.lowest_frequency, w.omega_min
        );
        if !force {
            bail!("{msg} (pass --force to run anyway)");
        }
        eprintln!("warning: {msg}");
    }
    Ok(loaded)
}

fn execute(command: Command) -> Result<Status> {
    match command {
        Command::Run {
            config,
            t_max,
            out,
            force,
        } => {
            let loaded = load(&config, force)?;
            let trace = loaded.run(t_max)?;
            io::write_trace(&trace, &out).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {}", out.display());
            print!("{}", io::summarize(&trace));
            Ok(if trace.is_fatal() {
                Status::Failed
            } else {
                Status::Ok
            })
        }
        Command::Verify {
            config,
            t_max,
            force,
        } => {
            let loaded = load(&config, force)?;
            let trace = loaded.run(t_max)?;
            let (out, report) = oracle::verify(&trace)?;
            println!(
                "{} frame events replayed to t = {}",
                out.events.len(),
                format_g12(trace.t_max)
            );
            println!(
                "{} comparisons, {} mismatches, {} boundary grid rows skipped",
                report.checked,
                report.mismatches.len(),
                report.skipped
            );
            if let Some(m) = report.first() {
                let what = match m.quantity {
                    Quantity::SampledBuffer => "sampled buffer",
                    Quantity::GridBuffer => "grid buffer",
                    Quantity::GridLink => "grid link",
                };
                println!(
                    "first mismatch: {what} {}->{} at t = {}: oracle {:?}, formula {}",
                    m.src,
                    m.dst,
                    format_g12(m.t),
                    m.oracle,
                    m.formula
                );
            }
            for v in &out.violations {
                let link = trace.scenario.topology().link(v.link);
                println!(
                    "{} on {link} at t = {} (occupancy {})",
                    v.kind.as_str(),
                    format_g12(v.t),
                    v.occupancy
                );
            }
            let ok = report.is_clean() && !trace.is_fatal() && out.fifo_breaks.is_empty();
            Ok(if ok { Status::Ok } else { Status::Failed })
        }
        Command::Summarize { trace } => {
            let files = io::read_trace_dir(&trace)
                .with_context(|| format!("reading {}", trace.display()))?;
            if let Some(fp) = &files.meta.fingerprint {
                println!("fingerprint: {fp}");
            }
            print!("{}", io::summarize_series(&files.series, &files.fatal));
            Ok(if files.fatal.is_empty() {
                Status::Ok
            } else {
                Status::Failed
            })
        }
        Command::Plot { trace } => {
            let path = io::emit_plot_script(&trace)
                .with_context(|| format!("writing into {}", trace.display()))?;
            println!("{}", path.display());
            Ok(Status::Ok)
        }
        Command::Generate { seed, out } => {
            let json = random_config(seed, &SweepRanges::default()).to_json() + "\n";
            match out {
                Some(path) => std::fs::write(&path, json)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{json}"),
            }
            Ok(Status::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
