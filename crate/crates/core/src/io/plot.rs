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

//! Plot script emission.

use std::fs;
use std::path::{Path, PathBuf};

/// Matplotlib script drawing buffer occupancy and frequency against time from
/// the CSV files next to it. Writes `plot.png` alongside.
pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Occupancy and frequency panels for an afm trace directory."""
import csv
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
trace_dir = sys.argv[1] if len(sys.argv) > 1 else here

beta = defaultdict(lambda: ([], []))
with open(os.path.join(trace_dir, "buffers.csv")) as f:
    for row in csv.DictReader(f):
        ts, vs = beta[(int(row["src"]), int(row["dst"]))]
        ts.append(float(row["t"]))
        vs.append(int(row["beta"]))

omega = defaultdict(lambda: ([], []))
with open(os.path.join(trace_dir, "nodes.csv")) as f:
    for row in csv.DictReader(f):
        ts, vs = omega[int(row["node"])]
        ts.append(float(row["t"]))
        vs.append(float(row["omega"]))

fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
for (src, dst), (ts, vs) in sorted(beta.items()):
    top.step(ts, vs, where="post", label=r"$\beta_{%d%d}$" % (src, dst))
top.set_ylabel(r"$\beta$")
top.legend(loc="right", fontsize="small")
for node, (ts, vs) in sorted(omega.items()):
    bottom.step(ts, vs, where="post", label=r"$\omega_{%d}$" % node)
bottom.set_ylabel(r"$\omega$")
bottom.set_xlabel("$t$")
bottom.legend(loc="right", fontsize="small")
fig.tight_layout()
out = os.path.join(trace_dir, "plot.png")
fig.savefig(out, dpi=150)
print(out)
"#;

/// Writes `plot.py` into the trace directory and returns its path.
pub fn emit_plot_script(trace_dir: impl AsRef<Path>) -> std::io::Result<PathBuf> {
    let path = trace_dir.as_ref().join("plot.py");
    fs::write(&path, PLOT_SCRIPT)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(&path, fs::Permissions::from_mode(0o755))?;
    }
    Ok(path)
}
