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

use std::hint::black_box;

use afm_bench::{random, triangle};
use afm_core::{oracle, run};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn engine(c: &mut Criterion) {
    let tri = triangle();
    c.bench_function("engine/triangle_t500", |b| {
        b.iter(|| run(&tri.scenario, tri.controllers(), &tri.run_options(None)).unwrap())
    });

    let mut group = c.benchmark_group("engine/random_t200");
    for nodes in [3, 6, 12] {
        let loaded = random(42, nodes, 200.0);
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &loaded, |b, l| {
            b.iter(|| run(&l.scenario, l.controllers(), &l.run_options(None)).unwrap())
        });
    }
    group.finish();
}

fn queries(c: &mut Criterion) {
    let trace = triangle().run(None).unwrap();
    let theta = &trace.trajectories[2];
    let end = theta.max_dom();
    c.bench_function("trajectory/eval_inverse", |b| {
        let mut t = 0.0;
        b.iter(|| {
            t = (t + 0.731) % end;
            black_box(theta.inverse(theta.eval(black_box(t)).unwrap()).unwrap())
        })
    });
}

fn replay(c: &mut Criterion) {
    let trace = triangle().run(Some(200.0)).unwrap();
    c.bench_function("oracle/triangle_t200", |b| {
        b.iter(|| oracle::replay(&trace.trajectories, &trace.scenario, trace.t_max).unwrap())
    });
}

criterion_group!(benches, engine, queries, replay);
criterion_main!(benches);
