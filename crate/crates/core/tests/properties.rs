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

use afm_core::controller::ControllerSpec;
use afm_core::engine::{RunOptions, TieBreak};
use afm_core::io::LoadedConfig;
use afm_core::oracle;
use afm_core::sweep::{random_config, SweepRanges};
use afm_core::topology::{validate, Capacity, NodeParams, SystemParams, Topology};
use afm_core::{frames, run, Trace};
use proptest::prelude::*;

fn loaded(seed: u64, t_max: f64) -> LoadedConfig {
    let config = random_config(
        seed,
        &SweepRanges {
            t_max,
            ..SweepRanges::default()
        },
    );
    let scenario = config.validate().unwrap();
    LoadedConfig { config, scenario }
}

fn assert_same_knots(a: &Trace, b: &Trace, perm: &[usize]) {
    for (k, theta) in a.trajectories.iter().enumerate() {
        let other = &b.trajectories[perm[k]];
        assert_eq!(theta.len(), other.len(), "node {k}");
        for ((ta, pa), (tb, pb)) in theta.knots().zip(other.knots()) {
            assert!((ta - tb).abs() <= 1e-9 && (pa - pb).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_agrees_on_random_scenarios(seed in 0u64..1_000_000) {
        let trace = loaded(seed, 80.0).run(None).unwrap();
        let (out, report) = oracle::verify(&trace).unwrap();
        prop_assert!(report.is_clean(), "{:?}", report.first());
        prop_assert!(out.fifo_breaks.is_empty());
    }

    #[test]
    fn conservation_and_received_equals_sent_delayed(seed in 0u64..1_000_000, u in 0.0f64..1.0, w in 0.0f64..1.0) {
        let trace = loaded(seed, 60.0).run(None).unwrap();
        let topo = trace.scenario.topology();
        let th = &trace.trajectories;
        let t = u * 60.0;
        for (ab, ba) in topo.edges() {
            let (la, lb) = (topo.link(ab), topo.link(ba));
            let total = frames::buffer_occupancy(&th[la.src.0], &th[la.dst.0], la, trace.lambdas[ab.0], t).unwrap()
                + frames::link_occupancy(&th[la.src.0], la, t).unwrap()
                + frames::buffer_occupancy(&th[lb.src.0], &th[lb.dst.0], lb, trace.lambdas[ba.0], t).unwrap()
                + frames::link_occupancy(&th[lb.src.0], lb, t).unwrap();
            prop_assert_eq!(total, trace.lambdas[ab.0] + trace.lambdas[ba.0]);

            // buffer difference = received - sent over (s, t]
            let s = w * t;
            let beta = |x| frames::buffer_occupancy(&th[la.src.0], &th[la.dst.0], la, trace.lambdas[ab.0], x).unwrap();
            let received = frames::frames_received(&th[la.src.0], la, s, t).unwrap();
            let consumed = frames::frames_sent(&th[la.dst.0], la.gearbox, s, t).unwrap();
            prop_assert_eq!(beta(t) - beta(s), received - consumed);
        }
    }

    #[test]
    fn tie_break_and_labels_do_not_matter(seed in 0u64..1_000_000, rot in 1usize..6) {
        let base = loaded(seed, 80.0);
        let a = base.run(None).unwrap();
        let mut options = base.run_options(None);
        options.tie_break = TieBreak::HighestId;
        let b = run(&base.scenario, base.controllers(), &options).unwrap();
        let n = base.scenario.topology().n_nodes();
        let identity: Vec<usize> = (0..n).collect();
        assert_same_knots(&a, &b, &identity);

        let perm: Vec<usize> = (0..n).map(|k| (k + rot) % n).collect();
        let relabeled = base.scenario.relabel(&perm).unwrap();
        let c = run(&relabeled, base.controllers(), &base.run_options(None)).unwrap();
        assert_same_knots(&a, &c, &perm);
    }
}

/// Identical nodes end their trajectories at the same instants, so every step
/// is a tie.
#[test]
fn tie_heavy_runs_are_order_independent() {
    let topo = Topology::from_edges(
        4,
        &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
        Capacity::Unbounded,
    );
    let s = validate(
        topo,
        SystemParams {
            period: 8,
            delay: 3,
            omega_min: 0.2,
            epoch: -20.0,
            nodes: vec![NodeParams::steady(0.5, 1.0); 4],
            initial_occupancy: vec![10, 12, 10, 11, 9, 10, 13, 10],
        },
    )
    .unwrap();
    let spec = ControllerSpec::proportional(0.01);
    let mut options = RunOptions::new(150.0);
    let a = run(&s, spec.build_all(4), &options).unwrap();
    options.tie_break = TieBreak::HighestId;
    let b = run(&s, spec.build_all(4), &options).unwrap();
    assert_ne!(
        a.samples.iter().map(|r| r.node).collect::<Vec<_>>(),
        b.samples.iter().map(|r| r.node).collect::<Vec<_>>(),
        "tie-breaks should change the update order"
    );
    assert_same_knots(&a, &b, &[0, 1, 2, 3]);
    let (_, report) = oracle::verify(&a).unwrap();
    assert!(report.is_clean());
}

/// With equal uncorrected frequencies, the node that sees more frames in its
/// buffers speeds up more.
#[test]
fn proportional_correction_follows_occupancy() {
    let topo = Topology::from_edges(2, &[(0, 1, 1.0)], Capacity::Unbounded);
    let s = validate(
        topo,
        SystemParams {
            period: 10,
            delay: 2,
            omega_min: 0.1,
            epoch: -25.0,
            nodes: vec![NodeParams::steady(0.3, 1.0), NodeParams::steady(0.7, 1.0)],
            // beta_10 (at node 0) > beta_01 (at node 1)
            initial_occupancy: vec![20, 40],
        },
    )
    .unwrap();
    let trace = run(
        &s,
        ControllerSpec::proportional(0.01).build_all(2),
        &RunOptions::new(20.0),
    )
    .unwrap();
    let first = |i: usize| {
        trace
            .samples
            .iter()
            .find(|r| r.node.0 == i && r.k == 0)
            .unwrap()
    };
    assert!(first(0).measurements[0].occupancy > first(1).measurements[0].occupancy);
    assert!(first(0).correction > first(1).correction);
}
