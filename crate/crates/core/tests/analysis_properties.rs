mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigvuln_core::analysis::{self, Report, SweepOptions};
use sigvuln_core::attack::{self, AttackInstance, AttackKind};
use sigvuln_core::fixed_time::Schedule;
use sigvuln_core::fixtures::{build_example_network, build_grid_network};
use sigvuln_core::milp::MilpOptions;
use sigvuln_core::network::{total_flow, FlowMatrix, RoadNetwork};

fn network() -> impl Strategy<Value = RoadNetwork> {
    prop_oneof![Just(build_example_network().0), (0u64..40).prop_map(|s| build_grid_network(2, 3, s).unwrap().0)]
}

fn any_schedule(net: &RoadNetwork, raw: &[f64]) -> Schedule {
    let d = (0..net.stages().len()).map(|s| raw[s % raw.len()] * 0.5).collect();
    Schedule::from_durations(net, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn late_queue_growth_equals_accumulation(net in network(), seed in any::<u64>(), raw in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flows = common::routed_flows(&net, &mut rng, 20, 8);
        let sched = any_schedule(&net, &raw);
        let trace = analysis::simulate_queues(&net, &flows, &sched, 100).unwrap();
        let acc = attack::accumulation(&net, &flows, &sched);
        for m in 0..net.num_movements() {
            prop_assert!((trace.slope(m, 50, 100) - acc[m]).abs() <= 1e-6, "movement {}: {} vs {}", m, trace.slope(m, 50, 100), acc[m]);
        }
        for (_, v) in trace.heatmap(&net) {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn lane_vulnerabilities_weight_back_to_network() {
    let (net, flows) = build_example_network();
    for b in 0..=3 {
        let r = attack::solve_attack(&net, &flows, &AttackInstance::new(AttackKind::WorstNetwork, b), &MilpOptions::default())
            .unwrap();
        let nv = analysis::network_vulnerability(&flows, &r).unwrap();
        let weighted: f64 = analysis::lane_vulnerabilities(&net, &flows, &r)
            .iter()
            .map(|&(l, v)| v * net.movements_out_of(l).iter().map(|&m| flows.get(m)).sum::<f64>())
            .sum();
        assert!((nv - weighted / total_flow(&flows)).abs() < 1e-9);
        let metrics = analysis::service_metrics(&net, &flows, &r).unwrap();
        assert_eq!(metrics.served_reduction, nv);
        assert!(metrics.green_reduction <= 1.0);
    }
}

#[test]
fn zero_flow_network_has_no_vulnerability() {
    let (net, flows) = build_example_network();
    let zero = FlowMatrix::zeros(flows.len());
    let r = attack::solve_attack(&net, &zero, &AttackInstance::new(AttackKind::WorstNetwork, 0), &MilpOptions::default())
        .unwrap();
    assert!(matches!(analysis::network_vulnerability(&zero, &r), Err(analysis::AnalysisError::ZeroFlow(_))));
}

#[test]
fn reports_are_byte_identical_across_runs_and_workers() {
    let (net, flows) = build_example_network();
    let mut outputs = Vec::new();
    for workers in [1, 3] {
        let opts = SweepOptions { workers, ..Default::default() };
        let rows = analysis::budget_sweep(&net, &flows, &AttackKind::WorstNetwork, 2, &opts).unwrap();
        let critical = analysis::critical_sensors(&net, &rows).unwrap();
        let sched = &rows.last().unwrap().result.realized;
        let trace = analysis::simulate_queues(&net, &flows, sched, 100).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = Report { sweep: Some(&rows), critical: Some(&critical), schedule: Some(sched), trace: Some(&trace) };
        let paths = analysis::emit_report(dir.path(), &net, &flows, &report).unwrap();
        assert_eq!(paths.len(), 4);
        let bytes: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
        outputs.push(bytes);
    }
    assert_eq!(outputs[0], outputs[1]);
}
