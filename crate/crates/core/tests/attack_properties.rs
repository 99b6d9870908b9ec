mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigvuln_core::attack::{
    self, AttackError, AttackInstance, AttackKind, AttackStatus, Norm, Target, DEFAULT_GRID,
};
use sigvuln_core::fixed_time;
use sigvuln_core::fixtures::{build_example_network, build_grid_network};
use sigvuln_core::lp::Sense;
use sigvuln_core::milp::{self, MilpModel, MilpOptions, MilpStatus};
use sigvuln_core::network::{check_conservation, FlowMatrix, IntersectionId, LinkId, RoadNetwork};

fn example_scaled(k: f64) -> (RoadNetwork, FlowMatrix) {
    let (net, flows) = build_example_network();
    let scaled = flows.scaled(k).unwrap();
    (net, scaled)
}

fn solve(net: &RoadNetwork, flows: &FlowMatrix, inst: &AttackInstance) -> attack::AttackResult {
    attack::solve_attack(net, flows, inst, &MilpOptions::default()).unwrap()
}

/// Maximises or minimises one intersection's Σλ with the flows pinned to
/// `ftilde`; the KKT rows must leave no freedom beyond the LP optimum.
fn kkt_extreme_sums(net: &RoadNetwork, ftilde: &FlowMatrix, n: usize, sense: Sense) -> Vec<f64> {
    let mut model = MilpModel::new(sense);
    let fv: Vec<usize> =
        (0..net.num_movements()).map(|m| model.add_var(format!("f{m}"), ftilde.get(m), ftilde.get(m), 0.0)).collect();
    let block = attack::build_kkt_inner(&mut model, net, &fv, 1e-6).unwrap();
    for &s in net.stages_of_intersection(IntersectionId(n)) {
        model.lp.objective[block.lambda[s]] = 1.0;
    }
    let sol = milp::solve_milp(&model, &MilpOptions::default()).unwrap();
    assert_eq!(sol.status, MilpStatus::Optimal);
    let x = sol.x.unwrap();
    (0..net.intersections().len())
        .map(|i| net.stages_of_intersection(IntersectionId(i)).iter().map(|&s| x[block.lambda[s]]).sum())
        .collect()
}

fn assert_kkt_matches_lp(net: &RoadNetwork, ftilde: &FlowMatrix) {
    let lp = fixed_time::solve_fixed_time(net, ftilde).unwrap();
    for n in 0..net.intersections().len() {
        for sense in [Sense::Maximize, Sense::Minimize] {
            let sums = kkt_extreme_sums(net, ftilde, n, sense);
            for (i, (got, want)) in sums.iter().zip(lp.sums()).enumerate() {
                assert!((got - want).abs() <= 1e-6, "intersection {i}: kkt {got} lp {want} ({sense:?} on {n})");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn worst_network_is_admissible_and_dominates_oracle(k in 0.4f64..1.25, budget in 0usize..=2) {
        let (net, flows) = example_scaled(k);
        let inst = AttackInstance::new(AttackKind::WorstNetwork, budget);
        let r = solve(&net, &flows, &inst);
        prop_assert_eq!(r.status, AttackStatus::Optimal);
        let issues = attack::check_admissible(&net, &flows, &inst, &r, 1e-6);
        prop_assert!(issues.is_empty(), "{:?}", issues);
        let oracle = attack::brute_force_oracle(&net, &flows, &inst, &DEFAULT_GRID).unwrap();
        prop_assert!(r.objective >= oracle.objective - 1e-6, "milp {} oracle {}", r.objective, oracle.objective);
        prop_assert!(r.realized_objective <= r.objective + 1e-6);
        prop_assert!(check_conservation(&net, &r.perturbed, 1e-6).is_empty());
    }

    #[test]
    fn worst_network_grows_with_budget(k in 0.4f64..1.25) {
        let (net, flows) = example_scaled(k);
        let mut prev = 0.0;
        for b in 0..=3 {
            let r = solve(&net, &flows, &AttackInstance::new(AttackKind::WorstNetwork, b));
            prop_assert!(r.objective >= prev - 1e-6, "budget {}: {} < {}", b, r.objective, prev);
            prev = r.objective;
        }
    }

    #[test]
    fn risk_averse_meets_targets(k in 0.5f64..1.25, shrink in 0.0f64..1.0, pick in 0usize..16) {
        let (net, flows) = example_scaled(k);
        let m = pick % net.num_movements();
        let nominal = fixed_time::service_rates(&net, &fixed_time::solve_fixed_time(&net, &flows).unwrap())[m];
        let alpha = nominal * shrink;
        let mut best = Vec::new();
        for norm in [Norm::Infinity, Norm::One] {
            let kind = AttackKind::RiskAverse { targets: vec![Target { movement: m, alpha }], norm };
            let inst = AttackInstance::new(kind.clone(), net.num_movements());
            match attack::solve_attack(&net, &flows, &inst, &MilpOptions::default()) {
                Ok(r) => {
                    let service = fixed_time::service_rates(&net, &r.schedule);
                    prop_assert!(service[m] <= alpha + 1e-6);
                    let direct = attack::evaluate_objective(&net, &flows, &kind, &r.perturbed, &r.schedule);
                    prop_assert!(direct.is_some());
                    prop_assert!((direct.unwrap() - r.objective).abs() <= 1e-6);
                    prop_assert!(attack::check_admissible(&net, &flows, &inst, &r, 1e-6).is_empty());
                    best.push(Some(r.objective));
                }
                Err(AttackError::Infeasible) => best.push(None),
                Err(e) => prop_assert!(false, "{}", e),
            }
        }
        match (best[0], best[1]) {
            (Some(inf), Some(one)) => prop_assert!(one >= inf - 1e-6),
            (None, None) => {}
            other => prop_assert!(false, "norms disagree on feasibility: {:?}", other),
        }
    }
}

#[test]
fn risk_averse_at_nominal_service_needs_no_change() {
    let (net, flows) = build_example_network();
    let nominal = fixed_time::service_rates(&net, &fixed_time::solve_fixed_time(&net, &flows).unwrap());
    for m in [net.find_movement(3, 6).unwrap(), net.find_movement(7, 4).unwrap()] {
        for norm in [Norm::Infinity, Norm::One] {
            let kind = AttackKind::RiskAverse { targets: vec![Target { movement: m, alpha: nominal[m] }], norm };
            let r = solve(&net, &flows, &AttackInstance::new(kind, 2));
            assert!(r.objective.abs() <= 1e-6);
            assert!(r.compromised.is_empty());
        }
    }
}

#[test]
fn negative_alpha_is_infeasible() {
    let (net, flows) = build_example_network();
    let kind = AttackKind::RiskAverse { targets: vec![Target { movement: 0, alpha: -1.0 }], norm: Norm::Infinity };
    let err = attack::solve_attack(&net, &flows, &AttackInstance::new(kind, 3), &MilpOptions::default());
    assert_eq!(err.unwrap_err(), AttackError::Infeasible);
}

#[test]
fn worst_lane_without_budget_is_bracketed_by_demand_and_nominal() {
    let (net, flows) = build_example_network();
    let nominal = fixed_time::service_rates(&net, &fixed_time::solve_fixed_time(&net, &flows).unwrap());
    for l in 0..net.links().len() {
        let lane = LinkId(l);
        let out = net.movements_out_of(lane);
        if out.is_empty() {
            continue;
        }
        let r = solve(&net, &flows, &AttackInstance::new(AttackKind::WorstLane { lane }, 0));
        let demand: f64 = out.iter().map(|&m| flows.get(m)).sum();
        let served: f64 = out.iter().map(|&m| nominal[m]).sum();
        assert!(r.compromised.is_empty());
        assert!(r.objective >= demand - 1e-6, "lane {l}: {} < demand {demand}", r.objective);
        assert!(r.objective <= served + 1e-6, "lane {l}: {} > nominal {served}", r.objective);
    }
}

#[test]
fn kkt_block_is_sound_on_example_flows() {
    let (net, _) = build_example_network();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let raw = common::routed_flows(&net, &mut rng, 12, 6);
        let ft = common::scale_to(&net, &raw, 0.9);
        assert_kkt_matches_lp(&net, &ft);
    }
}

#[test]
fn kkt_block_is_sound_on_small_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..4 {
        let (net, _) = build_grid_network(2, 2, seed).unwrap();
        let raw = common::routed_flows(&net, &mut rng, 25, 6);
        let ft = common::scale_to(&net, &raw, 0.9);
        assert_kkt_matches_lp(&net, &ft);
    }
}

#[test]
fn greedy_never_beats_milp() {
    let (net, flows) = build_example_network();
    for b in 1..=3 {
        let inst = AttackInstance::new(AttackKind::WorstNetwork, b);
        let g = attack::greedy_attack(&net, &flows, &inst, &DEFAULT_GRID).unwrap().unwrap();
        let r = solve(&net, &flows, &inst);
        assert!(g.objective <= r.objective + 1e-6);
        assert!(attack::check_admissible(&net, &flows, &inst, &g, 1e-6).is_empty());
    }
}

#[test]
fn oracle_refuses_large_instances() {
    let (net, flows) = build_grid_network(3, 5, 1).unwrap();
    let inst = AttackInstance::new(AttackKind::WorstNetwork, 1);
    assert!(matches!(attack::brute_force_oracle(&net, &flows, &inst, &DEFAULT_GRID), Err(AttackError::TooLarge { .. })));
}
