#![allow(dead_code)]

use rand::Rng;
use sigvuln_core::fixed_time;
use sigvuln_core::network::{FlowMatrix, LinkId, LinkKind, RoadNetwork};

/// Random flows built from whole trips routed entry → exit, so every
/// internal link balances exactly.
pub fn routed_flows<R: Rng>(net: &RoadNetwork, rng: &mut R, trips: usize, max_amount: u32) -> FlowMatrix {
    let entries: Vec<LinkId> = (0..net.links().len())
        .map(LinkId)
        .filter(|&l| net.link(l).kind == LinkKind::Entry && !net.movements_out_of(l).is_empty())
        .collect();
    let mut flows = vec![0.0; net.num_movements()];
    for _ in 0..trips {
        let mut link = entries[rng.gen_range(0..entries.len())];
        let amount = rng.gen_range(1..=max_amount) as f64;
        let mut path = Vec::new();
        while net.link(link).kind != LinkKind::Exit && path.len() < 64 {
            let out = net.movements_out_of(link);
            if out.is_empty() {
                break;
            }
            let m = out[rng.gen_range(0..out.len())];
            path.push(m);
            link = net.movement(m).to;
        }
        if net.link(link).kind == LinkKind::Exit {
            for m in path {
                flows[m] += amount;
            }
        }
    }
    FlowMatrix::new(flows).unwrap()
}

/// Scales `flows` so the busiest intersection sits at `target` (< 1).
pub fn scale_to(net: &RoadNetwork, flows: &FlowMatrix, target: f64) -> FlowMatrix {
    let s = fixed_time::solve_fixed_time(net, flows).unwrap().max_sum();
    if s <= 0.0 {
        return flows.clone();
    }
    flows.scaled(target / s).unwrap()
}
