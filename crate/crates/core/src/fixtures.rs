//! Bundled networks: the two-intersection example and a seeded grid
//! generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fixed_time::solve_fixed_time;
use crate::network::{FlowMatrix, LinkId, LinkKind, NetworkBuilder, NetworkError, RoadNetwork};

/// The bundled `example2.net` document.
pub const EXAMPLE_NETWORK_JSON: &str = include_str!("../data/example2.net");

/// Two intersections, 16 movements, 8 stages; saturation 32 at the first
/// intersection and 24 at the second; L = 1, τ = 1 s.
pub fn build_example_network() -> (RoadNetwork, FlowMatrix) {
    let mut b = NetworkBuilder::new();
    let kinds = [
        (1, LinkKind::Entry),
        (2, LinkKind::Exit),
        (3, LinkKind::Entry),
        (4, LinkKind::Exit),
        (5, LinkKind::Entry),
        (6, LinkKind::Exit),
        (7, LinkKind::Internal),
        (8, LinkKind::Entry),
        (9, LinkKind::Exit),
        (10, LinkKind::Entry),
        (11, LinkKind::Exit),
        (12, LinkKind::Entry),
        (13, LinkKind::Exit),
        (14, LinkKind::Internal),
    ];
    let links: Vec<LinkId> = kinds.iter().map(|&(label, kind)| b.link(label, kind, None)).collect();
    let link = |label: u64| links[(label - 1) as usize];
    let n1 = b.intersection(1, None);
    let n2 = b.intersection(2, None);
    let table = [
        (1, 6, 2.0),
        (1, 4, 2.0),
        (3, 14, 8.0),
        (3, 6, 4.0),
        (5, 2, 2.0),
        (5, 14, 4.0),
        (7, 4, 6.0),
        (7, 2, 2.0),
        (8, 13, 2.0),
        (8, 11, 2.0),
        (10, 7, 4.0),
        (10, 13, 2.0),
        (12, 9, 2.0),
        (12, 7, 4.0),
        (14, 11, 6.0),
        (14, 9, 6.0),
    ];
    let mut flows = Vec::new();
    for &(from, to, flow) in &table {
        let sat = if from == 8 || from == 10 || from == 12 || from == 14 { 24.0 } else { 32.0 };
        b.movement(link(from), link(to), sat);
        flows.push(flow);
    }
    let idx = |from: u64, to: u64| table.iter().position(|&(f, t, _)| f == from && t == to).unwrap();
    let stages = [
        (n1, [(3, 14), (7, 4)]),
        (n1, [(1, 6), (5, 2)]),
        (n1, [(3, 6), (7, 2)]),
        (n1, [(1, 4), (5, 14)]),
        (n2, [(14, 11), (10, 7)]),
        (n2, [(12, 9), (8, 13)]),
        (n2, [(14, 9), (10, 13)]),
        (n2, [(12, 7), (8, 11)]),
    ];
    for (k, (n, phases)) in stages.iter().enumerate() {
        b.stage(*n, phases.iter().map(|&(f, t)| idx(f, t)).collect(), Some(format!("phi{}", k + 1)));
    }
    let net = b.build(1.0, 1.0).expect("example network is valid");
    (net, FlowMatrix::new(flows).expect("example flows are valid"))
}

/// Approach directions around a grid intersection.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Dir {
    N,
    E,
    S,
    W,
}

const DIRS: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

impl Dir {
    fn index(self) -> usize {
        self as usize
    }

    fn opposite(self) -> Dir {
        DIRS[(self.index() + 2) % 4]
    }

    /// (drow, dcol) of the neighbour in this direction.
    fn offset(self) -> (i64, i64) {
        match self {
            Dir::N => (-1, 0),
            Dir::E => (0, 1),
            Dir::S => (1, 0),
            Dir::W => (0, -1),
        }
    }
}

/// Turns permitted from an approach: straight through plus one turn,
/// giving eight movements per intersection (NS, SN, WE, EW, NE, SW, WN, ES).
fn turn_target(approach: Dir) -> Dir {
    match approach {
        Dir::N => Dir::E,
        Dir::S => Dir::W,
        Dir::W => Dir::N,
        Dir::E => Dir::S,
    }
}

const THROUGH_SATURATION: f64 = 36.0;
const TURN_SATURATION: f64 = 24.0;
const GRID_RETRIES: usize = 8;

/// Four-way grid of `rows × cols` intersections with four stages each and
/// seeded integer demands routed along random paths, so conservation holds
/// exactly. Demands are scaled down until the fixed-time schedule is
/// feasible everywhere.
pub fn build_grid_network(rows: usize, cols: usize, seed: u64) -> Result<(RoadNetwork, FlowMatrix), NetworkError> {
    if rows == 0 || cols == 0 {
        return Err(NetworkError::Generation("grid needs at least one row and one column".into()));
    }
    let mut b = NetworkBuilder::new();
    let node = |r: usize, c: usize| r * cols + c;
    let mut nodes = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(b.intersection((node(r, c) + 1) as u64, Some(format!("r{r}c{c}"))));
        }
    }
    let neighbour = |r: usize, c: usize, d: Dir| {
        let (dr, dc) = d.offset();
        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
        (nr >= 0 && nc >= 0 && (nr as usize) < rows && (nc as usize) < cols).then(|| node(nr as usize, nc as usize))
    };
    // incoming[node][d]: link arriving at `node` from side d; outgoing likewise.
    let mut incoming = vec![[None::<LinkId>; 4]; rows * cols];
    let mut outgoing = vec![[None::<LinkId>; 4]; rows * cols];
    let mut label = 1u64;
    let mut next_label = || {
        label += 1;
        label - 1
    };
    for r in 0..rows {
        for c in 0..cols {
            let here = node(r, c);
            for d in DIRS {
                match neighbour(r, c, d) {
                    Some(other) => {
                        // one internal link per ordered pair, created by the tail node
                        let id = b.link(next_label(), LinkKind::Internal, Some(format!("{here}->{other}")));
                        outgoing[here][d.index()] = Some(id);
                        incoming[other][d.opposite().index()] = Some(id);
                    }
                    None => {
                        let entry = b.link(next_label(), LinkKind::Entry, Some(format!("in{here}{d:?}")));
                        let exit = b.link(next_label(), LinkKind::Exit, Some(format!("out{here}{d:?}")));
                        incoming[here][d.index()] = Some(entry);
                        outgoing[here][d.index()] = Some(exit);
                    }
                }
            }
        }
    }
    // movement index by (node, approach, target side)
    let mut movement_at = vec![[[None::<usize>; 4]; 4]; rows * cols];
    let mut entries = Vec::new();
    for here in 0..rows * cols {
        for a in DIRS {
            let from = incoming[here][a.index()].expect("every side has an incoming link");
            for (target, sat) in [(a.opposite(), THROUGH_SATURATION), (turn_target(a), TURN_SATURATION)] {
                let to = outgoing[here][target.index()].expect("every side has an outgoing link");
                movement_at[here][a.index()][target.index()] = Some(b.movement(from, to, sat));
            }
            if neighbour(here / cols, here % cols, a).is_none() {
                entries.push((here, a));
            }
        }
        let mv = |a: Dir, t: Dir| movement_at[here][a.index()][t.index()].unwrap();
        let n = nodes[here];
        b.stage(n, vec![mv(Dir::N, Dir::S), mv(Dir::S, Dir::N)], Some(format!("{}:NS", here + 1)));
        b.stage(n, vec![mv(Dir::W, Dir::E), mv(Dir::E, Dir::W)], Some(format!("{}:WE", here + 1)));
        b.stage(n, vec![mv(Dir::N, Dir::E), mv(Dir::S, Dir::W)], Some(format!("{}:NE", here + 1)));
        b.stage(n, vec![mv(Dir::W, Dir::N), mv(Dir::E, Dir::S)], Some(format!("{}:WN", here + 1)));
    }
    let net = b.build(1.0, 1.0)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let demands: Vec<u32> = entries.iter().map(|_| rng.gen_range(4..=12)).collect();
    let turn_prob: Vec<f64> = (0..rows * cols * 4).map(|_| rng.gen_range(0.2..0.5)).collect();
    let max_steps = 4 * (rows + cols) + 8;
    let mut scale = 1.0;
    for _ in 0..GRID_RETRIES {
        let mut route_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_f10e);
        let mut flow = vec![0.0f64; net.num_movements()];
        for (k, &(start, side)) in entries.iter().enumerate() {
            let vehicles = (demands[k] as f64 * scale).round() as u32;
            for _ in 0..vehicles {
                loop {
                    let mut path = Vec::new();
                    let (mut here, mut approach) = (start, side);
                    let finished = loop {
                        if path.len() > max_steps {
                            break false;
                        }
                        let target = if route_rng.gen_bool(turn_prob[here * 4 + approach.index()]) {
                            turn_target(approach)
                        } else {
                            approach.opposite()
                        };
                        path.push(movement_at[here][approach.index()][target.index()].unwrap());
                        match neighbour(here / cols, here % cols, target) {
                            Some(next) => {
                                here = next;
                                approach = target.opposite();
                            }
                            None => break true,
                        }
                    };
                    if finished {
                        for m in path {
                            flow[m] += 1.0;
                        }
                        break;
                    }
                }
            }
        }
        let flows = FlowMatrix::new(flow)?;
        match solve_fixed_time(&net, &flows) {
            Ok(s) if s.max_sum() < 0.95 => return Ok((net, flows)),
            Ok(_) => scale *= 0.7,
            Err(e) => return Err(NetworkError::Generation(e.to_string())),
        }
    }
    Err(NetworkError::Generation(format!("no feasible demand after {GRID_RETRIES} retries")))
}
