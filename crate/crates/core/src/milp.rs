//! Binary mixed-integer programs and a branch-and-bound solver over the
//! simplex relaxation.
//!
//! Search order: depth-first (down branch first) until the search itself
//! finds an integral node, then best-bound with the lowest node id
//! breaking ties. Branching picks the most fractional binary, lowest index
//! on ties. Children warm-start from their parent's final basis.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};
use std::rc::Rc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lp::{self, Basis, LpError, LpModel, LpStatus, Relation, Sense, Tolerances};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("invalid MILP: {0}")]
    InvalidModel(String),
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub lp: LpModel,
    pub binary: Vec<bool>,
}

impl MilpModel {
    pub fn new(sense: Sense) -> Self {
        MilpModel { lp: LpModel::new(sense), binary: Vec::new() }
    }

    pub fn from_lp(lp: LpModel) -> Self {
        let n = lp.num_vars();
        MilpModel { lp, binary: vec![false; n] }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, obj: f64) -> usize {
        self.binary.push(false);
        self.lp.add_var(name, lower, upper, obj)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, obj: f64) -> usize {
        self.binary.push(true);
        self.lp.add_var(name, 0.0, 1.0, obj)
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.lp.add_constraint(coeffs, relation, rhs)
    }

    pub fn binaries(&self) -> Vec<usize> {
        (0..self.binary.len()).filter(|&j| self.binary[j]).collect()
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        self.lp.validate()?;
        if self.binary.len() != self.lp.num_vars() {
            return Err(MilpError::InvalidModel("integrality mask length differs from variable count".into()));
        }
        for j in self.binaries() {
            if self.lp.lower[j] < 0.0 || self.lp.upper[j] > 1.0 {
                return Err(MilpError::InvalidModel(format!(
                    "binary {} has bounds [{}, {}] outside [0, 1]",
                    self.lp.names[j], self.lp.lower[j], self.lp.upper[j]
                )));
            }
        }
        Ok(())
    }

    /// Worst bound/constraint violation, also counting fractional binaries.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let frac = self
            .binaries()
            .into_iter()
            .map(|j| (x[j] - x[j].round()).abs())
            .fold(0.0, f64::max);
        self.lp.max_violation(x).max(frac)
    }

    pub fn write_lp_text<W: Write>(&self, w: W) -> io::Result<()> {
        self.lp.write_lp_text(w, &self.binaries())
    }
}

/// Adds `w = y·λ` for binary `y` and `λ ∈ [0, upper]` via the four
/// envelope inequalities `w ≤ U y`, `w ≤ λ`, `w ≥ λ − U(1 − y)`, `w ≥ 0`.
pub fn linearize_product(model: &mut MilpModel, y: usize, lambda: usize, upper: f64, name: &str) -> Result<usize, MilpError> {
    if !upper.is_finite() || upper < 0.0 {
        return Err(MilpError::InvalidModel(format!("product {name} needs a finite upper bound, got {upper}")));
    }
    if !model.binary.get(y).copied().unwrap_or(false) {
        return Err(MilpError::InvalidModel(format!("product {name}: variable {y} is not binary")));
    }
    if model.lp.lower[lambda] < 0.0 || model.lp.upper[lambda] > upper {
        return Err(MilpError::InvalidModel(format!(
            "product {name}: bounds of {} exceed [0, {upper}]",
            model.lp.names[lambda]
        )));
    }
    let w = model.add_var(name, 0.0, upper, 0.0);
    model.add_constraint(vec![(w, 1.0), (y, -upper)], Relation::Le, 0.0);
    model.add_constraint(vec![(w, 1.0), (lambda, -1.0)], Relation::Le, 0.0);
    model.add_constraint(vec![(w, 1.0), (lambda, -1.0), (y, -upper)], Relation::Ge, -upper);
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpOptions {
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
    pub int_tol: f64,
    /// Relative optimality gap: nodes within `gap_rel·(1+|incumbent|)` of
    /// the incumbent are pruned.
    pub gap_rel: f64,
    pub lp: Tolerances,
    /// Feasible starting point; ignored unless it satisfies the model.
    pub start: Option<Vec<f64>>,
    pub record_nodes: bool,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            max_nodes: 1_000_000,
            time_limit: None,
            int_tol: 1e-6,
            gap_rel: 1e-6,
            lp: Tolerances::default(),
            start: None,
            record_nodes: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Relaxation objective (model sense); `None` when infeasible.
    pub relaxation: Option<f64>,
    /// Parent relaxation objective (model sense).
    pub parent_relaxation: Option<f64>,
    pub incumbent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Proven bound on the optimum in the model's sense (lower bound when
    /// minimising, upper bound when maximising).
    pub bound: f64,
    pub nodes: usize,
    pub log: Vec<NodeRecord>,
}

impl MilpSolution {
    pub fn write_node_log<W: Write>(&self, w: W) -> io::Result<()> {
        write_node_log(&self.log, w)
    }
}

/// Writes `node,depth,bound,incumbent` rows.
pub fn write_node_log<W: Write>(log: &[NodeRecord], w: W) -> io::Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(["node", "depth", "bound", "incumbent"])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in log {
        out.write_record([r.id.to_string(), r.depth.to_string(), opt(r.relaxation), opt(r.incumbent)])?;
    }
    out.flush()
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    parent: Option<usize>,
    depth: usize,
    fixings: Vec<(usize, f64)>,
    /// Parent relaxation value in internal (minimisation) units.
    bound: f64,
    basis: Option<Rc<Basis>>,
}

struct Queued(Node);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // max-heap: the smallest bound (then smallest id) is "greatest"
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.bound.total_cmp(&self.0.bound).then_with(|| other.0.id.cmp(&self.0.id))
    }
}

enum Frontier {
    Dive(Vec<Node>),
    Best(BinaryHeap<Queued>),
}

impl Frontier {
    fn pop(&mut self) -> Option<Node> {
        match self {
            Frontier::Dive(s) => s.pop(),
            Frontier::Best(h) => h.pop().map(|q| q.0),
        }
    }

    fn push(&mut self, n: Node) {
        match self {
            Frontier::Dive(s) => s.push(n),
            Frontier::Best(h) => h.push(Queued(n)),
        }
    }

    fn best_bound(&self) -> Option<f64> {
        match self {
            Frontier::Dive(s) => s.iter().map(|n| n.bound).min_by(f64::total_cmp),
            Frontier::Best(h) => h.peek().map(|q| q.0.bound),
        }
    }

    fn into_best(self) -> Frontier {
        match self {
            Frontier::Dive(s) => Frontier::Best(s.into_iter().map(Queued).collect()),
            b => b,
        }
    }
}

pub fn solve_milp(model: &MilpModel, opts: &MilpOptions) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let started = Instant::now();
    let sign = if model.lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let binaries = model.binaries();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(start) = &opts.start {
        if start.len() == model.lp.num_vars() && model.max_violation(start) <= 1e-7 {
            incumbent = Some((sign * model.lp.objective_value(start), start.clone()));
        } else {
            log::debug!("discarding infeasible start solution");
        }
    }
    let gap = |inc: f64| opts.gap_rel * (1.0 + inc.abs());

    let mut frontier = Frontier::Dive(vec![Node {
        id: 0,
        parent: None,
        depth: 0,
        fixings: Vec::new(),
        bound: f64::NEG_INFINITY,
        basis: None,
    }]);
    let mut next_id = 1;
    let mut nodes = 0;
    let mut log = Vec::new();
    let mut exhausted = true;

    let mut lower = model.lp.lower.clone();
    let mut upper = model.lp.upper.clone();

    while let Some(node) = frontier.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - gap(*inc) {
                continue;
            }
        }
        if nodes >= opts.max_nodes || opts.time_limit.is_some_and(|t| started.elapsed() >= t) {
            frontier.push(node);
            exhausted = false;
            break;
        }
        nodes += 1;

        lower.copy_from_slice(&model.lp.lower);
        upper.copy_from_slice(&model.lp.upper);
        for &(j, v) in &node.fixings {
            lower[j] = v;
            upper[j] = v;
        }
        let sol = lp::solve_with_bounds(&model.lp, &lower, &upper, node.basis.as_deref(), &opts.lp)?;
        let record = |relax: Option<f64>, inc: &Option<(f64, Vec<f64>)>| NodeRecord {
            id: node.id,
            parent: node.parent,
            depth: node.depth,
            relaxation: relax,
            parent_relaxation: node.bound.is_finite().then_some(sign * node.bound),
            incumbent: inc.as_ref().map(|(v, _)| sign * v),
        };
        match sol.status {
            LpStatus::Infeasible => {
                if opts.record_nodes {
                    log.push(record(None, &incumbent));
                }
                continue;
            }
            LpStatus::Unbounded => return Err(MilpError::Unbounded),
            LpStatus::Optimal => {}
        }
        let value = sign * sol.objective;
        if opts.record_nodes {
            log.push(record(Some(sol.objective), &incumbent));
        }
        if let Some((inc, _)) = &incumbent {
            if value >= inc - gap(*inc) {
                continue;
            }
        }
        let branch = binaries
            .iter()
            .copied()
            .filter(|&j| (sol.x[j] - sol.x[j].round()).abs() > opts.int_tol)
            .map(|j| (j, (sol.x[j] - 0.5).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match branch {
            None => {
                log::debug!("node {}: incumbent {}", node.id, sol.objective);
                incumbent = Some((value, sol.x));
                if let Frontier::Dive(_) = frontier {
                    frontier = frontier.into_best();
                }
            }
            Some((j, _)) => {
                let basis = sol.basis.map(Rc::new);
                let child = |id: usize, v: f64| {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    Node { id, parent: Some(node.id), depth: node.depth + 1, fixings, bound: value, basis: basis.clone() }
                };
                let down = child(next_id, 0.0);
                let up = child(next_id + 1, 1.0);
                next_id += 2;
                // the stack pops the down branch first
                frontier.push(up);
                frontier.push(down);
            }
        }
    }

    let (status, bound) = match (&incumbent, exhausted) {
        (Some((inc, _)), true) => (MilpStatus::Optimal, *inc),
        (None, true) => (MilpStatus::Infeasible, f64::INFINITY),
        (inc, false) => {
            let open = frontier.best_bound().unwrap_or(f64::INFINITY);
            let b = match inc {
                Some((v, _)) => open.min(*v),
                None => open,
            };
            (MilpStatus::BudgetExceeded, b)
        }
    };
    let (objective, x) = match incumbent {
        Some((v, x)) => (Some(sign * v), Some(x)),
        None => (None, None),
    };
    Ok(MilpSolution { status, x, objective, bound: sign * bound, nodes, log })
}
