//! Sensor-falsification attacks on fixed-time control.
//!
//! Each attacker problem is bilevel: the outer level chooses which sensors
//! to compromise and what they report, the inner level is the fixed-time
//! LP run on the falsified flows. The inner LP is replaced by its KKT
//! conditions with big-M complementarity, which yields a single-level
//! binary program for [`crate::milp`]. Among several inner optima the
//! attacker's preferred one is assumed; the deterministic schedule the
//! controller would actually compute is reported alongside.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixed_time::{self, FixedTimeError, Schedule};
use crate::lp::{Relation, Sense};
use crate::milp::{self, MilpError, MilpModel, MilpOptions, MilpStatus, NodeRecord};
use crate::network::{check_conservation, FlowMatrix, IntersectionId, LinkId, LinkKind, RoadNetwork, SensorId};

/// Default margin for the strict cycle condition Σλ < 1.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Changes at or below this size do not count as a compromise.
pub const CHANGE_TOL: f64 = 1e-7;
/// Oracle value grid, as multiples of the true flow.
pub const DEFAULT_GRID: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
pub const ORACLE_MAX_SENSORS: usize = 20;
pub const ORACLE_MAX_BUDGET: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("invalid attack: {0}")]
    Invalid(String),
    #[error("movement ({from},{to}) carries flow {flow} but belongs to no stage")]
    Uncovered { from: u64, to: u64, flow: f64 },
    #[error("no admissible perturbation within the budget meets the targets")]
    Infeasible,
    #[error("solver limit reached before any admissible attack was found (bound {bound})")]
    NoIncumbent { bound: f64 },
    #[error("instance too large for enumeration: {sensors} sensors, budget {budget} (limits {max_sensors}, {max_budget})")]
    TooLarge { sensors: usize, budget: usize, max_sensors: usize, max_budget: usize },
    #[error(transparent)]
    FixedTime(#[from] FixedTimeError),
    #[error(transparent)]
    Milp(#[from] MilpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    #[serde(alias = "inf", alias = "linf")]
    Infinity,
    #[serde(alias = "l1", alias = "1")]
    One,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub movement: usize,
    /// Service rate the attacker wants the movement pushed down to.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackKind {
    /// Maximise total accumulation Σ max(0, f − s̃).
    WorstNetwork,
    /// Minimise the service granted to movements leaving `lane`.
    WorstLane { lane: LinkId },
    /// Smallest perturbation pushing every target's service to at most α.
    RiskAverse { targets: Vec<Target>, norm: Norm },
}

impl AttackKind {
    pub fn sense(&self) -> Sense {
        match self {
            AttackKind::WorstNetwork => Sense::Maximize,
            _ => Sense::Minimize,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::WorstNetwork => "worst-network",
            AttackKind::WorstLane { .. } => "worst-lane",
            AttackKind::RiskAverse { .. } => "risk-averse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackInstance {
    pub kind: AttackKind,
    pub budget: usize,
    /// Overrides the per-movement flow bound 2·max(total entry flow, c).
    pub flow_bound: Option<f64>,
    pub epsilon: f64,
}

impl AttackInstance {
    pub fn new(kind: AttackKind, budget: usize) -> Self {
        AttackInstance { kind, budget, flow_bound: None, epsilon: DEFAULT_EPSILON }
    }

    pub fn validate(&self, net: &RoadNetwork, flows: &FlowMatrix) -> Result<(), AttackError> {
        if flows.len() != net.num_movements() {
            return Err(AttackError::Invalid(format!(
                "{} flow values for {} movements",
                flows.len(),
                net.num_movements()
            )));
        }
        if self.budget > net.num_movements() {
            return Err(AttackError::Invalid(format!(
                "budget {} exceeds the {} sensors of the network",
                self.budget,
                net.num_movements()
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(AttackError::Invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if let Some(b) = self.flow_bound {
            if !(b.is_finite() && b > 0.0) {
                return Err(AttackError::Invalid(format!("flow bound must be positive and finite, got {b}")));
            }
        }
        match &self.kind {
            AttackKind::WorstNetwork => {}
            AttackKind::WorstLane { lane } => {
                if lane.0 >= net.links().len() {
                    return Err(AttackError::Invalid(format!("lane {} does not exist", lane.0)));
                }
                if net.movements_out_of(*lane).is_empty() {
                    return Err(AttackError::Invalid(format!(
                        "lane {} has no outgoing movements",
                        net.link(*lane).label
                    )));
                }
            }
            AttackKind::RiskAverse { targets, .. } => {
                if targets.is_empty() {
                    return Err(AttackError::Invalid("risk-averse attack needs at least one target".into()));
                }
                for t in targets {
                    if t.movement >= net.num_movements() {
                        return Err(AttackError::Invalid(format!("target movement {} does not exist", t.movement)));
                    }
                    if !t.alpha.is_finite() {
                        return Err(AttackError::Invalid(format!("target threshold {} is not finite", t.alpha)));
                    }
                }
            }
        }
        for m in 0..net.num_movements() {
            if net.stages_of_movement(m).is_empty() && flows.get(m) > 0.0 {
                let (from, to) = net.movement_labels(m);
                return Err(AttackError::Uncovered { from, to, flow: flows.get(m) });
            }
        }
        Ok(())
    }
}

/// Upper bound M_f on a falsified flow.
pub fn flow_upper_bound(net: &RoadNetwork, flows: &FlowMatrix, instance: &AttackInstance, m: usize) -> f64 {
    let c = net.movement(m).saturation;
    let mf = instance.flow_bound.unwrap_or_else(|| 2.0 * total_entry_flow(net, flows).max(c));
    // Σλ ≤ 1 caps any servable flow at c already
    mf.min(c).max(flows.get(m))
}

pub fn total_entry_flow(net: &RoadNetwork, flows: &FlowMatrix) -> f64 {
    (0..net.num_movements())
        .filter(|&m| net.link(net.movement(m).from).kind == LinkKind::Entry)
        .map(|m| flows.get(m))
        .sum()
}

/// Variable indices of an inner-optimality block.
#[derive(Debug, Clone, PartialEq)]
pub struct KktBlock {
    /// Stage durations λ_S, by stage.
    pub lambda: Vec<usize>,
    /// Scaled coverage duals ν = c·μ ∈ [0, 1], by movement (uncovered: none).
    pub nu: Vec<Option<usize>>,
    /// Coverage complementarity binaries, by movement.
    pub tight: Vec<Option<usize>>,
    /// Stage complementarity binaries, by stage.
    pub active: Vec<usize>,
}

/// Adds λ, dual and complementarity variables so that any feasible point
/// has λ optimal for the fixed-time LP on the flows held in `ftilde`.
/// Also adds Σλ ≤ 1 − ε per intersection, which keeps every big-M at 1 or c.
pub fn build_kkt_inner(
    model: &mut MilpModel,
    net: &RoadNetwork,
    ftilde: &[usize],
    epsilon: f64,
) -> Result<KktBlock, AttackError> {
    if ftilde.len() != net.num_movements() {
        return Err(AttackError::Invalid("one flow variable per movement required".into()));
    }
    let lambda: Vec<usize> = (0..net.stages().len())
        .map(|s| model.add_var(format!("lambda_{}", stage_tag(net, s)), 0.0, 1.0, 0.0))
        .collect();
    let mut nu = vec![None; net.num_movements()];
    let mut tight = vec![None; net.num_movements()];

    for m in 0..net.num_movements() {
        let f = ftilde[m];
        let stages = net.stages_of_movement(m);
        if stages.is_empty() {
            if model.lp.lower[f] > 0.0 {
                let (from, to) = net.movement_labels(m);
                return Err(AttackError::Uncovered { from, to, flow: model.lp.lower[f] });
            }
            model.lp.upper[f] = 0.0;
            continue;
        }
        let c = net.movement(m).saturation;
        let tag = movement_tag(net, m);
        let v = model.add_var(format!("nu_{tag}"), 0.0, 1.0, 0.0);
        let b = model.add_binary(format!("b_{tag}"), 0.0);
        let mut cover: Vec<(usize, f64)> = stages.iter().map(|&s| (lambda[s], c)).collect();
        cover.push((f, -1.0));
        model.add_constraint(cover.clone(), Relation::Ge, 0.0);
        // slack ≤ c·(1 − b)
        cover.push((b, c));
        model.add_constraint(cover, Relation::Le, c);
        model.add_constraint(vec![(v, 1.0), (b, -1.0)], Relation::Le, 0.0);
        nu[m] = Some(v);
        tight[m] = Some(b);
    }

    let mut active = Vec::with_capacity(lambda.len());
    for (s, stage) in net.stages().iter().enumerate() {
        let d = model.add_binary(format!("d_{}", stage_tag(net, s)), 0.0);
        let duals: Vec<(usize, f64)> = stage.phases.iter().filter_map(|&m| nu[m].map(|v| (v, 1.0))).collect();
        model.add_constraint(duals.clone(), Relation::Le, 1.0);
        model.add_constraint(vec![(lambda[s], 1.0), (d, -1.0)], Relation::Le, 0.0);
        // reduced cost 1 − Σν ≤ 1 − d
        let mut rc = duals;
        rc.push((d, -1.0));
        model.add_constraint(rc, Relation::Ge, 0.0);
        // an optimal λ_S never exceeds max f̃/c over its phases; the sum is a linear cover of that
        let mut cap = vec![(lambda[s], 1.0)];
        cap.extend(stage.phases.iter().map(|&m| (ftilde[m], -1.0 / net.movement(m).saturation)));
        model.add_constraint(cap, Relation::Le, 0.0);
        active.push(d);
    }

    for n in 0..net.intersections().len() {
        let row: Vec<(usize, f64)> =
            net.stages_of_intersection(IntersectionId(n)).iter().map(|&s| (lambda[s], 1.0)).collect();
        if !row.is_empty() {
            model.add_constraint(row, Relation::Le, 1.0 - epsilon);
        }
    }
    Ok(KktBlock { lambda, nu, tight, active })
}

/// A reformulated attacker problem together with its variable map.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackModel {
    pub milp: MilpModel,
    pub kind: AttackKind,
    /// Falsified flow f̃, by movement.
    pub flow: Vec<usize>,
    /// Sensor selection z, by movement.
    pub select: Vec<usize>,
    pub kkt: KktBlock,
    /// Accumulation indicators y, by movement (zero-flow movements: none).
    pub accumulate: Vec<Option<usize>>,
    /// (movement, stage, w) with w = y·λ_S.
    pub products: Vec<(usize, usize, usize)>,
    /// Norm epigraph variables: one for the infinity norm, one per movement
    /// for the one-norm.
    pub epigraph: Vec<usize>,
}

fn movement_tag(net: &RoadNetwork, m: usize) -> String {
    let (from, to) = net.movement_labels(m);
    format!("{from}_{to}")
}

fn stage_tag(net: &RoadNetwork, s: usize) -> String {
    let n = net.stages()[s].intersection;
    format!("{}_{}", net.intersections()[n.0].label, net.stage_label(s))
}

fn build_shared(net: &RoadNetwork, flows: &FlowMatrix, instance: &AttackInstance) -> Result<AttackModel, AttackError> {
    instance.validate(net, flows)?;
    let mut milp = MilpModel::new(instance.kind.sense());
    let nm = net.num_movements();
    let mut flow = Vec::with_capacity(nm);
    let mut select = Vec::with_capacity(nm);
    for m in 0..nm {
        let tag = movement_tag(net, m);
        let ub = flow_upper_bound(net, flows, instance, m);
        flow.push(milp.add_var(format!("ft_{tag}"), 0.0, ub, 0.0));
        select.push(milp.add_binary(format!("z_{tag}"), 0.0));
    }
    for m in 0..nm {
        let f = flows.get(m);
        let ub = milp.lp.upper[flow[m]];
        milp.add_constraint(vec![(flow[m], 1.0), (select[m], -(ub - f))], Relation::Le, f);
        if f > 0.0 {
            milp.add_constraint(vec![(flow[m], 1.0), (select[m], f)], Relation::Ge, f);
        }
    }
    milp.add_constraint(select.iter().map(|&z| (z, 1.0)).collect(), Relation::Le, instance.budget as f64);
    for l in net.internal_links() {
        let mut row: Vec<(usize, f64)> = net.movements_into(l).iter().map(|&m| (flow[m], 1.0)).collect();
        row.extend(net.movements_out_of(l).iter().map(|&m| (flow[m], -1.0)));
        milp.add_constraint(row, Relation::Eq, 0.0);
    }
    let kkt = build_kkt_inner(&mut milp, net, &flow, instance.epsilon)?;
    Ok(AttackModel {
        milp,
        kind: instance.kind.clone(),
        flow,
        select,
        kkt,
        accumulate: vec![None; nm],
        products: Vec::new(),
        epigraph: Vec::new(),
    })
}

/// max Σ_m max(0, f_m − c_m Σ_S λ̃_S), with the clamp encoded by binaries
/// y_m (f − s̃ ≤ f·y) and the products y·λ linearized.
pub fn build_worst_network(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    instance: &AttackInstance,
) -> Result<AttackModel, AttackError> {
    if instance.kind != AttackKind::WorstNetwork {
        return Err(AttackError::Invalid("expected a worst-network instance".into()));
    }
    let mut am = build_shared(net, flows, instance)?;
    for m in 0..net.num_movements() {
        let f = flows.get(m);
        let stages = net.stages_of_movement(m);
        if f <= 0.0 || stages.is_empty() {
            continue;
        }
        let c = net.movement(m).saturation;
        let tag = movement_tag(net, m);
        let y = am.milp.add_binary(format!("y_{tag}"), f);
        let mut row: Vec<(usize, f64)> = stages.iter().map(|&s| (am.kkt.lambda[s], c)).collect();
        row.push((y, f));
        am.milp.add_constraint(row, Relation::Ge, f);
        // only a falsified movement can end up under-served
        am.milp.add_constraint(vec![(y, 1.0), (am.select[m], -1.0)], Relation::Le, 0.0);
        for &s in stages {
            let name = format!("w_{tag}_{}", stage_tag(net, s));
            let w = milp::linearize_product(&mut am.milp, y, am.kkt.lambda[s], 1.0, &name)?;
            am.milp.lp.objective[w] = -c;
            am.products.push((m, s, w));
        }
        am.accumulate[m] = Some(y);
    }
    Ok(am)
}

/// min Σ_{m leaving the lane} c_m Σ_S λ̃_S.
pub fn build_worst_lane(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    instance: &AttackInstance,
) -> Result<AttackModel, AttackError> {
    let AttackKind::WorstLane { lane } = instance.kind else {
        return Err(AttackError::Invalid("expected a worst-lane instance".into()));
    };
    let mut am = build_shared(net, flows, instance)?;
    for &m in net.movements_out_of(lane) {
        let c = net.movement(m).saturation;
        for &s in net.stages_of_movement(m) {
            am.milp.lp.objective[am.kkt.lambda[s]] += c;
        }
    }
    Ok(am)
}

/// min ‖F̃ − F‖ subject to every target's service being at most α.
pub fn build_risk_averse(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    instance: &AttackInstance,
) -> Result<AttackModel, AttackError> {
    let AttackKind::RiskAverse { targets, norm } = &instance.kind else {
        return Err(AttackError::Invalid("expected a risk-averse instance".into()));
    };
    let mut am = build_shared(net, flows, instance)?;
    let nm = net.num_movements();
    match norm {
        Norm::Infinity => {
            let span = (0..nm).map(|m| am.milp.lp.upper[am.flow[m]]).fold(0.0, f64::max);
            let t = am.milp.add_var("t", 0.0, span, 1.0);
            for m in 0..nm {
                let f = flows.get(m);
                am.milp.add_constraint(vec![(am.flow[m], 1.0), (t, -1.0)], Relation::Le, f);
                am.milp.add_constraint(vec![(am.flow[m], 1.0), (t, 1.0)], Relation::Ge, f);
            }
            am.epigraph.push(t);
        }
        Norm::One => {
            for m in 0..nm {
                let f = flows.get(m);
                let span = am.milp.lp.upper[am.flow[m]].max(f);
                let e = am.milp.add_var(format!("e_{}", movement_tag(net, m)), 0.0, span, 1.0);
                am.milp.add_constraint(vec![(am.flow[m], 1.0), (e, -1.0)], Relation::Le, f);
                am.milp.add_constraint(vec![(am.flow[m], 1.0), (e, 1.0)], Relation::Ge, f);
                am.epigraph.push(e);
            }
        }
    }
    for t in targets {
        let c = net.movement(t.movement).saturation;
        let row: Vec<(usize, f64)> = net.stages_of_movement(t.movement).iter().map(|&s| (am.kkt.lambda[s], c)).collect();
        am.milp.add_constraint(row, Relation::Le, t.alpha);
    }
    Ok(am)
}

pub fn build_attack(net: &RoadNetwork, flows: &FlowMatrix, instance: &AttackInstance) -> Result<AttackModel, AttackError> {
    match instance.kind {
        AttackKind::WorstNetwork => build_worst_network(net, flows, instance),
        AttackKind::WorstLane { .. } => build_worst_lane(net, flows, instance),
        AttackKind::RiskAverse { .. } => build_risk_averse(net, flows, instance),
    }
}

impl AttackModel {
    /// The unattacked point (z = 0, F̃ = F, nominal schedule with its
    /// duals), or `None` if the nominal schedule is not admissible.
    pub fn nominal_start(&self, net: &RoadNetwork, flows: &FlowMatrix) -> Option<Vec<f64>> {
        self.point_for(net, flows, flows)
    }

    /// Full model point for a given falsification, with the deterministic
    /// inner optimum and its duals; `None` if that point is infeasible.
    pub fn point_for(&self, net: &RoadNetwork, flows: &FlowMatrix, perturbed: &FlowMatrix) -> Option<Vec<f64>> {
        let mut x = vec![0.0; self.milp.lp.num_vars()];
        for m in 0..net.num_movements() {
            let (f, v) = (flows.get(m), perturbed.get(m));
            x[self.flow[m]] = v;
            x[self.select[m]] = if v != f { 1.0 } else { 0.0 };
        }
        for n in 0..net.intersections().len() {
            let n = IntersectionId(n);
            let sol = fixed_time::solve_intersection(net, perturbed, n).ok()?;
            for (&s, &v) in net.stages_of_intersection(n).iter().zip(&sol.durations) {
                x[self.kkt.lambda[s]] = v;
            }
            for (&m, &mu) in net.movements_of_intersection(n).iter().zip(&sol.duals) {
                if let Some(v) = self.kkt.nu[m] {
                    x[v] = (net.movement(m).saturation * mu).clamp(0.0, 1.0);
                }
            }
        }
        for m in 0..net.num_movements() {
            let (Some(v), Some(b)) = (self.kkt.nu[m], self.kkt.tight[m]) else { continue };
            let c = net.movement(m).saturation;
            let served: f64 = net.stages_of_movement(m).iter().map(|&s| c * x[self.kkt.lambda[s]]).sum();
            let slack = served - perturbed.get(m);
            x[b] = if x[v] > 0.0 || slack <= 1e-9 { 1.0 } else { 0.0 };
            if let Some(y) = self.accumulate[m] {
                x[y] = if flows.get(m) - served > 1e-9 { 1.0 } else { 0.0 };
            }
        }
        for (s, stage) in net.stages().iter().enumerate() {
            let total: f64 = stage.phases.iter().filter_map(|&m| self.kkt.nu[m]).map(|v| x[v]).sum();
            x[self.kkt.active[s]] = if total >= 1.0 - 1e-9 { 1.0 } else { 0.0 };
        }
        for &(m, s, w) in &self.products {
            x[w] = self.accumulate[m].map_or(0.0, |y| x[y]) * x[self.kkt.lambda[s]];
        }
        let diffs: Vec<f64> = (0..net.num_movements()).map(|m| (perturbed.get(m) - flows.get(m)).abs()).collect();
        if let AttackKind::RiskAverse { norm, .. } = &self.kind {
            match norm {
                Norm::Infinity => x[self.epigraph[0]] = diffs.iter().copied().fold(0.0, f64::max),
                Norm::One => {
                    for (m, &e) in self.epigraph.iter().enumerate() {
                        x[e] = diffs[m];
                    }
                }
            }
        }
        (self.milp.max_violation(&x) <= 1e-7).then_some(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackStatus {
    Optimal,
    /// Solver limit hit; the attack is the best incumbent, `bound` the
    /// proven limit on what any attack could achieve.
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub status: AttackStatus,
    /// Sensors whose report differs from the true flow by more than
    /// [`CHANGE_TOL`].
    pub compromised: Vec<SensorId>,
    pub perturbed: FlowMatrix,
    /// Attacker-preferred inner optimum.
    pub schedule: Schedule,
    /// Schedule the deterministic controller computes from the falsified flows.
    pub realized: Schedule,
    pub objective: f64,
    pub bound: f64,
    /// Objective evaluated on the realized schedule.
    pub realized_objective: f64,
    /// max(0, f − s̃) per movement under `schedule`.
    pub accumulation: Vec<f64>,
    /// max(0, f − ŝ) per movement under `realized`.
    pub realized_accumulation: Vec<f64>,
    pub nodes: usize,
    /// Branch-and-bound nodes, when recording was requested.
    pub node_log: Vec<NodeRecord>,
}

pub fn accumulation(net: &RoadNetwork, flows: &FlowMatrix, sched: &Schedule) -> Vec<f64> {
    fixed_time::service_rates(net, sched)
        .iter()
        .enumerate()
        .map(|(m, &s)| (flows.get(m) - s).max(0.0))
        .collect()
}

/// Objective of `kind` for a given falsification and schedule; `None` for a
/// risk-averse attack whose targets are not met.
pub fn evaluate_objective(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    kind: &AttackKind,
    perturbed: &FlowMatrix,
    sched: &Schedule,
) -> Option<f64> {
    let service = fixed_time::service_rates(net, sched);
    match kind {
        AttackKind::WorstNetwork => Some(accumulation(net, flows, sched).iter().sum()),
        AttackKind::WorstLane { lane } => Some(net.movements_out_of(*lane).iter().map(|&m| service[m]).sum()),
        AttackKind::RiskAverse { targets, norm } => {
            if targets.iter().any(|t| service[t.movement] > t.alpha + 1e-9) {
                return None;
            }
            let diffs = flows.values().iter().zip(perturbed.values()).map(|(a, b)| (a - b).abs());
            Some(match norm {
                Norm::Infinity => diffs.fold(0.0, f64::max),
                Norm::One => diffs.sum(),
            })
        }
    }
}

fn finish(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    kind: &AttackKind,
    perturbed: Vec<f64>,
    schedule: Schedule,
    status: AttackStatus,
    objective: f64,
    bound: f64,
    nodes: usize,
) -> Result<AttackResult, AttackError> {
    let compromised = (0..net.num_movements())
        .filter(|&m| (perturbed[m] - flows.get(m)).abs() > CHANGE_TOL)
        .map(|m| net.movement(m).sensor)
        .collect();
    let perturbed = FlowMatrix::new(perturbed).map_err(|e| AttackError::Invalid(e.to_string()))?;
    let realized = fixed_time::solve_fixed_time(net, &perturbed)?;
    let realized_objective = evaluate_objective(net, flows, kind, &perturbed, &realized).unwrap_or(f64::NAN);
    Ok(AttackResult {
        status,
        compromised,
        accumulation: accumulation(net, flows, &schedule),
        realized_accumulation: accumulation(net, flows, &realized),
        perturbed,
        schedule,
        realized,
        objective,
        bound,
        realized_objective,
        nodes,
        node_log: Vec::new(),
    })
}

pub fn solve_attack(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    instance: &AttackInstance,
    opts: &MilpOptions,
) -> Result<AttackResult, AttackError> {
    if let AttackKind::RiskAverse { targets, .. } = &instance.kind {
        if targets.iter().any(|t| t.alpha < 0.0) {
            return Err(AttackError::Infeasible);
        }
    }
    let am = build_attack(net, flows, instance)?;
    let mut opts = opts.clone();
    if opts.start.is_none() {
        let mut starts: Vec<Vec<f64>> = am.nominal_start(net, flows).into_iter().collect();
        if let Some(g) = greedy_attack(net, flows, instance, &DEFAULT_GRID)? {
            starts.extend(am.point_for(net, flows, &g.perturbed));
        }
        let sign = if instance.kind.sense() == Sense::Maximize { -1.0 } else { 1.0 };
        opts.start = starts
            .into_iter()
            .min_by(|a, b| (sign * am.milp.lp.objective_value(a)).total_cmp(&(sign * am.milp.lp.objective_value(b))));
    }
    let sol = milp::solve_milp(&am.milp, &opts)?;
    let status = match sol.status {
        MilpStatus::Optimal => AttackStatus::Optimal,
        MilpStatus::BudgetExceeded => AttackStatus::BudgetExceeded,
        MilpStatus::Infeasible => return Err(AttackError::Infeasible),
    };
    let (Some(x), Some(objective)) = (sol.x, sol.objective) else {
        return Err(AttackError::NoIncumbent { bound: sol.bound });
    };
    let perturbed: Vec<f64> = (0..net.num_movements())
        .map(|m| {
            let (v, f) = (x[am.flow[m]], flows.get(m));
            if (v - f).abs() <= CHANGE_TOL {
                f
            } else {
                v.max(0.0)
            }
        })
        .collect();
    let durations: Vec<f64> = am.kkt.lambda.iter().map(|&j| x[j].max(0.0)).collect();
    let schedule = Schedule::from_durations(net, durations);
    let mut result = finish(net, flows, &instance.kind, perturbed, schedule, status, objective, sol.bound, sol.nodes)?;
    result.node_log = sol.log;
    Ok(result)
}

/// Independent re-check of an attack against every constraint block.
/// Returns one message per violated condition.
pub fn check_admissible(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    instance: &AttackInstance,
    result: &AttackResult,
    tol: f64,
) -> Vec<String> {
    let mut issues = Vec::new();
    let ft = &result.perturbed;
    if result.compromised.len() > instance.budget {
        issues.push(format!("{} sensors compromised, budget {}", result.compromised.len(), instance.budget));
    }
    for m in 0..net.num_movements() {
        let (f, v) = (flows.get(m), ft.get(m));
        let tag = movement_tag(net, m);
        if v < -tol {
            issues.push(format!("negative falsified flow {v} on {tag}"));
        }
        let listed = result.compromised.contains(&net.movement(m).sensor);
        if !listed && (v - f).abs() > tol {
            issues.push(format!("flow of {tag} changed without a compromised sensor"));
        }
    }
    for v in check_conservation(net, ft, tol) {
        issues.push(format!(
            "conservation broken on link {}: in {} out {}",
            net.link(v.link).label,
            v.inflow,
            v.outflow
        ));
    }
    let service = fixed_time::service_rates(net, &result.schedule);
    for m in 0..net.num_movements() {
        if service[m] < ft.get(m) - tol {
            issues.push(format!("schedule does not cover falsified flow of {}", movement_tag(net, m)));
        }
    }
    if result.schedule.durations().iter().any(|&l| l < -tol) {
        issues.push("negative stage duration".into());
    }
    match fixed_time::solve_fixed_time(net, ft) {
        Ok(best) => {
            for (n, (&a, &b)) in result.schedule.sums().iter().zip(best.sums()).enumerate() {
                if a > 1.0 - instance.epsilon + tol {
                    issues.push(format!("intersection {} has sum lambda {a}", net.intersections()[n].label));
                }
                if (a - b).abs() > 1e-6 {
                    issues.push(format!(
                        "intersection {} schedule not inner-optimal: {a} vs {b}",
                        net.intersections()[n].label
                    ));
                }
            }
        }
        Err(e) => issues.push(format!("inner LP failed on falsified flows: {e}")),
    }
    if let AttackKind::RiskAverse { targets, .. } = &instance.kind {
        for t in targets {
            if service[t.movement] > t.alpha + tol {
                issues.push(format!(
                    "target {} served at {} above {}",
                    movement_tag(net, t.movement),
                    service[t.movement],
                    t.alpha
                ));
            }
        }
    }
    match evaluate_objective(net, flows, &instance.kind, ft, &result.schedule) {
        Some(v) if (v - result.objective).abs() <= tol.max(1e-6) * (1.0 + v.abs()) => {}
        Some(v) => issues.push(format!("reported objective {} but schedule gives {v}", result.objective)),
        None => issues.push("targets not met".into()),
    }
    issues
}

#[derive(Clone, Copy)]
enum Choice {
    Value(f64),
    Balance,
}

/// Fills in balancing values where an internal link has exactly one
/// undetermined movement; `false` if anything stays undetermined.
fn complete_by_conservation(net: &RoadNetwork, values: &mut [Option<f64>]) -> bool {
    loop {
        let mut progressed = false;
        for l in net.internal_links() {
            let into = net.movements_into(l);
            let out = net.movements_out_of(l);
            let open: Vec<(usize, f64)> = into
                .iter()
                .map(|&m| (m, 1.0))
                .chain(out.iter().map(|&m| (m, -1.0)))
                .filter(|&(m, _)| values[m].is_none())
                .collect();
            if let [(m, sign)] = open[..] {
                let mut rest = 0.0;
                for &k in into {
                    rest += values[k].unwrap_or(0.0);
                }
                for &k in out {
                    rest -= values[k].unwrap_or(0.0);
                }
                values[m] = Some(-rest * sign);
                progressed = true;
            }
        }
        if values.iter().all(Option::is_some) {
            return true;
        }
        if !progressed {
            return false;
        }
    }
}

fn better(kind: &AttackKind, candidate: f64, best: f64) -> bool {
    match kind.sense() {
        Sense::Maximize => candidate > best + 1e-12,
        Sense::Minimize => candidate < best - 1e-12,
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exhaustive search over sensor subsets of size ≤ B and a value grid
/// (multiples of the true flow), completing flows forced by conservation on
/// internal links. Each candidate is scored on the deterministic schedule.
pub fn brute_force_oracle(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    instance: &AttackInstance,
    grid: &[f64],
) -> Result<AttackResult, AttackError> {
    instance.validate(net, flows)?;
    let sensors = net.num_movements();
    if sensors > ORACLE_MAX_SENSORS || instance.budget > ORACLE_MAX_BUDGET {
        return Err(AttackError::TooLarge {
            sensors,
            budget: instance.budget,
            max_sensors: ORACLE_MAX_SENSORS,
            max_budget: ORACLE_MAX_BUDGET,
        });
    }
    if grid.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(AttackError::Invalid("grid multipliers must be finite and nonnegative".into()));
    }
    let uppers: Vec<f64> = (0..sensors).map(|m| flow_upper_bound(net, flows, instance, m)).collect();
    let mut best: Option<(f64, Vec<f64>, Schedule)> = None;
    let mut evaluations = 0;

    for k in 0..=instance.budget {
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            let options: Vec<Vec<Choice>> = subset
                .iter()
                .map(|&m| {
                    let mut vals: Vec<f64> = Vec::new();
                    for g in grid {
                        let v = g * flows.get(m);
                        if !vals.iter().any(|&u| u == v) {
                            vals.push(v);
                        }
                    }
                    let mut opts: Vec<Choice> = vals.into_iter().map(Choice::Value).collect();
                    opts.push(Choice::Balance);
                    opts
                })
                .collect();
            let mut digits = vec![0usize; k];
            'assign: loop {
                let mut values: Vec<Option<f64>> = (0..sensors).map(|m| Some(flows.get(m))).collect();
                for (i, &m) in subset.iter().enumerate() {
                    values[m] = match options[i][digits[i]] {
                        Choice::Value(v) => Some(v),
                        Choice::Balance => None,
                    };
                }
                if complete_by_conservation(net, &mut values) {
                    let cand: Vec<f64> = values.into_iter().map(|v| v.unwrap_or(0.0)).collect();
                    if let Some(score) = score_candidate(net, flows, instance, &uppers, &cand)? {
                        evaluations += 1;
                        let replace = match &best {
                            None => true,
                            Some((b, ..)) => better(&instance.kind, score.0, *b),
                        };
                        if replace {
                            best = Some((score.0, cand, score.1));
                        }
                    }
                }
                for i in (0..k).rev() {
                    digits[i] += 1;
                    if digits[i] < options[i].len() {
                        continue 'assign;
                    }
                    digits[i] = 0;
                }
                break;
            }
            if k == 0 || !next_combination(&mut subset, sensors) {
                break;
            }
        }
    }
    let Some((objective, perturbed, sched)) = best else {
        return Err(AttackError::Infeasible);
    };
    finish(net, flows, &instance.kind, perturbed, sched, AttackStatus::Optimal, objective, objective, evaluations)
}

/// Grows the compromised set one step at a time, trying each free sensor
/// alone and together with one partner on a shared internal link whose
/// value restores conservation. Keeps the best strict improvement per step.
/// Returns `None` if no admissible attack was found.
pub fn greedy_attack(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    instance: &AttackInstance,
    grid: &[f64],
) -> Result<Option<AttackResult>, AttackError> {
    instance.validate(net, flows)?;
    let n = net.num_movements();
    let uppers: Vec<f64> = (0..n).map(|m| flow_upper_bound(net, flows, instance, m)).collect();
    let mut cur: Vec<f64> = flows.values().to_vec();
    let mut chosen = vec![false; n];
    let mut used = 0;
    let mut state = score_candidate(net, flows, instance, &uppers, &cur)?;
    let mut evaluations = 1;

    while used < instance.budget {
        let mut step: Option<(f64, Schedule, Vec<f64>, Vec<usize>)> = None;
        let mut consider = |cand: Vec<f64>, added: Vec<usize>, step: &mut Option<(f64, Schedule, Vec<f64>, Vec<usize>)>| -> Result<(), AttackError> {
            evaluations += 1;
            if let Some((v, sched)) = score_candidate(net, flows, instance, &uppers, &cand)? {
                let reference = step.as_ref().map(|s| s.0).or(state.as_ref().map(|s| s.0));
                if reference.map_or(true, |r| better(&instance.kind, v, r)) {
                    *step = Some((v, sched, cand, added));
                }
            }
            Ok(())
        };
        for m in 0..n {
            if chosen[m] {
                continue;
            }
            let mut values: Vec<f64> = Vec::new();
            for g in grid {
                let v = g * flows.get(m);
                if v != cur[m] && !values.contains(&v) {
                    values.push(v);
                }
            }
            let mv = net.movement(m);
            let links: Vec<LinkId> =
                [mv.from, mv.to].into_iter().filter(|&l| net.link(l).kind == LinkKind::Internal).collect();
            for &v in &values {
                let mut single = cur.clone();
                single[m] = v;
                consider(single, vec![m], &mut step)?;
                if used + 2 > instance.budget {
                    continue;
                }
                for &l in &links {
                    for &k in net.movements_into(l).iter().chain(net.movements_out_of(l)) {
                        if k == m || chosen[k] {
                            continue;
                        }
                        let mut vals: Vec<Option<f64>> = cur.iter().map(|&x| Some(x)).collect();
                        vals[m] = Some(v);
                        vals[k] = None;
                        if complete_by_conservation(net, &mut vals) {
                            consider(vals.into_iter().map(|x| x.unwrap_or(0.0)).collect(), vec![m, k], &mut step)?;
                        }
                    }
                }
            }
        }
        let Some((v, sched, cand, added)) = step else { break };
        for &m in &added {
            chosen[m] = true;
        }
        used += added.len();
        cur = cand;
        state = Some((v, sched));
    }
    let Some((objective, sched)) = state else { return Ok(None) };
    finish(net, flows, &instance.kind, cur, sched, AttackStatus::Optimal, objective, objective, evaluations).map(Some)
}

fn score_candidate(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    instance: &AttackInstance,
    uppers: &[f64],
    cand: &[f64],
) -> Result<Option<(f64, Schedule)>, AttackError> {
    for (m, &v) in cand.iter().enumerate() {
        if v < -1e-12 || v > uppers[m] + 1e-9 {
            return Ok(None);
        }
        if v > 0.0 && net.stages_of_movement(m).is_empty() {
            return Ok(None);
        }
    }
    let perturbed = FlowMatrix::new(cand.iter().map(|v| v.max(0.0)).collect()).map_err(|e| AttackError::Invalid(e.to_string()))?;
    if !check_conservation(net, &perturbed, 1e-9).is_empty() {
        return Ok(None);
    }
    let sched = fixed_time::solve_fixed_time(net, &perturbed)?;
    if sched.sums().iter().any(|&s| s > 1.0 - instance.epsilon) {
        return Ok(None);
    }
    Ok(evaluate_objective(net, flows, &instance.kind, &perturbed, &sched).map(|v| (v, sched)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub from: u64,
    pub to: u64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindSpec {
    WorstNetwork,
    WorstLane,
    RiskAverse,
}

/// Attack description as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub kind: KindSpec,
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_lane: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<Norm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
}

impl AttackSpec {
    pub fn to_instance(&self, net: &RoadNetwork) -> Result<AttackInstance, AttackError> {
        let kind = match self.kind {
            KindSpec::WorstNetwork => AttackKind::WorstNetwork,
            KindSpec::WorstLane => {
                let label = self
                    .target_lane
                    .ok_or_else(|| AttackError::Invalid("worst-lane attack needs target_lane".into()))?;
                let lane = net
                    .link_by_label(label)
                    .ok_or_else(|| AttackError::Invalid(format!("target lane {label} does not exist")))?;
                AttackKind::WorstLane { lane }
            }
            KindSpec::RiskAverse => {
                let targets = self
                    .targets
                    .iter()
                    .map(|t| {
                        net.find_movement(t.from, t.to)
                            .map(|movement| Target { movement, alpha: t.alpha })
                            .ok_or_else(|| AttackError::Invalid(format!("target movement ({},{}) does not exist", t.from, t.to)))
                    })
                    .collect::<Result<_, _>>()?;
                AttackKind::RiskAverse { targets, norm: self.norm.unwrap_or_default() }
            }
        };
        let mut inst = AttackInstance::new(kind, self.budget);
        if let Some(e) = self.epsilon {
            inst.epsilon = e;
        }
        Ok(inst)
    }

    pub fn grid(&self) -> Vec<f64> {
        self.grid.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::build_example_network;
    use crate::lp::{self, Tolerances};
    use crate::network::{LinkKind, NetworkBuilder};

    fn one_stage(c: f64, f: f64) -> (RoadNetwork, FlowMatrix) {
        let mut b = NetworkBuilder::new();
        let a = b.link(1, LinkKind::Entry, None);
        let z = b.link(2, LinkKind::Exit, None);
        let n = b.intersection(1, None);
        let m = b.movement(a, z, c);
        b.stage(n, vec![m], None);
        (b.build(1.0, 1.0).unwrap(), FlowMatrix::new(vec![f]).unwrap())
    }

    fn fixed_kkt(net: &RoadNetwork, ft: &[f64], sense: Sense) -> Option<Vec<f64>> {
        let mut m = MilpModel::new(sense);
        let vars: Vec<usize> = ft.iter().map(|&v| m.add_var("f", v, v, 0.0)).collect();
        let k = build_kkt_inner(&mut m, net, &vars, DEFAULT_EPSILON).unwrap();
        for &l in &k.lambda {
            m.lp.objective[l] = 1.0;
        }
        let s = milp::solve_milp(&m, &MilpOptions::default()).unwrap();
        s.x.map(|x| k.lambda.iter().map(|&l| x[l]).collect())
    }

    #[test]
    fn kkt_single_stage_forced() {
        let (net, _) = one_stage(10.0, 4.0);
        for sense in [Sense::Maximize, Sense::Minimize] {
            let l = fixed_kkt(&net, &[4.0], sense).unwrap();
            assert!((l[0] - 0.4).abs() < 1e-9);
        }
    }

    #[test]
    fn kkt_zero_flows() {
        let (net, flows) = build_example_network();
        let l = fixed_kkt(&net, &vec![0.0; flows.len()], Sense::Maximize).unwrap();
        assert!(l.iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn kkt_example_sums() {
        let (net, flows) = build_example_network();
        for sense in [Sense::Maximize, Sense::Minimize] {
            let l = fixed_kkt(&net, flows.values(), sense).unwrap();
            let sched = Schedule::from_durations(&net, l);
            assert!((sched.sums()[0] - 0.5625).abs() < 1e-9);
            assert!((sched.sums()[1] - 0.75).abs() < 1e-9);
        }
    }

    #[test]
    fn kkt_rejects_uncovered_positive_flow() {
        let mut b = NetworkBuilder::new();
        let a = b.link(1, LinkKind::Entry, None);
        let z = b.link(2, LinkKind::Exit, None);
        let y = b.link(3, LinkKind::Exit, None);
        let n = b.intersection(1, None);
        let m0 = b.movement(a, z, 10.0);
        b.movement(a, y, 10.0);
        b.stage(n, vec![m0], None);
        let net = b.build(1.0, 1.0).unwrap();
        let mut m = MilpModel::new(Sense::Maximize);
        let f0 = m.add_var("f0", 1.0, 1.0, 0.0);
        let f1 = m.add_var("f1", 1.0, 1.0, 0.0);
        assert!(matches!(build_kkt_inner(&mut m, &net, &[f0, f1], 1e-6), Err(AttackError::Uncovered { .. })));
        let inst = AttackInstance::new(AttackKind::WorstNetwork, 1);
        let flows = FlowMatrix::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(build_worst_network(&net, &flows, &inst), Err(AttackError::Uncovered { .. })));
    }

    #[test]
    fn nominal_start_is_feasible() {
        let (net, flows) = build_example_network();
        for kind in [AttackKind::WorstNetwork, AttackKind::WorstLane { lane: LinkId(0) }] {
            let am = build_attack(&net, &flows, &AttackInstance::new(kind, 2)).unwrap();
            let x = am.nominal_start(&net, &flows).expect("nominal point admissible");
            assert!(am.milp.lp.objective_value(&x).abs() < 1e-9 || am.kind != AttackKind::WorstNetwork);
        }
    }

    #[test]
    fn worst_network_budget_zero() {
        let (net, flows) = build_example_network();
        let r = solve_attack(&net, &flows, &AttackInstance::new(AttackKind::WorstNetwork, 0), &MilpOptions::default()).unwrap();
        assert!(r.objective.abs() < 1e-9);
        assert!(r.compromised.is_empty());
    }

    #[test]
    fn worst_network_budget_one() {
        let (net, flows) = build_example_network();
        let inst = AttackInstance::new(AttackKind::WorstNetwork, 1);
        let r = solve_attack(&net, &flows, &inst, &MilpOptions::default()).unwrap();
        let m36 = net.find_movement(3, 6).unwrap();
        assert!((r.objective - 2.0).abs() < 1e-6, "{}", r.objective);
        assert_eq!(r.compromised, vec![SensorId(m36)]);
        // any report in [0, 2] leaves the other phase of that stage binding
        assert!(r.perturbed.get(m36) <= 2.0 + 1e-7);
        assert!((r.realized_accumulation[m36] - 2.0).abs() < 1e-6);
        assert!(check_admissible(&net, &flows, &inst, &r, 1e-7).is_empty());
    }

    #[test]
    fn worst_lane_nominal() {
        let (net, flows) = build_example_network();
        let lane = net.link_by_label(1).unwrap();
        let inst = AttackInstance::new(AttackKind::WorstLane { lane }, 0);
        let r = solve_attack(&net, &flows, &inst, &MilpOptions::default()).unwrap();
        assert!((r.objective - 6.0).abs() < 1e-6);
    }

    #[test]
    fn risk_averse_negative_alpha() {
        let (net, flows) = build_example_network();
        let movement = net.find_movement(3, 6).unwrap();
        let kind = AttackKind::RiskAverse { targets: vec![Target { movement, alpha: -1.0 }], norm: Norm::Infinity };
        let r = solve_attack(&net, &flows, &AttackInstance::new(kind, 1), &MilpOptions::default());
        assert_eq!(r.unwrap_err(), AttackError::Infeasible);
    }

    #[test]
    fn validation() {
        let (net, flows) = build_example_network();
        let too_big = AttackInstance::new(AttackKind::WorstNetwork, 17);
        assert!(matches!(too_big.validate(&net, &flows), Err(AttackError::Invalid(_))));
        let exit = net.link_by_label(2).unwrap();
        let lane = AttackInstance::new(AttackKind::WorstLane { lane: exit }, 1);
        assert!(matches!(build_worst_lane(&net, &flows, &lane), Err(AttackError::Invalid(_))));
        let empty = AttackInstance::new(AttackKind::RiskAverse { targets: vec![], norm: Norm::One }, 1);
        assert!(empty.validate(&net, &flows).is_err());
    }

    #[test]
    fn oracle_size_guard() {
        let (net, flows) = build_example_network();
        let inst = AttackInstance::new(AttackKind::WorstNetwork, 5);
        assert!(matches!(brute_force_oracle(&net, &flows, &inst, &DEFAULT_GRID), Err(AttackError::TooLarge { .. })));
    }

    #[test]
    fn oracle_budget_zero_and_one() {
        let (net, flows) = build_example_network();
        let r0 = brute_force_oracle(&net, &flows, &AttackInstance::new(AttackKind::WorstNetwork, 0), &DEFAULT_GRID).unwrap();
        assert_eq!(r0.objective, 0.0);
        let r1 = brute_force_oracle(&net, &flows, &AttackInstance::new(AttackKind::WorstNetwork, 1), &DEFAULT_GRID).unwrap();
        assert!((r1.objective - 2.0).abs() < 1e-9);
        assert_eq!(r1.compromised, vec![SensorId(net.find_movement(3, 6).unwrap())]);
    }

    #[test]
    fn conservation_completion() {
        let (net, flows) = build_example_network();
        // (3,14) alone cannot change, its partner on link 14 balances it
        let m = net.find_movement(3, 14).unwrap();
        let mut vals: Vec<Option<f64>> = flows.values().iter().map(|&v| Some(v)).collect();
        vals[m] = None;
        assert!(complete_by_conservation(&net, &mut vals));
        assert_eq!(vals[m], Some(flows.get(m)));
    }

    #[test]
    fn spec_parsing() {
        let (net, _) = build_example_network();
        let spec: AttackSpec =
            serde_json::from_str(r#"{"kind":"risk-averse","budget":1,"targets":[{"from":3,"to":6,"alpha":2.0}],"norm":"one"}"#).unwrap();
        let inst = spec.to_instance(&net).unwrap();
        assert_eq!(inst.budget, 1);
        assert!(matches!(inst.kind, AttackKind::RiskAverse { norm: Norm::One, .. }));
        let lane: AttackSpec = serde_json::from_str(r#"{"kind":"worst-lane","budget":0,"target_lane":99}"#).unwrap();
        assert!(lane.to_instance(&net).is_err());
        assert!(serde_json::from_str::<AttackSpec>(r#"{"kind":"worst-network","budget":1,"extra":1}"#).is_err());
        assert_eq!(spec.grid(), DEFAULT_GRID.to_vec());
    }

    #[test]
    fn lp_text_dump_lists_binaries() {
        let (net, flows) = build_example_network();
        let am = build_attack(&net, &flows, &AttackInstance::new(AttackKind::WorstNetwork, 1)).unwrap();
        let mut buf = Vec::new();
        am.milp.write_lp_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("z_3_6"));
        let _ = lp::solve_lp(&am.milp.lp, &Tolerances::default()).unwrap();
    }
}
