//! Fixed-time control: minimum total green fraction covering every flow,
//! solved as one small LP per intersection.

use std::io::{self, Write};

use thiserror::Error;

use crate::lp::{self, LpError, LpModel, LpStatus, Relation, Sense, Tolerances};
use crate::network::{FlowMatrix, IntersectionId, RoadNetwork};

/// Margin below 1 inside which a feasible schedule is flagged as marginal.
pub const STRICT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixedTimeError {
    #[error("movement ({from},{to}) carries flow {flow} but belongs to no stage")]
    Uncovered { from: u64, to: u64, flow: f64 },
    #[error("cycle length undefined: max stage-time sum {sum} is not below 1")]
    CycleUndefined { sum: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("fixed-time LP returned {0:?}")]
    UnexpectedStatus(LpStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    /// Σλ within `STRICT_EPS` of 1.
    Marginal,
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(self) -> bool {
        self != Feasibility::Infeasible
    }
}

/// Stage durations (fractions of a cycle), indexed by network stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    durations: Vec<f64>,
    sums: Vec<f64>,
}

/// Solution of one intersection's LP, in the order of
/// `stages_of_intersection` / `movements_of_intersection`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionSolution {
    pub durations: Vec<f64>,
    /// Dual price of each movement's coverage row.
    pub duals: Vec<f64>,
    pub total: f64,
}

fn intersection_lp(net: &RoadNetwork, flows: &FlowMatrix, n: IntersectionId) -> Result<LpModel, FixedTimeError> {
    let stages = net.stages_of_intersection(n);
    let mut model = LpModel::new(Sense::Minimize);
    for &s in stages {
        model.add_var(format!("lambda_{}", net.stage_label(s)), 0.0, f64::INFINITY, 1.0);
    }
    for &m in net.movements_of_intersection(n) {
        let c = net.movement(m).saturation;
        let coeffs: Vec<(usize, f64)> = net
            .stages_of_movement(m)
            .iter()
            .map(|s| (stages.iter().position(|x| x == s).expect("stage of this intersection"), c))
            .collect();
        let f = flows.get(m);
        if coeffs.is_empty() && f > 0.0 {
            let (from, to) = net.movement_labels(m);
            return Err(FixedTimeError::Uncovered { from, to, flow: f });
        }
        model.add_constraint(coeffs, Relation::Ge, f);
    }
    Ok(model)
}

pub fn solve_intersection(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    n: IntersectionId,
) -> Result<IntersectionSolution, FixedTimeError> {
    let model = intersection_lp(net, flows, n)?;
    let sol = lp::solve_lp(&model, &Tolerances::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(FixedTimeError::UnexpectedStatus(sol.status));
    }
    Ok(IntersectionSolution { total: sol.x.iter().sum(), durations: sol.x, duals: sol.duals })
}

pub fn solve_fixed_time(net: &RoadNetwork, flows: &FlowMatrix) -> Result<Schedule, FixedTimeError> {
    let mut durations = vec![0.0; net.stages().len()];
    for n in 0..net.intersections().len() {
        let n = IntersectionId(n);
        let sol = solve_intersection(net, flows, n)?;
        for (&s, &v) in net.stages_of_intersection(n).iter().zip(&sol.durations) {
            durations[s] = v;
        }
    }
    Ok(Schedule::from_durations(net, durations))
}

/// Single LP over every stage of the network; used to confirm that the
/// per-intersection decomposition loses nothing.
pub fn solve_fixed_time_joint(net: &RoadNetwork, flows: &FlowMatrix) -> Result<Schedule, FixedTimeError> {
    let mut model = LpModel::new(Sense::Minimize);
    for s in 0..net.stages().len() {
        model.add_var(format!("lambda_{s}"), 0.0, f64::INFINITY, 1.0);
    }
    for m in 0..net.num_movements() {
        let c = net.movement(m).saturation;
        let coeffs: Vec<(usize, f64)> = net.stages_of_movement(m).iter().map(|&s| (s, c)).collect();
        if coeffs.is_empty() && flows.get(m) > 0.0 {
            let (from, to) = net.movement_labels(m);
            return Err(FixedTimeError::Uncovered { from, to, flow: flows.get(m) });
        }
        model.add_constraint(coeffs, Relation::Ge, flows.get(m));
    }
    let sol = lp::solve_lp(&model, &Tolerances::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(FixedTimeError::UnexpectedStatus(sol.status));
    }
    Ok(Schedule::from_durations(net, sol.x))
}

impl Schedule {
    pub fn from_durations(net: &RoadNetwork, durations: Vec<f64>) -> Self {
        assert_eq!(durations.len(), net.stages().len(), "one duration per stage");
        let sums = (0..net.intersections().len())
            .map(|n| net.stages_of_intersection(IntersectionId(n)).iter().map(|&s| durations[s]).sum())
            .collect();
        Schedule { durations, sums }
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn duration(&self, stage: usize) -> f64 {
        self.durations[stage]
    }

    /// Σλ_S at each intersection.
    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn total(&self) -> f64 {
        self.durations.iter().sum()
    }

    pub fn max_sum(&self) -> f64 {
        self.sums.iter().copied().fold(0.0, f64::max)
    }

    /// Copy with one stage duration replaced.
    pub fn with_duration(&self, net: &RoadNetwork, stage: usize, value: f64) -> Self {
        let mut d = self.durations.clone();
        d[stage] = value;
        Schedule::from_durations(net, d)
    }

    pub fn intersection_feasibility(&self) -> Vec<Feasibility> {
        self.sums.iter().map(|&s| classify(s)).collect()
    }

    pub fn feasibility(&self) -> Feasibility {
        classify(self.max_sum())
    }

    pub fn is_feasible(&self) -> bool {
        self.feasibility().is_feasible()
    }
}

fn classify(sum: f64) -> Feasibility {
    if sum >= 1.0 {
        Feasibility::Infeasible
    } else if sum >= 1.0 - STRICT_EPS {
        Feasibility::Marginal
    } else {
        Feasibility::Feasible
    }
}

/// Network cycle length in seconds, governed by the busiest intersection:
/// T = L / (1 − max Σλ) · τ.
pub fn cycle_length(sched: &Schedule, lost_time: f64, sample_rate: f64) -> Result<f64, FixedTimeError> {
    cycle_for_sum(sched.max_sum(), lost_time, sample_rate)
}

pub fn intersection_cycle_lengths(sched: &Schedule, lost_time: f64, sample_rate: f64) -> Vec<Result<f64, FixedTimeError>> {
    sched.sums.iter().map(|&s| cycle_for_sum(s, lost_time, sample_rate)).collect()
}

fn cycle_for_sum(sum: f64, lost_time: f64, sample_rate: f64) -> Result<f64, FixedTimeError> {
    if sum >= 1.0 {
        return Err(FixedTimeError::CycleUndefined { sum });
    }
    Ok(lost_time / (1.0 - sum) * sample_rate)
}

/// s(i,j) = Σ_S λ_S c(i,j) S(i,j).
pub fn service_rates(net: &RoadNetwork, sched: &Schedule) -> Vec<f64> {
    (0..net.num_movements())
        .map(|m| {
            let c = net.movement(m).saturation;
            net.stages_of_movement(m).iter().map(|&s| sched.durations[s] * c).sum()
        })
        .collect()
}

/// Movements served below their flow by more than `tol`.
pub fn unstable_movements(net: &RoadNetwork, flows: &FlowMatrix, sched: &Schedule, tol: f64) -> Vec<usize> {
    service_rates(net, sched)
        .iter()
        .enumerate()
        .filter(|&(m, &s)| s < flows.get(m) - tol)
        .map(|(m, _)| m)
        .collect()
}

/// `intersection,stage,duration` rows in stage order.
pub fn write_schedule_csv<W: Write>(net: &RoadNetwork, sched: &Schedule, w: W) -> io::Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(["intersection", "stage", "duration"])?;
    for (s, st) in net.stages().iter().enumerate() {
        out.write_record([
            net.intersections()[st.intersection.0].label.to_string(),
            net.stage_label(s),
            sched.duration(s).to_string(),
        ])?;
    }
    out.flush()
}

/// `intersection,sum_lambda,cycle_seconds` rows; the cycle column is empty
/// when undefined.
pub fn write_schedule_summary_csv<W: Write>(net: &RoadNetwork, sched: &Schedule, w: W) -> io::Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(["intersection", "sum_lambda", "cycle_seconds"])?;
    let cycles = intersection_cycle_lengths(sched, net.lost_time(), net.sample_rate());
    for (n, c) in cycles.iter().enumerate() {
        out.write_record([
            net.intersections()[n].label.to_string(),
            sched.sums()[n].to_string(),
            c.as_ref().map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::build_example_network;

    #[test]
    fn example_durations_are_exact_fractions() {
        let (net, flows) = build_example_network();
        let sched = solve_fixed_time(&net, &flows).unwrap();
        let expect = [0.25, 1.0 / 16.0, 0.125, 0.125, 0.25, 2.0 / 24.0, 0.25, 4.0 / 24.0];
        for (got, want) in sched.durations().iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!((sched.sums()[0] - 0.5625).abs() < 1e-12);
        assert!((sched.sums()[1] - 0.75).abs() < 1e-12);
        assert_eq!(sched.feasibility(), Feasibility::Feasible);
    }

    #[test]
    fn zero_flows_zero_schedule() {
        let (net, flows) = build_example_network();
        let sched = solve_fixed_time(&net, &FlowMatrix::zeros(flows.len())).unwrap();
        assert!(sched.durations().iter().all(|&d| d == 0.0));
        assert!(sched.is_feasible());
        assert_eq!(cycle_length(&sched, 1.0, 1.0).unwrap(), 1.0);
        assert!(service_rates(&net, &sched).iter().all(|&s| s == 0.0));
        assert!(unstable_movements(&net, &FlowMatrix::zeros(flows.len()), &sched, 1e-9).is_empty());
    }

    #[test]
    fn doubled_second_intersection_is_infeasible() {
        let (net, flows) = build_example_network();
        let doubled: Vec<f64> = (0..net.num_movements())
            .map(|m| if net.movement_intersection(m).0 == 1 { 2.0 * flows.get(m) } else { flows.get(m) })
            .collect();
        let sched = solve_fixed_time(&net, &FlowMatrix::new(doubled).unwrap()).unwrap();
        assert!((sched.sums()[1] - 1.5).abs() < 1e-12);
        assert_eq!(sched.intersection_feasibility(), vec![Feasibility::Feasible, Feasibility::Infeasible]);
        assert!(!sched.is_feasible());
        assert!(matches!(cycle_length(&sched, 1.0, 1.0), Err(FixedTimeError::CycleUndefined { .. })));
    }

    #[test]
    fn cycle_length_arithmetic() {
        let (net, flows) = build_example_network();
        let sched = solve_fixed_time(&net, &flows).unwrap();
        assert!((cycle_length(&sched, 1.0, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((cycle_length(&sched, 1.0, 2.5).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(cycle_for_sum(0.5, 2.0, 3.0).unwrap(), 12.0);
        let per = intersection_cycle_lengths(&sched, 1.0, 1.0);
        assert!((per[0].as_ref().unwrap() - 1.0 / 0.4375).abs() < 1e-12);
    }

    #[test]
    fn marginal_band() {
        assert_eq!(classify(1.0 - 1e-10), Feasibility::Marginal);
        assert_eq!(classify(1.0), Feasibility::Infeasible);
        assert_eq!(classify(0.0), Feasibility::Feasible);
    }

    #[test]
    fn service_rates_and_instability() {
        let (net, flows) = build_example_network();
        let sched = solve_fixed_time(&net, &flows).unwrap();
        let s = service_rates(&net, &sched);
        let m314 = net.find_movement(3, 14).unwrap();
        let m74 = net.find_movement(7, 4).unwrap();
        assert!((s[m314] - 8.0).abs() < 1e-12);
        assert!((s[m74] - 8.0).abs() < 1e-12);
        assert!(unstable_movements(&net, &flows, &sched, 1e-9).is_empty());

        let phi3 = net.stages().iter().position(|st| st.name.as_deref() == Some("phi3")).unwrap();
        let cut = sched.with_duration(&net, phi3, 0.0625);
        assert_eq!(unstable_movements(&net, &flows, &cut, 1e-9), vec![net.find_movement(3, 6).unwrap()]);
    }

    #[test]
    fn uncovered_positive_flow_is_an_error() {
        let (net, flows) = build_example_network();
        let mut file = crate::network::NetworkFile::from_network(&net, &flows);
        file.stages[0].phases.retain(|p| *p != [3, 14]);
        let (net2, flows2) = file.into_network().unwrap();
        assert!(matches!(
            solve_fixed_time(&net2, &flows2),
            Err(FixedTimeError::Uncovered { from: 3, to: 14, .. })
        ));
    }

    #[test]
    fn schedule_csv_layout() {
        let (net, flows) = build_example_network();
        let sched = solve_fixed_time(&net, &flows).unwrap();
        let mut buf = Vec::new();
        write_schedule_csv(&net, &sched, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "intersection,stage,duration");
        assert_eq!(lines[1], "1,phi1,0.25");
        assert_eq!(lines.len(), 9);
    }
}
