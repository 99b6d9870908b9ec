//! Vulnerability metrics, budget sweeps, critical sensors, a fluid queue
//! simulator and CSV reports.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::attack::{self, AttackError, AttackInstance, AttackKind, AttackResult, AttackStatus};
use crate::fixed_time::{self, Schedule};
use crate::milp::MilpOptions;
use crate::network::{total_flow, FlowMatrix, LinkId, RoadNetwork, SensorId};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0} has zero flow")]
    ZeroFlow(String),
    #[error("no attack instances to count sensors over")]
    EmptyEnsemble,
    #[error("sweep objective drops from {previous} to {current} at budget {budget}")]
    NonMonotone { budget: usize, previous: f64, current: f64 },
    #[error("simulation needs at least one period")]
    NoPeriods,
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Network vulnerability: realized accumulation over total flow.
pub fn network_vulnerability(flows: &FlowMatrix, result: &AttackResult) -> Result<f64, AnalysisError> {
    let total = total_flow(flows);
    if total <= 0.0 {
        return Err(AnalysisError::ZeroFlow("network".into()));
    }
    Ok(result.realized_accumulation.iter().sum::<f64>() / total)
}

/// Lane vulnerability over the movements leaving `lane`.
pub fn lane_vulnerability(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    result: &AttackResult,
    lane: LinkId,
) -> Result<f64, AnalysisError> {
    let out = net.movements_out_of(lane);
    let total: f64 = out.iter().map(|&m| flows.get(m)).sum();
    if total <= 0.0 {
        return Err(AnalysisError::ZeroFlow(format!("lane {}", net.link(lane).label)));
    }
    Ok(out.iter().map(|&m| result.realized_accumulation[m]).sum::<f64>() / total)
}

/// Vulnerability of every lane that carries outgoing flow, in link order.
pub fn lane_vulnerabilities(net: &RoadNetwork, flows: &FlowMatrix, result: &AttackResult) -> Vec<(LinkId, f64)> {
    (0..net.links().len())
        .map(LinkId)
        .filter_map(|l| lane_vulnerability(net, flows, result, l).ok().map(|v| (l, v)))
        .collect()
}

/// Two readings of "total service time" lost to an attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceMetrics {
    /// Relative drop of the network's total green fraction Σλ.
    pub green_reduction: f64,
    /// Relative drop of served flow Σ min(f, ŝ); equals NV.
    pub served_reduction: f64,
}

pub fn service_metrics(net: &RoadNetwork, flows: &FlowMatrix, result: &AttackResult) -> Result<ServiceMetrics, AnalysisError> {
    let nominal = fixed_time::solve_fixed_time(net, flows).map_err(AttackError::from)?;
    let base = nominal.total();
    if base <= 0.0 {
        return Err(AnalysisError::ZeroFlow("network".into()));
    }
    Ok(ServiceMetrics {
        green_reduction: 1.0 - result.realized.total() / base,
        served_reduction: network_vulnerability(flows, result)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub budget: usize,
    pub nv: f64,
    pub result: AttackResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub milp: MilpOptions,
    pub workers: usize,
    pub epsilon: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { milp: MilpOptions::default(), workers: 1, epsilon: attack::DEFAULT_EPSILON }
    }
}

/// Solves the attack for every budget 0..=b_max. Budgets are independent,
/// so with several workers only wall-clock time changes. For worst-network
/// attacks solved to optimality the objective must not decrease.
pub fn budget_sweep(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    kind: &AttackKind,
    b_max: usize,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>, AnalysisError> {
    let budgets = b_max + 1;
    let slots: Mutex<Vec<Option<Result<SweepRow, AnalysisError>>>> = Mutex::new((0..budgets).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let solve = |b: usize| -> Result<SweepRow, AnalysisError> {
        let mut inst = AttackInstance::new(kind.clone(), b);
        inst.epsilon = opts.epsilon;
        let result = attack::solve_attack(net, flows, &inst, &opts.milp)?;
        let nv = network_vulnerability(flows, &result)?;
        Ok(SweepRow { budget: b, nv, result })
    };
    let work = || loop {
        let b = next.fetch_add(1, Ordering::SeqCst);
        if b >= budgets {
            break;
        }
        log::info!("sweep: budget {b}");
        let row = solve(b);
        slots.lock().expect("sweep slot lock")[b] = Some(row);
    };
    let workers = opts.workers.clamp(1, budgets);
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(work);
            }
        });
    }
    let rows = slots
        .into_inner()
        .expect("sweep slot lock")
        .into_iter()
        .map(|r| r.expect("every budget solved"))
        .collect::<Result<Vec<_>, _>>()?;
    if *kind == AttackKind::WorstNetwork && rows.iter().all(|r| r.result.status == AttackStatus::Optimal) {
        check_monotone(&rows, 1e-7)?;
    }
    Ok(rows)
}

pub fn check_monotone(rows: &[SweepRow], tol: f64) -> Result<(), AnalysisError> {
    for w in rows.windows(2) {
        if w[1].result.objective < w[0].result.objective - tol {
            return Err(AnalysisError::NonMonotone {
                budget: w[1].budget,
                previous: w[0].result.objective,
                current: w[1].result.objective,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrequency {
    pub sensor: SensorId,
    pub frequency: f64,
}

/// Share of positive-budget sweep instances whose attack uses each sensor,
/// most frequent first, sensor order on ties.
pub fn critical_sensors(net: &RoadNetwork, rows: &[SweepRow]) -> Result<Vec<SensorFrequency>, AnalysisError> {
    let ensemble: Vec<&SweepRow> = rows.iter().filter(|r| r.budget >= 1).collect();
    if ensemble.is_empty() {
        return Err(AnalysisError::EmptyEnsemble);
    }
    let mut counts = vec![0usize; net.num_movements()];
    for r in &ensemble {
        for s in &r.result.compromised {
            counts[s.0] += 1;
        }
    }
    let mut out: Vec<SensorFrequency> = counts
        .iter()
        .enumerate()
        .map(|(s, &c)| SensorFrequency { sensor: SensorId(s), frequency: c as f64 / ensemble.len() as f64 })
        .collect();
    out.sort_by(|a, b| b.frequency.total_cmp(&a.frequency).then(a.sensor.cmp(&b.sensor)));
    Ok(out)
}

/// Queue length of every movement at t = 0..=periods.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub queues: Vec<Vec<f64>>,
}

impl SimTrace {
    pub fn periods(&self) -> usize {
        self.queues.len() - 1
    }

    pub fn final_queues(&self) -> &[f64] {
        self.queues.last().expect("trace holds the initial state")
    }

    /// Average growth per period of movement `m` between `t0` and `t1`.
    pub fn slope(&self, m: usize, t0: usize, t1: usize) -> f64 {
        (self.queues[t1][m] - self.queues[t0][m]) / (t1 - t0) as f64
    }

    /// Final queue waiting on each link (its outgoing movements),
    /// normalized by the largest; all zero when nothing queues.
    pub fn heatmap(&self, net: &RoadNetwork) -> Vec<(LinkId, f64)> {
        let last = self.final_queues();
        let raw: Vec<f64> = (0..net.links().len())
            .map(|l| net.movements_out_of(LinkId(l)).iter().map(|&m| last[m]).sum())
            .collect();
        let max = raw.iter().copied().fold(0.0, f64::max);
        raw.into_iter()
            .enumerate()
            .map(|(l, q)| (LinkId(l), if max > 0.0 { q / max } else { 0.0 }))
            .collect()
    }
}

/// q(t+1) = max(0, q(t) + f − s) from empty queues.
pub fn simulate_queues(
    net: &RoadNetwork,
    flows: &FlowMatrix,
    sched: &Schedule,
    periods: usize,
) -> Result<SimTrace, AnalysisError> {
    if periods == 0 {
        return Err(AnalysisError::NoPeriods);
    }
    let service = fixed_time::service_rates(net, sched);
    let mut queues = Vec::with_capacity(periods + 1);
    let mut q = vec![0.0; net.num_movements()];
    queues.push(q.clone());
    for _ in 0..periods {
        for (m, v) in q.iter_mut().enumerate() {
            *v = (*v + flows.get(m) - service[m]).max(0.0);
        }
        queues.push(q.clone());
    }
    Ok(SimTrace { queues })
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["budget", "objective", "nv"])?;
    for r in rows {
        out.write_record([r.budget.to_string(), r.result.objective.to_string(), r.nv.to_string()])?;
    }
    out.flush()
}

pub fn write_critical_csv<W: Write>(net: &RoadNetwork, freqs: &[SensorFrequency], w: W) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["sensor", "from", "to", "frequency"])?;
    for f in freqs {
        let (from, to) = net.movement_labels(f.sensor.0);
        out.write_record([f.sensor.0.to_string(), from.to_string(), to.to_string(), f.frequency.to_string()])?;
    }
    out.flush()
}

pub fn write_accumulation_csv<W: Write>(net: &RoadNetwork, flows: &FlowMatrix, sched: &Schedule, w: W) -> io::Result<()> {
    let service = fixed_time::service_rates(net, sched);
    let mut out = csv_writer(w);
    out.write_record(["from", "to", "flow", "service", "accumulation"])?;
    for m in 0..net.num_movements() {
        let (from, to) = net.movement_labels(m);
        let acc = (flows.get(m) - service[m]).max(0.0);
        out.write_record([
            from.to_string(),
            to.to_string(),
            flows.get(m).to_string(),
            service[m].to_string(),
            acc.to_string(),
        ])?;
    }
    out.flush()
}

pub fn write_heatmap_csv<W: Write>(net: &RoadNetwork, trace: &SimTrace, w: W) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["link", "intensity"])?;
    for (l, v) in trace.heatmap(net) {
        out.write_record([net.link(l).label.to_string(), v.to_string()])?;
    }
    out.flush()
}

/// Tables to write; absent parts produce no file.
#[derive(Debug, Clone, Default)]
pub struct Report<'a> {
    pub sweep: Option<&'a [SweepRow]>,
    pub critical: Option<&'a [SensorFrequency]>,
    /// Schedule whose per-movement accumulation is reported.
    pub schedule: Option<&'a Schedule>,
    pub trace: Option<&'a SimTrace>,
}

/// Writes `sweep.csv`, `critical.csv`, `accumulation.csv` and
/// `heatmap.csv` into `dir` for the parts present; returns the paths.
pub fn emit_report(dir: &Path, net: &RoadNetwork, flows: &FlowMatrix, report: &Report) -> Result<Vec<PathBuf>, AnalysisError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| AnalysisError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> io::Result<()>| -> Result<(), AnalysisError> {
        let path = dir.join(name);
        let mut buf = Vec::new();
        f(&mut buf).map_err(io_err(&path))?;
        fs::write(&path, buf).map_err(io_err(&path))?;
        written.push(path);
        Ok(())
    };
    if let Some(rows) = report.sweep {
        emit("sweep.csv", &|b| write_sweep_csv(rows, b))?;
    }
    if let Some(freqs) = report.critical {
        emit("critical.csv", &|b| write_critical_csv(net, freqs, b))?;
    }
    if let Some(sched) = report.schedule {
        emit("accumulation.csv", &|b| write_accumulation_csv(net, flows, sched, b))?;
    }
    if let Some(trace) = report.trace {
        emit("heatmap.csv", &|b| write_heatmap_csv(net, trace, b))?;
    }
    Ok(written)
}
