use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::Path;

use sigvuln_core::analysis::{self, AnalysisError, Report, SweepOptions};
use sigvuln_core::attack::{self, AttackError, AttackInstance, AttackKind, AttackSpec, AttackStatus};
use sigvuln_core::fixed_time::{self, Feasibility, FixedTimeError};
use sigvuln_core::fixtures;
use sigvuln_core::milp::{self, MilpOptions};
use sigvuln_core::network::{self, check_conservation, NetworkError, RoadNetwork};

/// Command failure, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Infeasible or inconsistent model (exit 1).
    Domain(String),
    /// Unreadable or malformed input, bad arguments (exit 2).
    Input(String),
    /// Solver limit reached (exit 3).
    Limit(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Input(_) => 2,
            Failure::Limit(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Domain(m) | Failure::Input(m) | Failure::Limit(m) => f.write_str(m),
        }
    }
}

impl From<NetworkError> for Failure {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Io { .. } | NetworkError::Parse(_) => Failure::Input(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<AttackError> for Failure {
    fn from(e: AttackError) -> Self {
        match e {
            AttackError::Invalid(_) | AttackError::TooLarge { .. } => Failure::Input(e.to_string()),
            AttackError::NoIncumbent { .. } => Failure::Limit(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<FixedTimeError> for Failure {
    fn from(e: FixedTimeError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Attack(a) => a.into(),
            AnalysisError::Io { .. } | AnalysisError::NoPeriods => Failure::Input(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

/// Rounds to 9 decimals for display, so 0.7499999999999999 prints as 0.75.
fn display_sum(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

fn io_failure(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(io_failure(path))
}

fn load_spec(path: &Path, net: &RoadNetwork, budget: Option<usize>, epsilon: Option<f64>) -> Result<(AttackSpec, AttackInstance), Failure> {
    let text = fs::read_to_string(path).map_err(io_failure(path))?;
    let spec: AttackSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut inst = spec.to_instance(net)?;
    if let Some(b) = budget {
        inst.budget = b;
    }
    if let Some(e) = epsilon {
        inst.epsilon = e;
    }
    Ok((spec, inst))
}

pub fn validate(path: &Path) -> Result<(), Failure> {
    let (net, flows) = network::load_network(path)?;
    for w in net.warnings() {
        eprintln!("warning: {w}");
    }
    let violations = check_conservation(&net, &flows, 1e-9);
    if !violations.is_empty() {
        for v in &violations {
            println!(
                "link {}: inflow {} outflow {} (imbalance {})",
                net.link(v.link).label,
                v.inflow,
                v.outflow,
                v.magnitude()
            );
        }
        return Err(Failure::Domain(format!("flow conservation fails on {} internal link(s)", violations.len())));
    }
    println!(
        "ok: {} links, {} intersections, {} movements, {} stages, total flow {}",
        net.links().len(),
        net.intersections().len(),
        net.num_movements(),
        net.stages().len(),
        network::total_flow(&flows)
    );
    Ok(())
}

pub fn schedule(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let (net, flows) = network::load_network(path)?;
    let sched = fixed_time::solve_fixed_time(&net, &flows)?;
    fixed_time::write_schedule_csv(&net, &sched, io::stdout().lock()).map_err(|e| Failure::Input(e.to_string()))?;
    let verdicts = sched.intersection_feasibility();
    for (n, (&sum, v)) in sched.sums().iter().zip(&verdicts).enumerate() {
        let label = net.intersections()[n].label;
        let tag = match v {
            Feasibility::Feasible => "feasible",
            Feasibility::Marginal => "marginal",
            Feasibility::Infeasible => "infeasible",
        };
        println!("intersection {label}: sum lambda = {} ({tag})", display_sum(sum));
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io_failure(dir))?;
        let p = dir.join("schedule.csv");
        fixed_time::write_schedule_csv(&net, &sched, create(&p)?).map_err(io_failure(&p))?;
        let p = dir.join("summary.csv");
        fixed_time::write_schedule_summary_csv(&net, &sched, create(&p)?).map_err(io_failure(&p))?;
    }
    match sched.feasibility() {
        Feasibility::Infeasible => {
            println!("INFEASIBLE (sum lambda = {})", display_sum(sched.max_sum()));
            Err(Failure::Domain("no stable fixed-time schedule exists".into()))
        }
        f => {
            if f == Feasibility::Marginal {
                eprintln!("warning: sum lambda {} is within 1e-9 of 1", sched.max_sum());
            }
            let factor = fixed_time::cycle_length(&sched, net.lost_time(), 1.0)?;
            println!("T = {factor:.6} * tau");
            println!("cycle = {:.6} s", factor * net.sample_rate());
            Ok(())
        }
    }
}

pub struct AttackRun<'a> {
    pub network: &'a Path,
    pub spec: &'a Path,
    pub budget: Option<usize>,
    pub oracle: bool,
    pub out: Option<&'a Path>,
    pub node_log: Option<&'a Path>,
    pub dump_model: Option<&'a Path>,
    pub epsilon: Option<f64>,
    pub opts: MilpOptions,
}

pub fn attack(run: AttackRun) -> Result<(), Failure> {
    let (net, flows) = network::load_network(run.network)?;
    let (spec, inst) = load_spec(run.spec, &net, run.budget, run.epsilon)?;
    inst.validate(&net, &flows)?;
    println!("attack: {}, budget {}", inst.kind.name(), inst.budget);

    if let Some(p) = run.dump_model {
        let model = attack::build_attack(&net, &flows, &inst)?;
        model.milp.write_lp_text(create(p)?).map_err(io_failure(p))?;
    }
    let mut opts = run.opts;
    opts.record_nodes = run.node_log.is_some();
    let result = attack::solve_attack(&net, &flows, &inst, &opts)?;
    if let Some(p) = run.node_log {
        milp::write_node_log(&result.node_log, create(p)?).map_err(io_failure(p))?;
    }

    let status = match result.status {
        AttackStatus::Optimal => "optimal",
        AttackStatus::BudgetExceeded => "limit reached",
    };
    println!("status: {status}");
    println!("objective: {:.6}", result.objective);
    println!("bound: {:.6}", result.bound);
    println!("nodes: {}", result.nodes);
    println!("compromised: {}", result.compromised.len());
    for s in &result.compromised {
        let (from, to) = net.movement_labels(s.0);
        println!("  ({from},{to}): {} -> {}", flows.get(s.0), result.perturbed.get(s.0));
    }
    println!("realized objective: {:.6}", result.realized_objective);
    if network::total_flow(&flows) > 0.0 {
        println!("NV: {:.6}", analysis::network_vulnerability(&flows, &result)?);
        if let AttackKind::WorstLane { lane } = inst.kind {
            if let Ok(lv) = analysis::lane_vulnerability(&net, &flows, &result, lane) {
                println!("LV: {lv:.6}");
            }
        }
        if let Ok(m) = analysis::service_metrics(&net, &flows, &result) {
            println!("green-time reduction: {:.6}", m.green_reduction);
            println!("served-flow reduction: {:.6}", m.served_reduction);
        }
    }
    if run.oracle {
        let o = attack::brute_force_oracle(&net, &flows, &inst, &spec.grid())?;
        println!("oracle objective: {:.6}", o.objective);
        println!("gap: {:.6}", (result.objective - o.objective).abs());
    }
    if let Some(dir) = run.out {
        let report = Report { schedule: Some(&result.realized), ..Default::default() };
        analysis::emit_report(dir, &net, &flows, &report)?;
    }
    if result.status == AttackStatus::BudgetExceeded {
        return Err(Failure::Limit(format!("solver limit reached after {} nodes; best attack reported", result.nodes)));
    }
    Ok(())
}

fn sweep_kind(net: &RoadNetwork, spec: Option<&Path>, epsilon: Option<f64>) -> Result<(AttackKind, f64), Failure> {
    match spec {
        None => Ok((AttackKind::WorstNetwork, epsilon.unwrap_or(attack::DEFAULT_EPSILON))),
        Some(p) => {
            let (_, inst) = load_spec(p, net, Some(0), epsilon)?;
            Ok((inst.kind, inst.epsilon))
        }
    }
}

pub fn sweep(
    path: &Path,
    spec: Option<&Path>,
    max_budget: usize,
    workers: usize,
    out: Option<&Path>,
    epsilon: Option<f64>,
    opts: MilpOptions,
) -> Result<(), Failure> {
    let (net, flows) = network::load_network(path)?;
    let (kind, epsilon) = sweep_kind(&net, spec, epsilon)?;
    AttackInstance { kind: kind.clone(), budget: max_budget, flow_bound: None, epsilon }.validate(&net, &flows)?;
    if workers == 0 {
        return Err(Failure::Input("--workers must be at least 1".into()));
    }
    let rows = analysis::budget_sweep(&net, &flows, &kind, max_budget, &SweepOptions { milp: opts, workers, epsilon })?;
    println!("budget,objective,nv,status");
    for r in &rows {
        let status = if r.result.status == AttackStatus::Optimal { "optimal" } else { "limit" };
        println!("{},{:.6},{:.6},{status}", r.budget, r.result.objective, r.nv);
    }
    let critical = if max_budget >= 1 { Some(analysis::critical_sensors(&net, &rows)?) } else { None };
    if let Some(c) = &critical {
        println!("most attacked sensors:");
        for f in c.iter().filter(|f| f.frequency > 0.0) {
            let (from, to) = net.movement_labels(f.sensor.0);
            println!("  ({from},{to}): {:.3}", f.frequency);
        }
    }
    if let Some(dir) = out {
        let report = Report { sweep: Some(&rows), critical: critical.as_deref(), ..Default::default() };
        analysis::emit_report(dir, &net, &flows, &report)?;
    }
    if rows.iter().any(|r| r.result.status == AttackStatus::BudgetExceeded) {
        return Err(Failure::Limit("solver limit reached for at least one budget".into()));
    }
    Ok(())
}

pub fn simulate(
    path: &Path,
    spec: Option<&Path>,
    budget: Option<usize>,
    periods: usize,
    out: Option<&Path>,
    epsilon: Option<f64>,
    opts: MilpOptions,
) -> Result<(), Failure> {
    let (net, flows) = network::load_network(path)?;
    let mut limited = false;
    let sched = match spec {
        None => fixed_time::solve_fixed_time(&net, &flows)?,
        Some(p) => {
            let (_, inst) = load_spec(p, &net, budget, epsilon)?;
            let r = attack::solve_attack(&net, &flows, &inst, &opts)?;
            limited = r.status == AttackStatus::BudgetExceeded;
            r.realized
        }
    };
    if !sched.is_feasible() {
        return Err(Failure::Domain(format!("schedule infeasible (sum lambda = {})", sched.max_sum())));
    }
    let trace = analysis::simulate_queues(&net, &flows, &sched, periods)?;
    println!("periods: {periods}");
    let last = trace.final_queues();
    let mut growing = 0;
    for (m, &q) in last.iter().enumerate() {
        if q > 0.0 {
            growing += 1;
            let (from, to) = net.movement_labels(m);
            println!("  ({from},{to}): queue {q:.6}, growth {:.6} per period", trace.slope(m, periods / 2, periods));
        }
    }
    if growing == 0 {
        println!("all queues empty");
    }
    if let Some(dir) = out {
        let report = Report { schedule: Some(&sched), trace: Some(&trace), ..Default::default() };
        analysis::emit_report(dir, &net, &flows, &report)?;
    }
    if limited {
        return Err(Failure::Limit("attack solve hit its limit; simulated the best attack found".into()));
    }
    Ok(())
}

pub fn gen_grid(rows: usize, cols: usize, seed: u64, out: &Path) -> Result<(), Failure> {
    let (net, flows) = fixtures::build_grid_network(rows, cols, seed)?;
    network::save_network(out, &net, &flows)?;
    let sched = fixed_time::solve_fixed_time(&net, &flows)?;
    println!(
        "wrote {}: {} intersections, {} movements, max sum lambda {:.6}",
        out.display(),
        net.intersections().len(),
        net.num_movements(),
        sched.max_sum()
    );
    Ok(())
}
