use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::Failure;

/// Fixed-time signal schedules and their vulnerability to falsified
/// sensor readings.
#[derive(Parser, Debug)]
#[command(name = "sigvuln", version, about)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check network structure and flow conservation on internal links.
    Validate { network: PathBuf },
    /// Compute the minimum fixed-time schedule and cycle length.
    Schedule {
        network: PathBuf,
        /// Write schedule.csv and summary.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an attack described by a JSON spec.
    Attack {
        network: PathBuf,
        spec: PathBuf,
        /// Override the budget given in the attack file.
        #[arg(long)]
        budget: Option<usize>,
        /// Also run the enumeration oracle and report the gap.
        #[arg(long)]
        oracle: bool,
        /// Write accumulation.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the branch-and-bound node log (CSV) to this file.
        #[arg(long)]
        node_log: Option<PathBuf>,
        /// Write the reformulated model in LP text format to this file.
        #[arg(long)]
        dump_model: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Solve the attack for every budget 0..=max and rank sensors.
    Sweep {
        network: PathBuf,
        #[arg(long)]
        max_budget: usize,
        /// Attack spec; its budget is ignored. Defaults to worst-network.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Concurrent budget solves.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write sweep.csv and critical.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run the fluid queue model under the nominal or an attacked schedule.
    Simulate {
        network: PathBuf,
        #[arg(long, default_value_t = 100)]
        periods: usize,
        /// Attack spec; without it the nominal schedule is simulated.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        /// Write heatmap.csv and accumulation.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Generate a seeded synthetic grid network.
    GenGrid {
        #[arg(long, default_value_t = 3)]
        rows: usize,
        #[arg(long, default_value_t = 5)]
        cols: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Branch-and-bound node limit.
    #[arg(long, default_value_t = 1_000_000)]
    max_nodes: usize,
    /// Wall-clock limit for one solve, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Margin for the strict cycle condition sum lambda < 1.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    feas_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    opt_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    int_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
}

impl SolverArgs {
    fn milp_options(&self) -> Result<sigvuln_core::milp::MilpOptions, Failure> {
        let mut o = sigvuln_core::milp::MilpOptions { max_nodes: self.max_nodes, ..Default::default() };
        if let Some(t) = self.time_limit {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Failure::Input(format!("invalid time limit {t}")));
            }
            o.time_limit = Some(Duration::from_secs_f64(t));
        }
        for (name, v) in [("feas-tol", self.feas_tol), ("opt-tol", self.opt_tol), ("int-tol", self.int_tol), ("gap", self.gap)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Failure::Input(format!("--{name} must be positive, got {v}")));
            }
        }
        o.lp.feas_tol = self.feas_tol;
        o.lp.opt_tol = self.opt_tol;
        o.int_tol = self.int_tol;
        o.gap_rel = self.gap;
        Ok(o)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let outcome = match cli.command {
        Command::Validate { network } => commands::validate(&network),
        Command::Schedule { network, out } => commands::schedule(&network, out.as_deref()),
        Command::Attack { network, spec, budget, oracle, out, node_log, dump_model, solver } => {
            solver.milp_options().and_then(|opts| {
                commands::attack(commands::AttackRun {
                    network: &network,
                    spec: &spec,
                    budget,
                    oracle,
                    out: out.as_deref(),
                    node_log: node_log.as_deref(),
                    dump_model: dump_model.as_deref(),
                    epsilon: solver.epsilon,
                    opts,
                })
            })
        }
        Command::Sweep { network, max_budget, spec, workers, out, solver } => solver
            .milp_options()
            .and_then(|opts| commands::sweep(&network, spec.as_deref(), max_budget, workers, out.as_deref(), solver.epsilon, opts)),
        Command::Simulate { network, periods, spec, budget, out, solver } => solver.milp_options().and_then(|opts| {
            commands::simulate(&network, spec.as_deref(), budget, periods, out.as_deref(), solver.epsilon, opts)
        }),
        Command::GenGrid { rows, cols, seed, out } => commands::gen_grid(rows, cols, seed, &out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
