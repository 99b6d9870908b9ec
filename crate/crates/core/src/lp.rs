//! Dense bounded-variable simplex.
//!
//! Every constraint row `a·x (≤|=|≥) b` gets a logical variable `s = a·x`
//! whose bounds encode the relation, so the working system is always
//! `A x − s = 0` with bounds on every column. The initial basis is the set
//! of logicals. Phase 1 minimises the sum of bound violations of basic
//! variables (composite objective), phase 2 the user objective. Pricing is
//! Dantzig's rule with a lowest-index tie-break and switches to Bland's rule
//! after a configurable streak of degenerate pivots.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// Sparse linear constraint `Σ coeffs (relation) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("iteration limit of {limit} reached (phase {phase})")]
    IterationLimit { limit: usize, phase: u8 },
    #[error("numerical trouble: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub names: Vec<String>,
    pub constraints: Vec<Constraint>,
}

impl LpModel {
    pub fn new(sense: Sense) -> Self {
        LpModel {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            names: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, obj: f64) -> usize {
        self.objective.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.names.len() != n {
            return Err(LpError::InvalidModel("variable vectors have different lengths".into()));
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(LpError::InvalidModel(format!("objective coefficient of {} is not finite", self.names[j])));
            }
            let (lo, up) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || up.is_nan() || lo == f64::INFINITY || up == f64::NEG_INFINITY || lo > up {
                return Err(LpError::InvalidModel(format!(
                    "variable {} has invalid bounds [{lo}, {up}]",
                    self.names[j]
                )));
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!("constraint {r} has a non-finite right-hand side")));
            }
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(LpError::InvalidModel(format!("constraint {r} references variable {j} of {n}")));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidModel(format!("constraint {r} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.constraints[row].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest absolute violation of any bound or constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for (r, c) in self.constraints.iter().enumerate() {
            let act = self.row_activity(r, x);
            let v = match c.relation {
                Relation::Le => act - c.rhs,
                Relation::Ge => c.rhs - act,
                Relation::Eq => (act - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Writes the model in CPLEX LP text format for cross-checking with
    /// external solvers. `binaries` lists variables to declare integral.
    pub fn write_lp_text<W: Write>(&self, mut w: W, binaries: &[usize]) -> io::Result<()> {
        let term = |a: f64, name: &str| {
            if a < 0.0 {
                format!(" - {} {}", -a, name)
            } else {
                format!(" + {a} {name}")
            }
        };
        writeln!(w, "{}", if self.sense == Sense::Minimize { "Minimize" } else { "Maximize" })?;
        write!(w, " obj:")?;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                write!(w, "{}", term(c, &self.names[j]))?;
            }
        }
        writeln!(w)?;
        writeln!(w, "Subject To")?;
        for (r, c) in self.constraints.iter().enumerate() {
            write!(w, " c{r}:")?;
            if c.coeffs.is_empty() {
                write!(w, " 0 {}", self.names.first().map(String::as_str).unwrap_or("x"))?;
            }
            for &(j, a) in &c.coeffs {
                write!(w, "{}", term(a, &self.names[j]))?;
            }
            writeln!(w, " {} {}", c.relation, c.rhs)?;
        }
        writeln!(w, "Bounds")?;
        for j in 0..self.num_vars() {
            let (lo, up) = (self.lower[j], self.upper[j]);
            match (lo.is_finite(), up.is_finite()) {
                (true, true) => writeln!(w, " {lo} <= {} <= {up}", self.names[j])?,
                (true, false) => writeln!(w, " {} >= {lo}", self.names[j])?,
                (false, true) => writeln!(w, " -inf <= {} <= {up}", self.names[j])?,
                (false, false) => writeln!(w, " {} free", self.names[j])?,
            }
        }
        if !binaries.is_empty() {
            writeln!(w, "Binaries")?;
            for &j in binaries {
                writeln!(w, " {}", self.names[j])?;
            }
        }
        writeln!(w, "End")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// Tableau entries below this magnitude never serve as pivots.
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Degenerate pivots in a row before Bland's rule takes over.
    pub bland_after: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 100_000,
            bland_after: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Final basis of a solve, reusable as a warm start for the same model
/// with different variable bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    rows: usize,
    cols: usize,
    basic: Vec<usize>,
    at_upper: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Row duals in the sign convention of the model's sense.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

pub fn solve_lp(model: &LpModel, tol: &Tolerances) -> Result<LpSolution, LpError> {
    model.validate()?;
    solve_with_bounds(model, &model.lower, &model.upper, None, tol)
}

/// Solves `model` with the listed variables pinned to the given values.
pub fn solve_lp_fixed(model: &LpModel, fixed: &[(usize, f64)], tol: &Tolerances) -> Result<LpSolution, LpError> {
    model.validate()?;
    let mut lower = model.lower.clone();
    let mut upper = model.upper.clone();
    for &(j, v) in fixed {
        if j >= model.num_vars() {
            return Err(LpError::InvalidModel(format!("fixed variable {j} out of range")));
        }
        if !v.is_finite() || v < lower[j] - tol.feas_tol || v > upper[j] + tol.feas_tol {
            return Err(LpError::InvalidModel(format!(
                "fixed value {v} for {} outside [{}, {}]",
                model.names[j], lower[j], upper[j]
            )));
        }
        lower[j] = v;
        upper[j] = v;
    }
    solve_with_bounds(model, &lower, &upper, None, tol)
}

/// Solves `model` under replacement bounds, optionally starting from a
/// basis returned by an earlier solve of the same model. The caller is
/// responsible for `lower`/`upper` being consistent.
pub fn solve_with_bounds(
    model: &LpModel,
    lower: &[f64],
    upper: &[f64],
    warm: Option<&Basis>,
    tol: &Tolerances,
) -> Result<LpSolution, LpError> {
    let n = model.num_vars();
    for j in 0..n {
        if lower[j] > upper[j] {
            return Ok(infeasible(model, 0));
        }
    }
    // Empty rows are checked once and dropped.
    let mut kept = Vec::with_capacity(model.num_constraints());
    for (r, c) in model.constraints.iter().enumerate() {
        if c.coeffs.iter().all(|&(_, a)| a == 0.0) {
            let ok = match c.relation {
                Relation::Le => 0.0 <= c.rhs + tol.feas_tol,
                Relation::Ge => 0.0 >= c.rhs - tol.feas_tol,
                Relation::Eq => c.rhs.abs() <= tol.feas_tol,
            };
            if !ok {
                return Ok(infeasible(model, 0));
            }
        } else {
            kept.push(r);
        }
    }

    let mut tab = None;
    if let Some(basis) = warm {
        tab = Tableau::from_basis(model, &kept, lower, upper, basis, tol);
    }
    let warm_used = tab.is_some();
    let mut tab = tab.unwrap_or_else(|| Tableau::new(model, &kept, lower, upper, tol));
    match tab.run() {
        Ok(status) => Ok(tab.into_solution(model, &kept, status)),
        Err(LpError::Numerical(_)) if warm_used => {
            let mut cold = Tableau::new(model, &kept, lower, upper, tol);
            let status = cold.run()?;
            Ok(cold.into_solution(model, &kept, status))
        }
        Err(e) => Err(e),
    }
}

fn infeasible(model: &LpModel, iterations: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        x: vec![0.0; model.num_vars()],
        duals: vec![0.0; model.num_constraints()],
        reduced_costs: vec![0.0; model.num_vars()],
        objective: f64::NAN,
        iterations,
        basis: None,
    }
}

/// Objective of the dual solution attached to `sol`, computed from the
/// model data (not from the tableau). Equals the primal objective at an
/// optimum up to rounding.
pub fn dual_objective(model: &LpModel, sol: &LpSolution) -> f64 {
    let sign = if model.sense == Sense::Minimize { 1.0 } else { -1.0 };
    // internal minimisation: c' = sign * c, y' = sign * y
    let mut d: Vec<f64> = model.objective.iter().map(|c| sign * c).collect();
    let mut total = 0.0;
    for (r, c) in model.constraints.iter().enumerate() {
        let y = sign * sol.duals[r];
        for &(j, a) in &c.coeffs {
            d[j] -= y * a;
        }
        // y > 0 pairs with a lower row bound, y < 0 with an upper one.
        total += y * c.rhs;
    }
    for j in 0..model.num_vars() {
        let bound = if d[j] > 0.0 {
            model.lower[j]
        } else if d[j] < 0.0 {
            model.upper[j]
        } else {
            0.0
        };
        if d[j] != 0.0 {
            if bound.is_finite() {
                total += d[j] * bound;
            } else if d[j].abs() > 1e-7 {
                return f64::NEG_INFINITY * sign;
            }
        }
    }
    sign * total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
    Free,
}

struct Tableau {
    m: usize,
    n: usize,
    cols: usize,
    /// Row-major `B⁻¹ [A | −I]`.
    t: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    tol: Tolerances,
    iterations: usize,
    degenerate_streak: usize,
}

const ZERO_CLEAN: f64 = 1e-14;

impl Tableau {
    fn new(model: &LpModel, kept: &[usize], lower: &[f64], upper: &[f64], tol: &Tolerances) -> Self {
        let n = model.num_vars();
        let m = kept.len();
        let cols = n + m;
        let mut t = vec![0.0; m * cols];
        let mut lo = Vec::with_capacity(cols);
        let mut up = Vec::with_capacity(cols);
        lo.extend_from_slice(lower);
        up.extend_from_slice(upper);
        for (r, &row) in kept.iter().enumerate() {
            let c = &model.constraints[row];
            for &(j, a) in &c.coeffs {
                t[r * cols + j] -= a;
            }
            t[r * cols + n + r] = 1.0;
            let (l, u) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, c.rhs),
                Relation::Ge => (c.rhs, f64::INFINITY),
                Relation::Eq => (c.rhs, c.rhs),
            };
            lo.push(l);
            up.push(u);
        }
        let sign = if model.sense == Sense::Minimize { 1.0 } else { -1.0 };
        let mut cost = vec![0.0; cols];
        for j in 0..n {
            cost[j] = sign * model.objective[j];
        }
        let mut state = vec![VarState::Basic; cols];
        let mut x = vec![0.0; cols];
        for j in 0..n {
            let (s, v) = resting_place(lo[j], up[j], false);
            state[j] = s;
            x[j] = v;
        }
        let basis: Vec<usize> = (n..cols).collect();
        let mut tab = Tableau {
            m,
            n,
            cols,
            t,
            basis,
            state,
            x,
            lo,
            up,
            cost,
            d: vec![0.0; cols],
            tol: *tol,
            iterations: 0,
            degenerate_streak: 0,
        };
        tab.compute_basic_values();
        tab
    }

    fn from_basis(
        model: &LpModel,
        kept: &[usize],
        lower: &[f64],
        upper: &[f64],
        basis: &Basis,
        tol: &Tolerances,
    ) -> Option<Self> {
        let mut tab = Tableau::new(model, kept, lower, upper, tol);
        if basis.rows != tab.m || basis.cols != tab.cols {
            return None;
        }
        let mut target = vec![false; tab.cols];
        for &v in &basis.basic {
            target[v] = true;
        }
        for &v in &basis.basic {
            if tab.state[v] == VarState::Basic {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for r in 0..tab.m {
                if target[tab.basis[r]] {
                    continue;
                }
                let a = tab.t[r * tab.cols + v].abs();
                if a > 1e-7 && best.map_or(true, |(_, b)| a > b) {
                    best = Some((r, a));
                }
            }
            let (r, _) = best?;
            let leaving = tab.basis[r];
            tab.pivot(r, v, false);
            let (s, val) = resting_place(tab.lo[leaving], tab.up[leaving], basis.at_upper[leaving]);
            tab.state[leaving] = s;
            tab.x[leaving] = val;
        }
        for j in 0..tab.cols {
            if tab.state[j] != VarState::Basic {
                let (s, val) = resting_place(tab.lo[j], tab.up[j], basis.at_upper[j]);
                tab.state[j] = s;
                tab.x[j] = val;
            }
        }
        tab.compute_basic_values();
        Some(tab)
    }

    #[inline]
    fn row(&self, r: usize) -> &[f64] {
        &self.t[r * self.cols..(r + 1) * self.cols]
    }

    fn compute_basic_values(&mut self) {
        let nonbasic: Vec<(usize, f64)> = (0..self.cols)
            .filter(|&j| self.state[j] != VarState::Basic && self.x[j] != 0.0)
            .map(|j| (j, self.x[j]))
            .collect();
        for r in 0..self.m {
            let row = self.row(r);
            let v: f64 = nonbasic.iter().map(|&(j, xj)| row[j] * xj).sum();
            let b = self.basis[r];
            self.x[b] = -v;
        }
    }

    fn compute_reduced_costs(&mut self) {
        let mut d = self.cost.clone();
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.cols..(r + 1) * self.cols];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            d[b] = 0.0;
        }
        self.d = d;
    }

    fn infeasibility(&self, v: usize) -> f64 {
        let xv = self.x[v];
        if xv < self.lo[v] - self.tol.feas_tol {
            self.lo[v] - xv
        } else if xv > self.up[v] + self.tol.feas_tol {
            xv - self.up[v]
        } else {
            0.0
        }
    }

    fn run(&mut self) -> Result<LpStatus, LpError> {
        for _ in 0..4 {
            if !self.phase1()? {
                return Ok(LpStatus::Infeasible);
            }
            if !self.phase2()? {
                return Ok(LpStatus::Unbounded);
            }
            self.compute_basic_values();
            if self.basis.iter().all(|&b| self.infeasibility(b) == 0.0) {
                self.compute_reduced_costs();
                if self.choose_entering(false).is_none() {
                    return Ok(LpStatus::Optimal);
                }
            }
        }
        Err(LpError::Numerical("solution drifted out of feasibility repeatedly".into()))
    }

    /// Returns false if the problem is infeasible.
    fn phase1(&mut self) -> Result<bool, LpError> {
        let mut c1 = vec![0.0; self.m];
        loop {
            let mut any = false;
            for r in 0..self.m {
                let b = self.basis[r];
                c1[r] = if self.x[b] < self.lo[b] - self.tol.feas_tol {
                    any = true;
                    -1.0
                } else if self.x[b] > self.up[b] + self.tol.feas_tol {
                    any = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !any {
                return Ok(true);
            }
            if self.iterations >= self.tol.max_iterations {
                return Err(LpError::IterationLimit { limit: self.tol.max_iterations, phase: 1 });
            }
            let mut d = vec![0.0; self.cols];
            for r in 0..self.m {
                if c1[r] != 0.0 {
                    let row = &self.t[r * self.cols..(r + 1) * self.cols];
                    for (dj, &a) in d.iter_mut().zip(row) {
                        *dj -= c1[r] * a;
                    }
                }
            }
            for &b in &self.basis {
                d[b] = 0.0;
            }
            self.d = d;
            let bland = self.degenerate_streak >= self.tol.bland_after;
            let Some((q, dir)) = self.choose_entering(bland) else {
                return Ok(false);
            };
            let step = self.ratio_test(q, dir, true, bland);
            if step.theta.is_infinite() {
                return Err(LpError::Numerical("unbounded phase-1 ray".into()));
            }
            self.apply_step(q, dir, step, false);
        }
    }

    /// Returns false if the problem is unbounded.
    fn phase2(&mut self) -> Result<bool, LpError> {
        self.compute_reduced_costs();
        let mut refreshed = false;
        loop {
            let bland = self.degenerate_streak >= self.tol.bland_after;
            let Some((q, dir)) = self.choose_entering(bland) else {
                if refreshed {
                    return Ok(true);
                }
                self.compute_reduced_costs();
                refreshed = true;
                continue;
            };
            refreshed = false;
            if self.iterations >= self.tol.max_iterations {
                return Err(LpError::IterationLimit { limit: self.tol.max_iterations, phase: 2 });
            }
            let step = self.ratio_test(q, dir, false, bland);
            if step.theta.is_infinite() {
                return Ok(false);
            }
            self.apply_step(q, dir, step, true);
            if self.iterations % 100 == 0 {
                self.compute_reduced_costs();
            }
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let opt = self.tol.opt_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols {
            let dj = self.d[j];
            let cand = match self.state[j] {
                VarState::Basic => None,
                VarState::Lower => (self.up[j] > self.lo[j] && dj < -opt).then_some(1.0),
                VarState::Upper => (self.up[j] > self.lo[j] && dj > opt).then_some(-1.0),
                VarState::Free => (dj.abs() > opt).then(|| if dj < 0.0 { 1.0 } else { -1.0 }),
            };
            if let Some(dir) = cand {
                if bland {
                    return Some((j, dir));
                }
                let score = dj.abs();
                if best.map_or(true, |(_, _, s)| score > s) {
                    best = Some((j, dir, score));
                }
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(&self, q: usize, dir: f64, phase1: bool, bland: bool) -> Step {
        let ftol = self.tol.feas_tol;
        let mut theta = if self.lo[q].is_finite() && self.up[q].is_finite() {
            self.up[q] - self.lo[q]
        } else {
            f64::INFINITY
        };
        let mut leave: Option<(usize, bool, f64)> = None;
        for r in 0..self.m {
            let alpha = self.t[r * self.cols + q] * dir;
            if alpha.abs() <= self.tol.pivot_tol {
                continue;
            }
            let v = self.basis[r];
            let xv = self.x[v];
            let (ratio, to_upper) = if alpha > 0.0 {
                // basic variable decreases
                if phase1 && xv > self.up[v] + ftol {
                    ((xv - self.up[v]) / alpha, true)
                } else if phase1 && xv < self.lo[v] - ftol {
                    continue;
                } else if self.lo[v].is_finite() {
                    ((xv - self.lo[v]).max(0.0) / alpha, false)
                } else {
                    continue;
                }
            } else if phase1 && xv < self.lo[v] - ftol {
                ((self.lo[v] - xv) / -alpha, false)
            } else if phase1 && xv > self.up[v] + ftol {
                continue;
            } else if self.up[v].is_finite() {
                ((self.up[v] - xv).max(0.0) / -alpha, true)
            } else {
                continue;
            };
            let eps = 1e-12 * (1.0 + theta.min(1e12).abs());
            let better = if ratio < theta - eps {
                true
            } else if ratio <= theta + eps {
                match leave {
                    // ties with the bound flip keep the flip
                    None => false,
                    Some((lr, _, la)) => {
                        if bland {
                            v < self.basis[lr]
                        } else {
                            alpha.abs() > la
                        }
                    }
                }
            } else {
                false
            };
            if better {
                theta = ratio;
                leave = Some((r, to_upper, alpha.abs()));
            }
        }
        Step {
            theta,
            leave: leave.map(|(r, u, _)| (r, u)),
        }
    }

    fn apply_step(&mut self, q: usize, dir: f64, step: Step, update_costs: bool) {
        self.iterations += 1;
        let theta = step.theta;
        if theta <= 1e-12 {
            self.degenerate_streak += 1;
        } else {
            self.degenerate_streak = 0;
        }
        if theta > 0.0 {
            for r in 0..self.m {
                let a = self.t[r * self.cols + q];
                if a != 0.0 {
                    let b = self.basis[r];
                    self.x[b] -= a * dir * theta;
                }
            }
        }
        match step.leave {
            None => {
                // bound flip
                if dir > 0.0 {
                    self.state[q] = VarState::Upper;
                    self.x[q] = self.up[q];
                } else {
                    self.state[q] = VarState::Lower;
                    self.x[q] = self.lo[q];
                }
            }
            Some((p, to_upper)) => {
                self.x[q] += dir * theta;
                let leaving = self.basis[p];
                self.pivot(p, q, update_costs);
                if to_upper {
                    self.state[leaving] = VarState::Upper;
                    self.x[leaving] = self.up[leaving];
                } else {
                    self.state[leaving] = VarState::Lower;
                    self.x[leaving] = self.lo[leaving];
                }
            }
        }
    }

    /// Makes `q` basic in row `p`. The caller fixes the state of the
    /// leaving variable.
    fn pivot(&mut self, p: usize, q: usize, update_costs: bool) {
        let cols = self.cols;
        let piv = self.t[p * cols + q];
        {
            let prow = &mut self.t[p * cols..(p + 1) * cols];
            for a in prow.iter_mut() {
                *a /= piv;
            }
            prow[q] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(p * cols);
        let (prow, after) = rest.split_at_mut(cols);
        let eliminate = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for (a, &pa) in row.iter_mut().zip(prow.iter()) {
                    if pa != 0.0 {
                        *a -= f * pa;
                        if a.abs() < ZERO_CLEAN {
                            *a = 0.0;
                        }
                    }
                }
                row[q] = 0.0;
            }
        };
        before.chunks_mut(cols).for_each(eliminate);
        after.chunks_mut(cols).for_each(eliminate);
        if update_costs {
            let f = self.d[q];
            if f != 0.0 {
                for (dj, &pa) in self.d.iter_mut().zip(prow.iter()) {
                    *dj -= f * pa;
                }
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[p];
        self.basis[p] = q;
        self.state[q] = VarState::Basic;
        // placeholder until the caller assigns a nonbasic state
        self.state[leaving] = VarState::Lower;
    }

    fn into_solution(mut self, model: &LpModel, kept: &[usize], status: LpStatus) -> LpSolution {
        if status != LpStatus::Optimal {
            let mut sol = infeasible(model, self.iterations);
            sol.status = status;
            if status == LpStatus::Unbounded {
                sol.objective = if model.sense == Sense::Minimize {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                };
            }
            return sol;
        }
        self.compute_reduced_costs();
        let sign = if model.sense == Sense::Minimize { 1.0 } else { -1.0 };
        let mut x = self.x[..self.n].to_vec();
        // snap nonbasic and nearly-bound basic values onto their bounds
        for (j, xj) in x.iter_mut().enumerate() {
            let (lo, up) = (self.lo[j], self.up[j]);
            if (*xj - lo).abs() <= self.tol.feas_tol {
                *xj = lo;
            } else if (*xj - up).abs() <= self.tol.feas_tol {
                *xj = up;
            }
        }
        let mut duals = vec![0.0; model.num_constraints()];
        for (r, &row) in kept.iter().enumerate() {
            duals[row] = sign * self.d[self.n + r];
        }
        let reduced_costs = self.d[..self.n].iter().map(|d| sign * d).collect();
        let at_upper = self.state.iter().map(|s| *s == VarState::Upper).collect();
        LpSolution {
            status,
            objective: model.objective_value(&x),
            x,
            duals,
            reduced_costs,
            iterations: self.iterations,
            basis: Some(Basis {
                rows: self.m,
                cols: self.cols,
                basic: self.basis.clone(),
                at_upper,
            }),
        }
    }
}

fn resting_place(lo: f64, up: f64, prefer_upper: bool) -> (VarState, f64) {
    if prefer_upper && up.is_finite() {
        (VarState::Upper, up)
    } else if lo.is_finite() {
        (VarState::Lower, lo)
    } else if up.is_finite() {
        (VarState::Upper, up)
    } else {
        (VarState::Free, 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Step {
    theta: f64,
    leave: Option<(usize, bool)>,
}
