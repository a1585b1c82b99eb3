//! Bounded-variable revised simplex, dual and primal.
//!
//! Every row `i` gets a logical (slack) variable `s_i` with `A x + s = b`;
//! the slack bounds encode the row sense (`<=`: `s >= 0`, `>=`: `s <= 0`,
//! `=`: `s = 0`). Nonbasic variables sit at a finite bound, so box-bounded
//! columns never need to be split.
//!
//! When the starting basis is dual feasible (possibly after moving boxed
//! columns to their other bound) the dual simplex runs, with dual
//! steepest-edge row selection and a Harris ratio test on the pivot row.
//! Otherwise, and as a final clean-up, the primal simplex runs: phase 1
//! minimises the sum of bound violations of basic variables (composite
//! method), phase 2 the true objective. Primal pricing is Dantzig with a
//! Bland fallback after a run of degenerate pivots; its ratio test is the
//! two-pass Harris test.

use crate::error::LpError;
use crate::lu::{BasisFactor, ColRef, LuFactor};
use crate::problem::{LpProblem, Sense};

const NONE: usize = usize::MAX;

/// Solver tolerances and limits.
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    /// Refactorise the basis after this many eta updates.
    pub refactor_interval: usize,
    /// Switch to Bland's rule after this many consecutive degenerate pivots.
    pub bland_after: usize,
    pub max_iterations: usize,
    /// Run the dual simplex when the starting basis is dual feasible.
    pub dual: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            pivot_tol: 1e-9,
            refactor_interval: 100,
            bland_after: 1000,
            max_iterations: 5_000_000,
            dual: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Basis description: one status per structural column followed by one per
/// row logical.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

impl Basis {
    pub fn num_basic(&self) -> usize {
        self.status
            .iter()
            .filter(|s| **s == VarStatus::Basic)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The basis stayed numerically singular after repair attempts.
    Singular,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural values.
    pub x: Vec<f64>,
    pub objective: f64,
    pub row_activity: Vec<f64>,
    /// Row duals `y = B⁻ᵀ c_B` (meaningful when optimal).
    pub duals: Vec<f64>,
    /// Structural reduced costs `c - Aᵀ y`.
    pub reduced_costs: Vec<f64>,
    pub basis: Basis,
    pub iterations: usize,
}

/// Solves `p` with default options, optionally warm-starting from `warm`.
///
/// A warm basis of the wrong length is an error; one with the right length
/// that is not a valid basis is ignored in favour of the slack basis.
pub fn solve_lp(p: &LpProblem, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
    solve_lp_with(p, warm, &SimplexOptions::default())
}

pub fn solve_lp_with(
    p: &LpProblem,
    warm: Option<&Basis>,
    opts: &SimplexOptions,
) -> Result<LpSolution, LpError> {
    let mut s = Simplex::new(p, opts.clone());
    s.solve(warm)
}

/// Reusable solver state over a fixed matrix; column bounds may be changed
/// between solves.
#[derive(Debug, Clone)]
pub struct Simplex<'a> {
    problem: &'a LpProblem,
    opts: SimplexOptions,
    n: usize,
    m: usize,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    base_cost: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    pos_of: Vec<usize>,
    factor: BasisFactor,
    slack_rows: Vec<usize>,
    ones: Vec<f64>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    iterations: usize,
    rows: RowMajor,
    d: Vec<f64>,
    weights: Vec<f64>,
    rho: Vec<f64>,
    tau: Vec<f64>,
    prow: Vec<f64>,
    touched: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
struct RowMajor {
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

enum DualOutcome {
    Optimal,
    Infeasible,
    /// Dual feasibility was lost or the iteration budget ran out; the
    /// primal simplex takes over from the current basis.
    Handover,
}

enum Step {
    Flip,
    Pivot { pos: usize, to_upper: bool },
    Unbounded,
}

impl<'a> Simplex<'a> {
    pub fn new(problem: &'a LpProblem, opts: SimplexOptions) -> Self {
        let n = problem.num_cols();
        let m = problem.num_rows();
        let mut lb = problem.lower().to_vec();
        let mut ub = problem.upper().to_vec();
        for sense in problem.senses() {
            let (l, u) = match sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lb.push(l);
            ub.push(u);
        }
        let mut cost = problem.objective().to_vec();
        cost.resize(n + m, 0.0);
        Simplex {
            problem,
            opts,
            n,
            m,
            lb,
            ub,
            base_cost: cost.clone(),
            cost,
            rhs: problem.rhs().to_vec(),
            x: vec![0.0; n + m],
            status: vec![VarStatus::AtLower; n + m],
            head: Vec::new(),
            pos_of: vec![NONE; n + m],
            factor: BasisFactor::default(),
            slack_rows: (0..m).collect(),
            ones: vec![1.0; m],
            y: vec![0.0; m],
            alpha: vec![0.0; m],
            iterations: 0,
            rows: {
                let (start, cols, vals) = problem.to_row_major();
                RowMajor { start, cols, vals }
            },
            d: vec![0.0; n + m],
            weights: vec![1.0; m],
            rho: vec![0.0; m],
            tau: vec![0.0; m],
            prow: vec![0.0; n + m],
            touched: Vec::new(),
        }
    }

    pub fn problem(&self) -> &LpProblem {
        self.problem
    }

    pub fn options_mut(&mut self) -> &mut SimplexOptions {
        &mut self.opts
    }

    /// Overrides the bounds of structural column `j`.
    pub fn set_col_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        assert!(j < self.n, "column {j} out of range");
        self.lb[j] = lower;
        self.ub[j] = upper;
    }

    pub fn col_bounds(&self, j: usize) -> (f64, f64) {
        (self.lb[j], self.ub[j])
    }

    /// Restores every structural bound to the problem's own.
    pub fn reset_bounds(&mut self) {
        self.lb[..self.n].copy_from_slice(self.problem.lower());
        self.ub[..self.n].copy_from_slice(self.problem.upper());
    }

    #[inline]
    fn col(&self, j: usize) -> ColRef<'_> {
        if j < self.n {
            self.problem.column(j)
        } else {
            let i = j - self.n;
            (&self.slack_rows[i..i + 1], &self.ones[i..i + 1])
        }
    }

    fn nonbasic_value(&self, j: usize, st: VarStatus) -> (VarStatus, f64) {
        let (l, u) = (self.lb[j], self.ub[j]);
        match st {
            VarStatus::AtUpper if u.is_finite() => (VarStatus::AtUpper, u),
            _ if l.is_finite() => (VarStatus::AtLower, l),
            _ if u.is_finite() => (VarStatus::AtUpper, u),
            _ => (VarStatus::Free, 0.0),
        }
    }

    fn install_basis(&mut self, warm: Option<&Basis>) -> Result<(), LpError> {
        let total = self.n + self.m;
        let use_warm = match warm {
            Some(b) if b.status.len() != total => {
                return Err(LpError::DimensionMismatch {
                    what: "warm basis",
                    expected: total,
                    found: b.status.len(),
                })
            }
            Some(b) => b.num_basic() == self.m,
            None => false,
        };
        self.head.clear();
        self.pos_of.iter_mut().for_each(|p| *p = NONE);
        let statuses: Vec<VarStatus> = if use_warm {
            warm.unwrap().status.clone()
        } else {
            (0..total)
                .map(|j| {
                    if j >= self.n {
                        VarStatus::Basic
                    } else {
                        VarStatus::AtLower
                    }
                })
                .collect()
        };
        for (j, st) in statuses.into_iter().enumerate() {
            if st == VarStatus::Basic {
                self.pos_of[j] = self.head.len();
                self.head.push(j);
                self.status[j] = VarStatus::Basic;
            } else {
                let (s, v) = self.nonbasic_value(j, st);
                self.status[j] = s;
                self.x[j] = v;
            }
        }
        Ok(())
    }

    /// Factorises the current basis, swapping in slacks for dependent columns.
    fn refactor(&mut self) -> bool {
        for _ in 0..5 {
            let (lu, def) = {
                let this = &*self;
                LuFactor::factorize(this.m, |p| this.col(this.head[p]))
            };
            match def {
                None => {
                    log::trace!("basis factor: {} nonzeros", lu.nnz());
                    self.factor = BasisFactor::new(lu);
                    return true;
                }
                Some(def) => {
                    log::debug!(
                        "basis repair: replacing {} dependent columns",
                        def.positions.len()
                    );
                    for &p in &def.positions {
                        let j = self.head[p];
                        let keep = if self.x[j] >= self.ub[j] {
                            VarStatus::AtUpper
                        } else {
                            VarStatus::AtLower
                        };
                        let (s, v) = self.nonbasic_value(j, keep);
                        self.status[j] = s;
                        self.x[j] = v;
                        self.pos_of[j] = NONE;
                    }
                    for (&p, &r) in def.positions.iter().zip(&def.rows) {
                        let j = self.n + r;
                        self.head[p] = j;
                        self.pos_of[j] = p;
                        self.status[j] = VarStatus::Basic;
                    }
                }
            }
        }
        false
    }

    /// Recomputes basic values from nonbasic ones: `x_B = B⁻¹ (b - N x_N)`.
    fn compute_primal(&mut self) {
        let mut r = self.rhs.clone();
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                let (rows, vals) = self.col(j);
                for (&i, &a) in rows.iter().zip(vals) {
                    r[i] -= a * xj;
                }
            }
        }
        self.factor.ftran(&mut r);
        for p in 0..self.m {
            self.x[self.head[p]] = r[p];
        }
    }

    #[inline]
    fn price(&self, j: usize, phase1: bool) -> f64 {
        let c = if phase1 { 0.0 } else { self.cost[j] };
        let (rows, vals) = self.col(j);
        let mut d = c;
        for (&i, &a) in rows.iter().zip(vals) {
            d -= a * self.y[i];
        }
        d
    }

    /// Runs the simplex from `warm` (or the slack basis) to termination.
    pub fn solve(&mut self, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
        self.install_basis(warm)?;
        self.iterations = 0;
        if !self.refactor() {
            return Ok(self.finish(LpStatus::Singular));
        }
        self.compute_primal();
        self.compute_duals();
        if self.opts.dual && self.make_dual_feasible(false) {
            self.perturb_costs();
            let outcome = self.dual_iterate();
            self.cost.copy_from_slice(&self.base_cost);
            if let DualOutcome::Infeasible = outcome {
                return Ok(self.finish(LpStatus::Infeasible));
            }
        }
        let status = self.iterate();
        Ok(self.finish(status))
    }

    /// Reduced costs `d = c - Aᵀ y` with `y = B⁻ᵀ c_B`; zero for basics.
    fn compute_duals(&mut self) {
        for p in 0..self.m {
            self.y[p] = self.cost[self.head[p]];
        }
        self.factor.btran(&mut self.y);
        for j in 0..self.n + self.m {
            self.d[j] = if self.status[j] == VarStatus::Basic {
                0.0
            } else {
                self.price(j, false)
            };
        }
    }

    /// Pushes nonbasic reduced costs further into their feasible side by
    /// small deterministic amounts, breaking dual degeneracy ties. The
    /// original costs are restored before the primal clean-up.
    fn perturb_costs(&mut self) {
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        for j in 0..self.n + self.m {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            let u = (z >> 11) as f64 / (1u64 << 53) as f64;
            if self.lb[j] == self.ub[j] {
                continue;
            }
            let xi = (1e-5 + 1e-6 * self.base_cost[j].abs()) * (1.0 + u);
            match self.status[j] {
                VarStatus::AtLower => {
                    self.cost[j] += xi;
                    self.d[j] += xi;
                }
                VarStatus::AtUpper => {
                    self.cost[j] -= xi;
                    self.d[j] -= xi;
                }
                _ => {}
            }
        }
    }

    /// Moves boxed nonbasic columns to the bound their reduced cost favours.
    /// A wrong-signed reduced cost on a column with no other bound makes the
    /// basis dual infeasible; with `shift` set the column's cost is shifted
    /// to zero its reduced cost instead, otherwise false is returned.
    fn make_dual_feasible(&mut self, shift: bool) -> bool {
        let otol = self.opts.opt_tol;
        let mut moved = false;
        for j in 0..self.n + self.m {
            let st = self.status[j];
            if st == VarStatus::Basic || self.lb[j] == self.ub[j] {
                continue;
            }
            let dj = self.d[j];
            let wrong = match st {
                VarStatus::AtLower => dj < -otol,
                VarStatus::AtUpper => dj > otol,
                VarStatus::Free => dj.abs() > otol,
                VarStatus::Basic => false,
            };
            if !wrong {
                continue;
            }
            let other = match st {
                VarStatus::AtLower => self.ub[j],
                VarStatus::AtUpper => self.lb[j],
                _ => f64::INFINITY,
            };
            if other.is_finite() {
                self.status[j] = if st == VarStatus::AtLower {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
                self.x[j] = other;
                moved = true;
            } else if shift {
                self.cost[j] -= dj;
                self.d[j] = 0.0;
            } else {
                return false;
            }
        }
        if moved {
            self.compute_primal();
        }
        true
    }

    /// Dual simplex from a dual feasible basis.
    fn dual_iterate(&mut self) -> DualOutcome {
        let ftol = self.opts.feas_tol;
        let otol = self.opts.opt_tol;
        let ptol = self.opts.pivot_tol;
        let m = self.m;
        self.weights.iter_mut().for_each(|w| *w = 1.0);
        let mut retries = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return DualOutcome::Handover;
            }
            if self.factor.num_updates() >= self.opts.refactor_interval {
                if !self.refactor() {
                    return DualOutcome::Handover;
                }
                self.compute_primal();
                self.compute_duals();
                self.make_dual_feasible(true);
            }

            // Leaving row: largest squared infeasibility over its weight.
            let mut leave_pos = NONE;
            let mut best = 0.0;
            let mut delta = 0.0;
            for p in 0..m {
                let j = self.head[p];
                let v = self.x[j];
                let inf = if v < self.lb[j] - ftol {
                    v - self.lb[j]
                } else if v > self.ub[j] + ftol {
                    v - self.ub[j]
                } else {
                    continue;
                };
                let score = inf * inf / self.weights[p];
                if score > best {
                    best = score;
                    leave_pos = p;
                    delta = inf;
                }
            }
            if leave_pos == NONE {
                if self.factor.num_updates() > 0 {
                    if !self.refactor() {
                        return DualOutcome::Handover;
                    }
                    self.compute_primal();
                    self.compute_duals();
                    self.make_dual_feasible(true);
                    if (0..m).all(|p| {
                        let j = self.head[p];
                        self.x[j] >= self.lb[j] - ftol && self.x[j] <= self.ub[j] + ftol
                    }) {
                        return DualOutcome::Optimal;
                    }
                    continue;
                }
                return DualOutcome::Optimal;
            }

            // Pivot row: rho = B⁻ᵀ e_p, alpha_j = rhoᵀ a_j.
            self.rho.iter_mut().for_each(|v| *v = 0.0);
            self.rho[leave_pos] = 1.0;
            self.factor.btran(&mut self.rho);
            for &j in &self.touched {
                self.prow[j] = 0.0;
            }
            self.touched.clear();
            for i in 0..m {
                let r = self.rho[i];
                if r == 0.0 {
                    continue;
                }
                let slack = self.n + i;
                if self.prow[slack] == 0.0 {
                    self.touched.push(slack);
                }
                self.prow[slack] += r;
                for k in self.rows.start[i]..self.rows.start[i + 1] {
                    let j = self.rows.cols[k];
                    if self.prow[j] == 0.0 {
                        self.touched.push(j);
                    }
                    self.prow[j] += r * self.rows.vals[k];
                }
            }

            // Ratio test on the pivot row, oriented so the step is t >= 0
            // and d_j(t) = d_j - t * sign * alpha_j.
            let sign = if delta > 0.0 { 1.0 } else { -1.0 };
            let mut t_max = f64::INFINITY;
            for &j in &self.touched {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let a = sign * self.prow[j];
                if a.abs() <= ptol {
                    continue;
                }
                let bound = match st {
                    VarStatus::AtLower if a > 0.0 => (self.d[j] + otol) / a,
                    VarStatus::AtUpper if a < 0.0 => (self.d[j] - otol) / a,
                    VarStatus::Free => otol / a.abs(),
                    _ => continue,
                };
                if bound < t_max {
                    t_max = bound;
                }
            }
            let mut enter = NONE;
            let mut enter_abs = 0.0;
            if t_max.is_finite() {
                for &j in &self.touched {
                    let st = self.status[j];
                    if st == VarStatus::Basic || self.lb[j] == self.ub[j] {
                        continue;
                    }
                    let a = sign * self.prow[j];
                    if a.abs() <= ptol {
                        continue;
                    }
                    let ratio = match st {
                        VarStatus::AtLower if a > 0.0 => self.d[j] / a,
                        VarStatus::AtUpper if a < 0.0 => self.d[j] / a,
                        VarStatus::Free => 0.0,
                        _ => continue,
                    };
                    if ratio <= t_max && a.abs() > enter_abs {
                        enter_abs = a.abs();
                        enter = j;
                    }
                }
            }
            if enter == NONE {
                if self.factor.num_updates() > 0 && retries < 3 {
                    retries += 1;
                    if !self.refactor() {
                        return DualOutcome::Handover;
                    }
                    self.compute_primal();
                    self.compute_duals();
                    self.make_dual_feasible(true);
                    continue;
                }
                return DualOutcome::Infeasible;
            }

            // Entering column.
            self.alpha.iter_mut().for_each(|a| *a = 0.0);
            if enter < self.n {
                let (rows, vals) = self.problem.column(enter);
                for (&i, &a) in rows.iter().zip(vals) {
                    self.alpha[i] = a;
                }
            } else {
                self.alpha[enter - self.n] = 1.0;
            }
            self.factor.ftran(&mut self.alpha);
            let a_pq = self.alpha[leave_pos];
            if a_pq.abs() <= ptol || (a_pq - self.prow[enter]).abs() > 1e-6 * (1.0 + a_pq.abs()) {
                // Row and column disagree: the factor has drifted.
                if retries < 3 {
                    retries += 1;
                    if !self.refactor() {
                        return DualOutcome::Handover;
                    }
                    self.compute_primal();
                    self.compute_duals();
                    self.make_dual_feasible(true);
                    continue;
                }
                return DualOutcome::Handover;
            }
            retries = 0;

            // Dual update.
            let t = (self.d[enter] / (sign * self.prow[enter])).max(0.0);
            if t != 0.0 {
                for &j in &self.touched {
                    if self.status[j] != VarStatus::Basic {
                        self.d[j] -= t * sign * self.prow[j];
                    }
                }
            }
            let leave = self.head[leave_pos];
            self.d[enter] = 0.0;
            self.d[leave] = -t * sign;

            // Steepest-edge weights: tau = B⁻¹ rho.
            let w_p = self.rho.iter().map(|v| v * v).sum::<f64>();
            self.tau.copy_from_slice(&self.rho);
            self.factor.ftran(&mut self.tau);
            for i in 0..m {
                let a = self.alpha[i];
                if i == leave_pos || a == 0.0 {
                    continue;
                }
                let r = a / a_pq;
                let w = self.weights[i] - 2.0 * r * self.tau[i] + r * r * w_p;
                self.weights[i] = w.max(r * r).max(1e-8);
            }
            self.weights[leave_pos] = (w_p / (a_pq * a_pq)).max(1e-8);

            // Primal update: the leaving variable lands on its violated bound.
            let step = delta / a_pq;
            self.shift_basics(step);
            self.x[enter] += step;
            let target_upper = delta > 0.0;
            self.x[leave] = if target_upper {
                self.ub[leave]
            } else {
                self.lb[leave]
            };
            self.status[leave] = if target_upper {
                VarStatus::AtUpper
            } else {
                VarStatus::AtLower
            };
            self.pos_of[leave] = NONE;
            self.head[leave_pos] = enter;
            self.pos_of[enter] = leave_pos;
            self.status[enter] = VarStatus::Basic;
            self.factor.update(leave_pos, &self.alpha);
            self.iterations += 1;
        }
    }

    fn iterate(&mut self) -> LpStatus {
        let ftol = self.opts.feas_tol;
        let otol = self.opts.opt_tol;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut cb = vec![0.0; self.m];
        let mut stalls = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.factor.num_updates() >= self.opts.refactor_interval {
                if !self.refactor() {
                    return LpStatus::Singular;
                }
                self.compute_primal();
            }

            // Phase selection from basic infeasibilities.
            let mut phase1 = false;
            for p in 0..self.m {
                let j = self.head[p];
                let v = self.x[j];
                cb[p] = if v < self.lb[j] - ftol {
                    phase1 = true;
                    -1.0
                } else if v > self.ub[j] + ftol {
                    phase1 = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !phase1 {
                for p in 0..self.m {
                    cb[p] = self.cost[self.head[p]];
                }
            }
            self.y.copy_from_slice(&cb);
            self.factor.btran(&mut self.y);

            // Pricing.
            let mut enter = NONE;
            let mut best = 0.0;
            let mut enter_dir = 0.0;
            for j in 0..self.n + self.m {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let d = self.price(j, phase1);
                let dir = match st {
                    VarStatus::AtLower if d < -otol => 1.0,
                    VarStatus::AtUpper if d > otol => -1.0,
                    VarStatus::Free if d.abs() > otol => -d.signum(),
                    _ => continue,
                };
                if bland {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    enter = j;
                    enter_dir = dir;
                }
            }

            if enter == NONE {
                if self.factor.num_updates() > 0 {
                    if !self.refactor() {
                        return LpStatus::Singular;
                    }
                    self.compute_primal();
                    continue;
                }
                return if phase1 {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            }

            // Entering column in basis coordinates.
            self.alpha.iter_mut().for_each(|a| *a = 0.0);
            if enter < self.n {
                let (rows, vals) = self.problem.column(enter);
                for (&i, &a) in rows.iter().zip(vals) {
                    self.alpha[i] = a;
                }
            } else {
                self.alpha[enter - self.n] = 1.0;
            }
            self.factor.ftran(&mut self.alpha);

            let (step, theta) = self.ratio_test(enter, enter_dir, phase1, bland);
            match step {
                Step::Unbounded => {
                    if phase1 || self.factor.num_updates() > 0 {
                        // Numerical trouble: rebuild and retry a few times.
                        stalls += 1;
                        if stalls > 3 {
                            return if phase1 {
                                LpStatus::Singular
                            } else {
                                LpStatus::Unbounded
                            };
                        }
                        if !self.refactor() {
                            return LpStatus::Singular;
                        }
                        self.compute_primal();
                        continue;
                    }
                    return LpStatus::Unbounded;
                }
                Step::Flip => {
                    let delta = enter_dir * theta;
                    self.shift_basics(delta);
                    self.status[enter] = if enter_dir > 0.0 {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.x[enter] = if enter_dir > 0.0 {
                        self.ub[enter]
                    } else {
                        self.lb[enter]
                    };
                }
                Step::Pivot { pos, to_upper } => {
                    let delta = enter_dir * theta;
                    self.shift_basics(delta);
                    self.x[enter] += delta;
                    let leave = self.head[pos];
                    if to_upper {
                        self.status[leave] = VarStatus::AtUpper;
                        self.x[leave] = self.ub[leave];
                    } else {
                        self.status[leave] = VarStatus::AtLower;
                        self.x[leave] = self.lb[leave];
                    }
                    self.pos_of[leave] = NONE;
                    self.head[pos] = enter;
                    self.pos_of[enter] = pos;
                    self.status[enter] = VarStatus::Basic;
                    self.factor.update(pos, &self.alpha);
                }
            }
            stalls = 0;
            self.iterations += 1;

            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > self.opts.bland_after {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
    }

    fn shift_basics(&mut self, delta: f64) {
        if delta == 0.0 {
            return;
        }
        for p in 0..self.m {
            let a = self.alpha[p];
            if a != 0.0 {
                self.x[self.head[p]] -= delta * a;
            }
        }
    }

    /// Two-pass Harris ratio test (or plain min-ratio with lowest-index ties
    /// under Bland). Returns the step kind and its length.
    fn ratio_test(&self, enter: usize, dir: f64, phase1: bool, bland: bool) -> (Step, f64) {
        let ftol = self.opts.feas_tol;
        let ptol = self.opts.pivot_tol;
        // (pos, exact ratio, to_upper)
        let mut cands: Vec<(usize, f64, bool)> = Vec::new();
        let mut theta_max = f64::INFINITY;
        for p in 0..self.m {
            let a = self.alpha[p];
            if a.abs() <= ptol {
                continue;
            }
            let j = self.head[p];
            let v = self.x[j];
            let (l, u) = (self.lb[j], self.ub[j]);
            let rate = -dir * a;
            let below = phase1 && v < l - ftol;
            let above = phase1 && v > u + ftol;
            let (exact, relaxed, to_upper) = if rate < 0.0 {
                if below {
                    continue;
                } else if above {
                    let r = (v - u) / -rate;
                    (r, r, true)
                } else if l.is_finite() {
                    ((v - l) / -rate, (v - l + ftol) / -rate, false)
                } else {
                    continue;
                }
            } else if above {
                continue;
            } else if below {
                let r = (l - v) / rate;
                (r, r, false)
            } else if u.is_finite() {
                ((u - v) / rate, (u - v + ftol) / rate, true)
            } else {
                continue;
            };
            let bound = if bland { exact } else { relaxed };
            if bound < theta_max {
                theta_max = bound;
            }
            cands.push((p, exact, to_upper));
        }

        let range = self.ub[enter] - self.lb[enter];
        if range.is_finite() && range <= theta_max {
            return (Step::Flip, range);
        }
        if cands.is_empty() || !theta_max.is_finite() {
            return (Step::Unbounded, f64::INFINITY);
        }

        let mut chosen = NONE;
        let mut chosen_ratio = 0.0;
        let mut chosen_to_upper = false;
        if bland {
            let mut best_var = NONE;
            for &(p, r, up) in &cands {
                if r <= theta_max + 1e-12 && self.head[p] < best_var {
                    best_var = self.head[p];
                    chosen = p;
                    chosen_ratio = r;
                    chosen_to_upper = up;
                }
            }
        } else {
            let mut best_abs = 0.0;
            for &(p, r, up) in &cands {
                let a = self.alpha[p].abs();
                if r <= theta_max && a > best_abs {
                    best_abs = a;
                    chosen = p;
                    chosen_ratio = r;
                    chosen_to_upper = up;
                }
            }
        }
        (
            Step::Pivot {
                pos: chosen,
                to_upper: chosen_to_upper,
            },
            chosen_ratio.max(0.0),
        )
    }

    fn finish(&mut self, status: LpStatus) -> LpSolution {
        let n = self.n;
        let x: Vec<f64> = self.x[..n].to_vec();
        let row_activity = self.problem.row_activity(&x);
        let objective = self.problem.objective_value(&x);
        let mut duals = vec![0.0; self.m];
        let mut reduced_costs = vec![0.0; n];
        if matches!(status, LpStatus::Optimal) && self.m > 0 {
            for p in 0..self.m {
                duals[p] = self.cost[self.head[p]];
            }
            self.factor.btran(&mut duals);
            self.y.copy_from_slice(&duals);
            for (j, rc) in reduced_costs.iter_mut().enumerate() {
                *rc = if self.status[j] == VarStatus::Basic {
                    0.0
                } else {
                    self.price(j, false)
                };
            }
        } else if matches!(status, LpStatus::Optimal) {
            reduced_costs.copy_from_slice(&self.cost[..n]);
        }
        LpSolution {
            status,
            x,
            objective,
            row_activity,
            duals,
            reduced_costs,
            basis: Basis {
                status: self.status.clone(),
            },
            iterations: self.iterations,
        }
    }
}
