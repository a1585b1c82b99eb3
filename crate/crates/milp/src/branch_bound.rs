//! LP-based branch and bound for problems with integer columns.
//!
//! Nodes are explored best-bound-first; after branching the search plunges
//! depth-first into the child on the rounding side of the branching value
//! until that path is pruned or integral. Children warm-start from their
//! parent's final basis. A rounding heuristic proposes integer patterns which
//! are completed by an LP over the continuous columns with the integers fixed.

use crate::error::LpError;
use crate::feasibility::check_feasibility;
use crate::problem::LpProblem;
use crate::simplex::{Basis, LpSolution, LpStatus, Simplex, SimplexOptions};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::rc::Rc;
use std::time::{Duration, Instant};

/// An LP together with the set of columns required to take integer values.
#[derive(Debug, Clone, PartialEq)]
pub struct MipProblem {
    pub lp: LpProblem,
    pub integer: Vec<bool>,
}

impl MipProblem {
    pub fn new(lp: LpProblem, integer: Vec<bool>) -> Result<Self, LpError> {
        if integer.len() != lp.num_cols() {
            return Err(LpError::DimensionMismatch {
                what: "integer flags",
                expected: lp.num_cols(),
                found: integer.len(),
            });
        }
        Ok(MipProblem { lp, integer })
    }

    pub fn num_integer(&self) -> usize {
        self.integer.iter().filter(|b| **b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branching {
    /// Largest distance to the nearest integer, ties to the lowest column.
    MostFractional,
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    /// Stop once `(incumbent - bound) / max(|incumbent|, 1)` is at most this.
    pub gap_target: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    pub int_tol: f64,
    pub branching: Branching,
    /// Node order is always serial and reproducible; kept so callers can
    /// state the requirement explicitly.
    pub deterministic: bool,
    /// Prune nodes whose bound cannot improve the incumbent by more than the
    /// gap target. Disabling this explores the full tree.
    pub prune: bool,
    /// Run the rounding heuristic every this many nodes (always at the root).
    pub heuristic_interval: usize,
    /// Emit a progress line every this many nodes.
    pub progress_interval: usize,
    pub simplex: SimplexOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            gap_target: 1e-3,
            time_limit: None,
            node_limit: None,
            int_tol: 1e-6,
            branching: Branching::MostFractional,
            deterministic: true,
            prune: true,
            heuristic_interval: 20,
            progress_interval: 100,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MilpStatus {
    OptimalWithinGap,
    Infeasible,
    /// A time or node limit stopped the search before the gap target.
    GapNotReached,
    /// The relaxation is unbounded.
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub best_bound: f64,
    pub gap: f64,
    /// Nodes processed after the root relaxation.
    pub nodes: usize,
    pub lp_iterations: usize,
    pub elapsed: Duration,
}

/// Search state reported to the progress callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub nodes: usize,
    pub bound: f64,
    pub incumbent: Option<f64>,
    pub gap: f64,
    pub elapsed: Duration,
}

impl fmt::Display for Progress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inc = self.incumbent.unwrap_or(f64::INFINITY);
        write!(
            f,
            "node={} bound={:.6} incumbent={:.6} gap={:.4}% t={:.2}",
            self.nodes,
            self.bound,
            inc,
            self.gap * 100.0,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Relative gap between an incumbent value and a lower bound.
pub fn relative_gap(incumbent: Option<f64>, bound: f64) -> f64 {
    match incumbent {
        Some(inc) => ((inc - bound) / inc.abs().max(1.0)).max(0.0),
        None => f64::INFINITY,
    }
}

/// Picks the column to branch on, or `None` when every integer column is
/// within `int_tol` of an integer.
pub fn branch_select(x: &[f64], integer: &[bool], int_tol: f64) -> Option<usize> {
    let mut best = None;
    let mut best_frac = int_tol;
    for (j, (&v, &is_int)) in x.iter().zip(integer).enumerate() {
        if !is_int {
            continue;
        }
        let frac = (v - v.round()).abs();
        if frac > best_frac {
            best_frac = frac;
            best = Some(j);
        }
    }
    best
}

/// Source of candidate integer assignments.
///
/// Each returned vector has one entry per column; only the entries of integer
/// columns are used, and they are rounded before use. The driver fixes those
/// values and solves for the continuous columns.
pub trait Heuristic {
    fn propose(&mut self, mip: &MipProblem, relaxation: &[f64]) -> Vec<Vec<f64>>;
}

/// Rounds every integer column of the relaxation to the nearest integer.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestRounding;

impl Heuristic for NearestRounding {
    fn propose(&mut self, _mip: &MipProblem, relaxation: &[f64]) -> Vec<Vec<f64>> {
        vec![relaxation.to_vec()]
    }
}

/// Rounds each integer column up when its fractional part exceeds a
/// threshold, one proposal per threshold. Thresholds near zero round every
/// fractional value up, which suits columns that only ever relax
/// constraints when increased.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRounding {
    pub thresholds: Vec<f64>,
}

impl Default for ThresholdRounding {
    fn default() -> Self {
        ThresholdRounding {
            thresholds: vec![0.5, 1e-6],
        }
    }
}

impl Heuristic for ThresholdRounding {
    fn propose(&mut self, mip: &MipProblem, relaxation: &[f64]) -> Vec<Vec<f64>> {
        self.thresholds
            .iter()
            .map(|&th| {
                relaxation
                    .iter()
                    .zip(&mip.integer)
                    .map(|(&v, &is_int)| {
                        if !is_int {
                            return v;
                        }
                        let f = v.floor();
                        if v - f > th {
                            f + 1.0
                        } else {
                            f
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Solves with default nearest rounding and no progress output.
pub fn solve_milp(mip: &MipProblem, opts: &MilpOptions) -> MilpResult {
    solve_milp_with(mip, opts, &mut NearestRounding, &mut |_| {})
}

struct Node {
    bound: f64,
    seq: usize,
    depth: usize,
    changes: Rc<Vec<(usize, f64, f64)>>,
    basis: Option<Rc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap order: the smallest bound (then the oldest) ranks highest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a, 'h> {
    mip: &'a MipProblem,
    opts: &'a MilpOptions,
    simplex: Simplex<'a>,
    heuristic: &'h mut dyn Heuristic,
    incumbent: Option<(f64, Vec<f64>)>,
    tried: HashSet<Vec<i64>>,
    lp_iterations: usize,
    /// Smallest bound among nodes discarded without proving them worse than
    /// the incumbent (pruned by gap or abandoned after LP failure).
    discarded_bound: f64,
}

impl<'a, 'h> Search<'a, 'h> {
    fn load_bounds(&mut self, changes: &[(usize, f64, f64)]) {
        self.simplex.reset_bounds();
        for &(j, l, u) in changes {
            self.simplex.set_col_bounds(j, l, u);
        }
    }

    fn solve_lp(&mut self, basis: Option<&Basis>) -> LpSolution {
        let sol = self
            .simplex
            .solve(basis)
            .expect("basis dimensions are fixed by the problem");
        self.lp_iterations += sol.iterations;
        sol
    }

    fn incumbent_value(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|(v, _)| *v)
    }

    fn prune_threshold(&self) -> f64 {
        match self.incumbent_value() {
            None => f64::INFINITY,
            Some(inc) => {
                let scale = inc.abs().max(1.0);
                let slack = if self.opts.prune {
                    (self.opts.gap_target * scale).max(1e-9 * scale)
                } else {
                    1e-9 * scale
                };
                inc - slack
            }
        }
    }

    /// Records a node that will not be explored further. Its bound keeps
    /// limiting the global bound unless the incumbent is at least as good.
    fn discard(&mut self, bound: f64) {
        if let Some(inc) = self.incumbent_value() {
            if bound >= inc {
                return;
            }
        }
        self.discarded_bound = self.discarded_bound.min(bound);
    }

    fn try_incumbent(&mut self, x: Vec<f64>, obj: f64) -> bool {
        if let Some(inc) = self.incumbent_value() {
            if obj >= inc {
                return false;
            }
        }
        let tol = self.opts.simplex.feas_tol * 10.0;
        let report = check_feasibility(&self.mip.lp, &x, tol).expect("full-length point");
        if !report.is_feasible() {
            log::debug!(
                "rejected candidate incumbent: violation {:e}",
                report.max_violation()
            );
            return false;
        }
        let integral = x
            .iter()
            .zip(&self.mip.integer)
            .all(|(v, &is_int)| !is_int || (v - v.round()).abs() <= self.opts.int_tol);
        if !integral {
            return false;
        }
        self.incumbent = Some((obj, x));
        true
    }

    /// Fixes the integer columns to each proposed pattern and completes the
    /// continuous part by LP. Returns true if the incumbent improved.
    fn run_heuristic(&mut self, relaxation: &[f64], basis: &Basis) -> bool {
        let proposals = self.heuristic.propose(self.mip, relaxation);
        let mut improved = false;
        let lower = self.mip.lp.lower();
        let upper = self.mip.lp.upper();
        for cand in proposals {
            let pattern: Vec<i64> = cand
                .iter()
                .zip(&self.mip.integer)
                .enumerate()
                .filter(|(_, (_, &is_int))| is_int)
                .map(|(j, (&v, _))| v.round().clamp(lower[j], upper[j]) as i64)
                .collect();
            if !self.tried.insert(pattern.clone()) {
                continue;
            }
            self.simplex.reset_bounds();
            let mut k = 0;
            for j in 0..self.mip.lp.num_cols() {
                if self.mip.integer[j] {
                    let v = pattern[k] as f64;
                    self.simplex.set_col_bounds(j, v, v);
                    k += 1;
                }
            }
            let sol = self.solve_lp(Some(basis));
            if sol.status == LpStatus::Optimal {
                let mut x = sol.x;
                let mut k = 0;
                for j in 0..x.len() {
                    if self.mip.integer[j] {
                        x[j] = pattern[k] as f64;
                        k += 1;
                    }
                }
                let obj = self.mip.lp.objective_value(&x);
                if self.try_incumbent(x, obj) {
                    log::debug!("heuristic incumbent {obj}");
                    improved = true;
                }
            }
        }
        improved
    }
}

/// Full driver with a caller-supplied heuristic and progress callback.
pub fn solve_milp_with(
    mip: &MipProblem,
    opts: &MilpOptions,
    heuristic: &mut dyn Heuristic,
    progress: &mut dyn FnMut(&Progress),
) -> MilpResult {
    let start = Instant::now();
    let mut s = Search {
        mip,
        opts,
        simplex: Simplex::new(&mip.lp, opts.simplex.clone()),
        heuristic,
        incumbent: None,
        tried: HashSet::new(),
        lp_iterations: 0,
        discarded_bound: f64::INFINITY,
    };

    let finish = |s: Search, status: MilpStatus, bound: f64, nodes: usize| {
        let inc = s.incumbent_value();
        let bound = match inc {
            Some(v) => bound.min(v),
            None => bound,
        };
        let gap = relative_gap(inc, bound);
        let (objective, x) = match s.incumbent {
            Some((v, x)) => (Some(v), Some(x)),
            None => (None, None),
        };
        MilpResult {
            status,
            x,
            objective,
            best_bound: bound,
            gap,
            nodes,
            lp_iterations: s.lp_iterations,
            elapsed: start.elapsed(),
        }
    };

    let root = s.solve_lp(None);
    match root.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return finish(s, MilpStatus::Infeasible, f64::INFINITY, 0),
        LpStatus::Unbounded => return finish(s, MilpStatus::Unbounded, f64::NEG_INFINITY, 0),
        LpStatus::IterationLimit | LpStatus::Singular => {
            log::warn!("root relaxation failed: {:?}", root.status);
            return finish(s, MilpStatus::GapNotReached, f64::NEG_INFINITY, 0);
        }
    }

    let mut best_bound = root.objective;
    let mut nodes = 0usize;
    let mut seq = 0usize;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let report = |s: &Search, nodes: usize, bound: f64, progress: &mut dyn FnMut(&Progress)| {
        let inc = s.incumbent_value();
        progress(&Progress {
            nodes,
            bound: inc.map_or(bound, |v| bound.min(v)),
            incumbent: inc,
            gap: relative_gap(inc, bound),
            elapsed: start.elapsed(),
        });
    };

    // The node currently being plunged into, with its solved relaxation.
    let mut current: Option<(Node, LpSolution)> = Some((
        Node {
            bound: root.objective,
            seq: 0,
            depth: 0,
            changes: Rc::new(Vec::new()),
            basis: None,
        },
        root,
    ));
    let mut first = true;

    loop {
        let (node, sol) = match current.take() {
            Some(pair) => pair,
            None => {
                let Some(node) = heap.pop() else { break };
                if node.bound >= s.prune_threshold() {
                    s.discard(node.bound);
                    continue;
                }
                if let Some(limit) = opts.node_limit {
                    if nodes >= limit {
                        heap.push(node);
                        break;
                    }
                }
                if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
                    heap.push(node);
                    break;
                }
                s.load_bounds(&node.changes);
                let sol = s.solve_lp(node.basis.as_deref());
                nodes += 1;
                (node, sol)
            }
        };

        let bound = match sol.status {
            LpStatus::Optimal => sol.objective.max(node.bound),
            LpStatus::Infeasible => continue,
            _ => {
                log::warn!("node LP ended with {:?}; node abandoned", sol.status);
                s.discard(node.bound);
                continue;
            }
        };
        if !first && bound >= s.prune_threshold() {
            s.discard(bound);
            continue;
        }

        let mut improved = false;
        let branch_col = branch_select(&sol.x, &mip.integer, opts.int_tol);
        match branch_col {
            None => {
                let obj = sol.objective;
                improved |= s.try_incumbent(sol.x.clone(), obj);
                if !improved && s.incumbent_value().is_none_or(|v| obj < v) {
                    // Integral but rejected by the independent check: try a
                    // clean re-solve with integers fixed.
                    improved |= s.run_heuristic(&sol.x, &sol.basis);
                }
            }
            Some(_) => {
                if first
                    || (opts.heuristic_interval > 0
                        && nodes.is_multiple_of(opts.heuristic_interval))
                {
                    improved |= s.run_heuristic(&sol.x, &sol.basis);
                }
            }
        }
        first = false;

        if let Some(j) = branch_col {
            if bound < s.prune_threshold() {
                let v = sol.x[j];
                let (lo, hi) = {
                    let mut l = mip.lp.lower()[j];
                    let mut u = mip.lp.upper()[j];
                    for &(c, cl, cu) in node.changes.iter() {
                        if c == j {
                            l = cl;
                            u = cu;
                        }
                    }
                    (l, u)
                };
                let down = (j, lo, v.floor());
                let up = (j, v.ceil(), hi);
                let basis = Rc::new(sol.basis);
                let child = |b: (usize, f64, f64), seq: usize| {
                    let mut ch = (*node.changes).clone();
                    ch.retain(|c| c.0 != j);
                    ch.push(b);
                    Node {
                        bound,
                        seq,
                        depth: node.depth + 1,
                        changes: Rc::new(ch),
                        basis: Some(basis.clone()),
                    }
                };
                let (dive, other) = if v - v.floor() >= 0.5 {
                    (up, down)
                } else {
                    (down, up)
                };
                seq += 1;
                let dive_node = child(dive, seq);
                seq += 1;
                heap.push(child(other, seq));

                let within_limits = opts.node_limit.is_none_or(|l| nodes < l)
                    && opts.time_limit.is_none_or(|t| start.elapsed() < t);
                if within_limits {
                    s.load_bounds(&dive_node.changes);
                    let dsol = s.solve_lp(dive_node.basis.as_deref());
                    nodes += 1;
                    current = Some((dive_node, dsol));
                } else {
                    heap.push(dive_node);
                }
            } else {
                s.discard(bound);
            }
        }

        let global = open_bound(&heap, current.as_ref().map(|(n, _)| n.bound))
            .min(s.discarded_bound)
            .min(s.incumbent_value().unwrap_or(f64::INFINITY));
        if global.is_finite() && global > best_bound {
            best_bound = global;
        }
        if improved || nodes.is_multiple_of(opts.progress_interval.max(1)) {
            report(&s, nodes, best_bound, progress);
        }
        if opts.prune && relative_gap(s.incumbent_value(), best_bound) <= opts.gap_target {
            break;
        }
    }

    let global = open_bound(&heap, current.as_ref().map(|(n, _)| n.bound))
        .min(s.discarded_bound)
        .min(s.incumbent_value().unwrap_or(f64::INFINITY));
    if global.is_finite() && global > best_bound {
        best_bound = global;
    }
    let exhausted = heap.is_empty() && current.is_none();
    let status = match s.incumbent_value() {
        None if exhausted && s.discarded_bound.is_infinite() => MilpStatus::Infeasible,
        None => MilpStatus::GapNotReached,
        Some(inc) if relative_gap(Some(inc), best_bound) <= opts.gap_target => {
            MilpStatus::OptimalWithinGap
        }
        Some(_) => MilpStatus::GapNotReached,
    };
    report(&s, nodes, best_bound, progress);
    finish(s, status, best_bound, nodes)
}

fn open_bound(heap: &BinaryHeap<Node>, current: Option<f64>) -> f64 {
    let h = heap.peek().map_or(f64::INFINITY, |n| n.bound);
    current.map_or(h, |c| h.min(c))
}
