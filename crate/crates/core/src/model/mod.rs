//! The planning MILP: sparse variable creation guarded by the scenario's
//! suitability relations, every constraint family, and the cost objective.
//!
//! Columns are created up front by [`ModelBuilder::new`]; each constraint
//! family is then added by its own method so families can be inspected in
//! isolation. [`build`] composes all of them.

mod builder;
mod heuristic;
mod vars;

pub use builder::{delivery_links, raw_links, DeliveryLink, LinkVehicle, ModelBuilder, RawLink};
pub use heuristic::ScheduleRounding;
pub use vars::{Family, VarId};

use crate::scenario::{ConsumerIdx, ProductIdx, Scenario};
use hydroplan_milp::{
    solve_milp_with, LpError, LpProblem, MilpOptions, MilpResult, MipProblem, Progress,
};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Treat product selection as continuous in [0, 1].
    pub relax_psl: bool,
    /// Include the hourly dispatch/return recurrence for tanker capacity.
    pub hourly_fleet_balance: bool,
    /// Penalize inventory above target at the same rate as below it.
    pub penalize_target_excess: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            relax_psl: true,
            hourly_fleet_balance: true,
            penalize_target_excess: false,
        }
    }
}

/// A demand period no source can reach in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct UnservablePeriod {
    pub consumer: ConsumerIdx,
    pub product: ProductIdx,
    pub t: usize,
}

/// Row count of one constraint family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowFamily {
    pub name: &'static str,
    pub rows: usize,
}

/// The assembled model with its column map and per-family counts.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub mip: MipProblem,
    pub vars: Vec<VarId>,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
    pub row_families: Vec<RowFamily>,
    pub unservable: Vec<UnservablePeriod>,
    pub options: BuildOptions,
    index: HashMap<VarId, usize>,
}

impl MilpModel {
    pub fn lp(&self) -> &LpProblem {
        &self.mip.lp
    }

    pub fn num_cols(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.mip.lp.num_rows()
    }

    pub fn num_binaries(&self) -> usize {
        self.mip.num_integer()
    }

    pub fn num_continuous(&self) -> usize {
        self.num_cols() - self.num_binaries()
    }

    pub fn col(&self, v: &VarId) -> Option<usize> {
        self.index.get(v).copied()
    }

    /// Value of `v` in `x`, 0 for variables that were never created.
    pub fn value(&self, x: &[f64], v: &VarId) -> f64 {
        self.col(v).map_or(0.0, |j| x[j])
    }

    /// Number of columns per family, in [`Family::ALL`] order.
    pub fn family_counts(&self) -> Vec<(Family, usize)> {
        let mut counts: HashMap<Family, usize> = HashMap::new();
        for v in &self.vars {
            *counts.entry(v.family()).or_default() += 1;
        }
        Family::ALL
            .iter()
            .map(|&f| (f, counts.get(&f).copied().unwrap_or(0)))
            .collect()
    }

    pub fn rows_in(&self, family: &str) -> usize {
        self.row_families
            .iter()
            .filter(|r| r.name == family)
            .map(|r| r.rows)
            .sum()
    }

    /// Column lookup by name.
    pub fn name_index(&self) -> HashMap<&str, usize> {
        self.col_names
            .iter()
            .enumerate()
            .map(|(j, n)| (n.as_str(), j))
            .collect()
    }
}

/// Builds the full model.
pub fn build(sc: &Scenario, opts: BuildOptions) -> Result<MilpModel, LpError> {
    let mut b = ModelBuilder::new(sc, opts);
    b.add_transition_constraints();
    b.add_product_selection();
    b.add_inventory_balances();
    b.add_inventory_bounds();
    b.add_extraction_limits();
    b.add_demand_constraints();
    b.add_fleet_constraints();
    b.set_objective();
    b.finish()
}

/// Solves a built model with schedule rounding as the primal heuristic.
pub fn solve(
    sc: &Scenario,
    model: &MilpModel,
    opts: &MilpOptions,
    progress: &mut dyn FnMut(&Progress),
) -> MilpResult {
    let mut heuristic = ScheduleRounding::new(sc, model);
    solve_milp_with(&model.mip, opts, &mut heuristic, progress)
}
