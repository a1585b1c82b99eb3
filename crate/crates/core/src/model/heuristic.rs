//! Rounding of fractional operating schedules into feasible on/off runs.

use super::{MilpModel, VarId};
use crate::scenario::Scenario;
use hydroplan_milp::{Heuristic, MipProblem};

/// Operating-status columns of one facility and its run-length limits.
#[derive(Debug, Clone)]
struct Schedule {
    /// `yOp` column per period, index 0 is period 1.
    cols: Vec<usize>,
    min_up: usize,
    min_down: usize,
    initial_on: bool,
}

/// Turns a relaxed operating schedule into on/off runs whose cumulative
/// operating hours track the relaxation, honouring forced-off periods and
/// minimum up and down times. One proposal is made per threshold: the
/// facility is switched on once the running shortfall of operating hours
/// reaches the threshold.
#[derive(Debug, Clone)]
pub struct ScheduleRounding {
    schedules: Vec<Schedule>,
    pub thresholds: Vec<f64>,
}

impl ScheduleRounding {
    pub fn new(sc: &Scenario, model: &MilpModel) -> Self {
        let schedules = sc
            .treatment_facilities()
            .map(|s| {
                let src = &sc.sources[s];
                Schedule {
                    cols: (1..=sc.nt())
                        .filter_map(|t| model.col(&VarId::YOp { s, t }))
                        .collect(),
                    min_up: src.min_uptime.max(1),
                    min_down: src.min_downtime.max(1),
                    initial_on: src.initial_on,
                }
            })
            .collect();
        ScheduleRounding {
            schedules,
            thresholds: vec![0.5, 0.25, 0.75],
        }
    }

    fn round(&self, mip: &MipProblem, relaxation: &[f64], threshold: f64) -> Vec<f64> {
        let mut x = relaxation.to_vec();
        let upper = mip.lp.upper();
        for sch in &self.schedules {
            let allowed: Vec<bool> = sch.cols.iter().map(|&j| upper[j] >= 0.5).collect();
            let nt = sch.cols.len();
            let mut on = sch.initial_on;
            // Runs already in progress at the start count as long enough.
            let mut run = usize::MAX / 2;
            let mut shortfall = 0.0;
            for t in 0..nt {
                let j = sch.cols[t];
                shortfall += relaxation[j];
                let next = if !allowed[t] {
                    false
                } else if on && run < sch.min_up {
                    true
                } else if !on && run < sch.min_down {
                    false
                } else if on {
                    shortfall >= threshold
                } else {
                    let room = (t..(t + sch.min_up).min(nt)).all(|k| allowed[k]);
                    room && shortfall >= threshold
                };
                if next {
                    shortfall -= 1.0;
                }
                run = if next == on { run + 1 } else { 1 };
                on = next;
                x[j] = if on { 1.0 } else { 0.0 };
            }
        }
        for (v, &is_int) in x.iter_mut().zip(&mip.integer) {
            if is_int {
                *v = v.round();
            }
        }
        x
    }
}

impl Heuristic for ScheduleRounding {
    fn propose(&mut self, mip: &MipProblem, relaxation: &[f64]) -> Vec<Vec<f64>> {
        self.thresholds
            .iter()
            .map(|&th| self.round(mip, relaxation, th))
            .collect()
    }
}
