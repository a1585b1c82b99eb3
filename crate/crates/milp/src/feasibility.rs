//! Independent feasibility check of a point against an [`LpProblem`].

use crate::error::LpError;
use crate::problem::{LpProblem, Sense};

/// Violations of rows and column bounds by a candidate point.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub max_row_violation: f64,
    pub max_bound_violation: f64,
    /// Rows violated by more than the tolerance.
    pub violated_rows: Vec<usize>,
    /// Columns outside their bounds by more than the tolerance.
    pub violated_cols: Vec<usize>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violated_rows.is_empty() && self.violated_cols.is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        self.max_row_violation.max(self.max_bound_violation)
    }
}

/// Checks `x` row by row. A row violation is measured relative to
/// `max(1, |rhs|)`, a bound violation relative to `max(1, |bound|)`.
pub fn check_feasibility(p: &LpProblem, x: &[f64], tol: f64) -> Result<FeasibilityReport, LpError> {
    if x.len() != p.num_cols() {
        return Err(LpError::DimensionMismatch {
            what: "point",
            expected: p.num_cols(),
            found: x.len(),
        });
    }
    let act = p.row_activity(x);
    let mut report = FeasibilityReport {
        max_row_violation: 0.0,
        max_bound_violation: 0.0,
        violated_rows: Vec::new(),
        violated_cols: Vec::new(),
    };
    for (i, ((&a, &b), sense)) in act.iter().zip(p.rhs()).zip(p.senses()).enumerate() {
        let v = match sense {
            Sense::Le => (a - b).max(0.0),
            Sense::Ge => (b - a).max(0.0),
            Sense::Eq => (a - b).abs(),
        } / b.abs().max(1.0);
        report.max_row_violation = report.max_row_violation.max(v);
        if v > tol {
            report.violated_rows.push(i);
        }
    }
    for (j, ((&v, &l), &u)) in x.iter().zip(p.lower()).zip(p.upper()).enumerate() {
        let below = (l - v).max(0.0) / l.abs().max(1.0);
        let above = if u.is_finite() {
            (v - u).max(0.0) / u.abs().max(1.0)
        } else {
            0.0
        };
        let viol = below.max(above);
        report.max_bound_violation = report.max_bound_violation.max(viol);
        if viol > tol || v.is_nan() {
            report.violated_cols.push(j);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::LpBuilder;

    #[test]
    fn reports_each_kind_of_violation() {
        let mut b = LpBuilder::new();
        let x = b.add_col(0.0, 0.0, 1.0);
        let y = b.add_col(0.0, 0.0, f64::INFINITY);
        b.add_row(&[(x, 1.0), (y, 1.0)], Sense::Le, 2.0);
        b.add_row(&[(y, 1.0)], Sense::Eq, 1.0);
        let p = b.build().unwrap();
        assert!(check_feasibility(&p, &[1.0, 1.0], 1e-9)
            .unwrap()
            .is_feasible());
        let r = check_feasibility(&p, &[1.5, 1.0], 1e-9).unwrap();
        assert_eq!(r.violated_cols, vec![0]);
        assert_eq!(r.violated_rows, vec![0]);
        assert!((r.max_row_violation - 0.25).abs() < 1e-12);
        assert!(check_feasibility(&p, &[1.0], 1e-9).is_err());
    }
}
