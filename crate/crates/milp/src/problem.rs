//! Linear program data: a column-major constraint matrix, row senses and
//! right-hand sides, column bounds and a minimisation objective.

use crate::error::LpError;
use std::fmt;

/// Sense of a linear row `a·x (sense) rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        f.write_str(s)
    }
}

/// An immutable LP in column-major form.
///
/// Every column has a finite lower bound; upper bounds may be `f64::INFINITY`.
/// The objective is always minimised.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    num_rows: usize,
    col_start: Vec<usize>,
    row_index: Vec<usize>,
    values: Vec<f64>,
    senses: Vec<Sense>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
}

impl LpProblem {
    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.values.len()
    }

    /// Row indices and coefficients of column `j`.
    #[inline]
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_start[j]..self.col_start[j + 1];
        (&self.row_index[range.clone()], &self.values[range])
    }

    pub fn senses(&self) -> &[Sense] {
        &self.senses
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Objective value `c·x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Row activities `A·x`.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.num_rows];
        for (j, &xj) in x.iter().enumerate().take(self.num_cols()) {
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.column(j);
            for (&i, &a) in rows.iter().zip(vals) {
                act[i] += a * xj;
            }
        }
        act
    }

    /// Row-major copy of the matrix as `(row_start, col_index, values)`.
    pub fn to_row_major(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut counts = vec![0usize; self.num_rows + 1];
        for &i in &self.row_index {
            counts[i + 1] += 1;
        }
        for i in 0..self.num_rows {
            counts[i + 1] += counts[i];
        }
        let row_start = counts.clone();
        let mut next = counts;
        let mut cols = vec![0usize; self.values.len()];
        let mut vals = vec![0.0; self.values.len()];
        for j in 0..self.num_cols() {
            let (rows, v) = self.column(j);
            for (&i, &a) in rows.iter().zip(v) {
                let k = next[i];
                cols[k] = j;
                vals[k] = a;
                next[i] += 1;
            }
        }
        (row_start, cols, vals)
    }

    /// Returns a copy with the given column bounds replaced.
    pub fn with_bounds(&self, lower: Vec<f64>, upper: Vec<f64>) -> Result<LpProblem, LpError> {
        check_bounds(&lower, &upper, self.num_cols())?;
        Ok(LpProblem {
            lower,
            upper,
            ..self.clone()
        })
    }

    /// Returns a copy with the objective replaced.
    pub fn with_objective(&self, objective: Vec<f64>) -> Result<LpProblem, LpError> {
        if objective.len() != self.num_cols() {
            return Err(LpError::DimensionMismatch {
                what: "objective",
                expected: self.num_cols(),
                found: objective.len(),
            });
        }
        Ok(LpProblem {
            objective,
            ..self.clone()
        })
    }
}

fn check_bounds(lower: &[f64], upper: &[f64], n: usize) -> Result<(), LpError> {
    if lower.len() != n {
        return Err(LpError::DimensionMismatch {
            what: "lower bounds",
            expected: n,
            found: lower.len(),
        });
    }
    if upper.len() != n {
        return Err(LpError::DimensionMismatch {
            what: "upper bounds",
            expected: n,
            found: upper.len(),
        });
    }
    for (j, (&l, &u)) in lower.iter().zip(upper).enumerate() {
        if !l.is_finite() || u.is_nan() || l > u {
            return Err(LpError::InvalidBounds {
                col: j,
                lower: l,
                upper: u,
            });
        }
    }
    Ok(())
}

/// Row coefficients, sense and right-hand side.
type RowEntry = (Vec<(usize, f64)>, Sense, f64);

/// Incremental row-wise builder for [`LpProblem`].
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    rows: Vec<RowEntry>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a column and returns its index.
    pub fn add_col(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Adds a row and returns its index. Duplicate column entries are summed.
    pub fn add_row(&mut self, coefs: &[(usize, f64)], sense: Sense, rhs: f64) -> usize {
        self.rows.push((coefs.to_vec(), sense, rhs));
        self.rows.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_cost(&mut self, col: usize, cost: f64) {
        self.objective[col] = cost;
    }

    pub fn build(self) -> Result<LpProblem, LpError> {
        let n = self.objective.len();
        check_bounds(&self.lower, &self.upper, n)?;
        let mut counts = vec![0usize; n + 1];
        let mut cleaned = Vec::with_capacity(self.rows.len());
        for (r, (coefs, sense, rhs)) in self.rows.into_iter().enumerate() {
            if !rhs.is_finite() {
                return Err(LpError::NonFinite {
                    what: "rhs",
                    index: r,
                });
            }
            let mut coefs = coefs;
            coefs.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coefs.len());
            for (j, a) in coefs {
                if j >= n {
                    return Err(LpError::DimensionMismatch {
                        what: "row column index",
                        expected: n,
                        found: j,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite {
                        what: "coefficient",
                        index: r,
                    });
                }
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += a,
                    _ => merged.push((j, a)),
                }
            }
            merged.retain(|&(_, a)| a != 0.0);
            for &(j, _) in &merged {
                counts[j + 1] += 1;
            }
            cleaned.push((merged, sense, rhs));
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let nnz = counts[n];
        let col_start = counts.clone();
        let mut next = counts;
        let mut row_index = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut senses = Vec::with_capacity(cleaned.len());
        let mut rhs = Vec::with_capacity(cleaned.len());
        for (i, (coefs, sense, b)) in cleaned.into_iter().enumerate() {
            for (j, a) in coefs {
                let k = next[j];
                row_index[k] = i;
                values[k] = a;
                next[j] += 1;
            }
            senses.push(sense);
            rhs.push(b);
        }
        if let Some((j, _)) = self
            .objective
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite())
        {
            return Err(LpError::NonFinite {
                what: "objective",
                index: j,
            });
        }
        Ok(LpProblem {
            num_rows: senses.len(),
            col_start,
            row_index,
            values,
            senses,
            rhs,
            lower: self.lower,
            upper: self.upper,
            objective: self.objective,
        })
    }
}
