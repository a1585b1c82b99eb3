//! Sparse LU factorisation of simplex bases with product-form updates.
//!
//! The basis is factorised left-looking (Gilbert–Peierls) after a column
//! ordering that peels column singletons first, so the triangular part of the
//! basis produces no fill. Pivots inside the remaining nucleus use threshold
//! partial pivoting with a sparsest-row tie break.
//!
//! Coordinates: "rows" are constraint rows, "positions" are basis slots and
//! "steps" are elimination steps. `P B Q = L U` with `L` unit lower
//! triangular in step order.

const NONE: usize = usize::MAX;
const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

/// A sparse column given as parallel row/value slices.
pub(crate) type ColRef<'a> = (&'a [usize], &'a [f64]);

#[derive(Debug, Clone, Default)]
pub(crate) struct LuFactor {
    m: usize,
    pivot_row: Vec<usize>,
    row_step: Vec<usize>,
    col_order: Vec<usize>,
    l_start: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    u_start: Vec<usize>,
    u_steps: Vec<usize>,
    u_vals: Vec<f64>,
    u_diag: Vec<f64>,
}

/// Positions that could not be pivoted and rows left without a pivot.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Deficiency {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

impl LuFactor {
    /// Factorises the `m x m` basis whose column at position `p` is `col(p)`.
    /// On rank deficiency the returned factor is unusable and the caller must
    /// repair the basis using the reported positions and rows.
    pub fn factorize<'a, F>(m: usize, col: F) -> (LuFactor, Option<Deficiency>)
    where
        F: Fn(usize) -> ColRef<'a>,
    {
        let cols: Vec<ColRef<'a>> = (0..m).map(&col).collect();

        // Row-wise pattern of the basis.
        let mut row_count = vec![0usize; m + 1];
        for (rows, _) in &cols {
            for &r in rows.iter() {
                row_count[r + 1] += 1;
            }
        }
        for i in 0..m {
            row_count[i + 1] += row_count[i];
        }
        let row_start = row_count.clone();
        let mut fill = row_count;
        let mut row_pos = vec![0usize; row_start[m]];
        for (p, (rows, _)) in cols.iter().enumerate() {
            for &r in rows.iter() {
                row_pos[fill[r]] = p;
                fill[r] += 1;
            }
        }

        let order = singleton_order(m, &cols, &row_start, &row_pos);

        let mut f = LuFactor {
            m,
            pivot_row: Vec::with_capacity(m),
            row_step: vec![NONE; m],
            col_order: Vec::with_capacity(m),
            l_start: vec![0],
            l_rows: Vec::new(),
            l_vals: Vec::new(),
            u_start: vec![0],
            u_steps: Vec::new(),
            u_vals: Vec::new(),
            u_diag: Vec::with_capacity(m),
        };

        let mut x = vec![0.0; m];
        let mut row_mark = vec![NONE; m];
        let mut step_mark = vec![NONE; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut postorder: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut singular_positions = Vec::new();

        for (stamp, &p) in order.iter().enumerate() {
            let (rows, vals) = cols[p];
            touched.clear();
            postorder.clear();

            // Symbolic: steps reachable from the column pattern through L.
            for &r in rows.iter() {
                if row_mark[r] != stamp {
                    row_mark[r] = stamp;
                    touched.push(r);
                }
                let s0 = f.row_step[r];
                if s0 == NONE || step_mark[s0] == stamp {
                    continue;
                }
                step_mark[s0] = stamp;
                stack.push((s0, f.l_start[s0]));
                while let Some(top) = stack.len().checked_sub(1) {
                    let (s, ptr) = stack[top];
                    if ptr < f.l_start[s + 1] {
                        stack[top].1 += 1;
                        let r2 = f.l_rows[ptr];
                        if row_mark[r2] != stamp {
                            row_mark[r2] = stamp;
                            touched.push(r2);
                        }
                        let s2 = f.row_step[r2];
                        if s2 != NONE && step_mark[s2] != stamp {
                            step_mark[s2] = stamp;
                            stack.push((s2, f.l_start[s2]));
                        }
                    } else {
                        stack.pop();
                        postorder.push(s);
                    }
                }
            }

            // Numeric: x = L^{-1} b restricted to the reach.
            for (&r, &v) in rows.iter().zip(vals.iter()) {
                x[r] += v;
            }
            for &s in postorder.iter().rev() {
                let xs = x[f.pivot_row[s]];
                if xs != 0.0 {
                    for k in f.l_start[s]..f.l_start[s + 1] {
                        x[f.l_rows[k]] -= f.l_vals[k] * xs;
                    }
                }
            }

            // Pivot choice among unpivoted rows.
            let mut amax = 0.0f64;
            for &r in &touched {
                if f.row_step[r] == NONE {
                    amax = amax.max(x[r].abs());
                }
            }
            if amax <= SINGULAR_TOL {
                singular_positions.push(p);
                for &r in &touched {
                    x[r] = 0.0;
                }
                continue;
            }
            let mut pivot = NONE;
            let mut best_count = usize::MAX;
            let mut best_abs = 0.0;
            for &r in &touched {
                if f.row_step[r] != NONE {
                    continue;
                }
                let a = x[r].abs();
                if a < PIVOT_THRESHOLD * amax {
                    continue;
                }
                let cnt = row_start[r + 1] - row_start[r];
                if cnt < best_count
                    || (cnt == best_count && (a > best_abs || (a == best_abs && r < pivot)))
                {
                    pivot = r;
                    best_count = cnt;
                    best_abs = a;
                }
            }

            let k = f.pivot_row.len();
            let piv = x[pivot];
            for &s in postorder.iter().rev() {
                let v = x[f.pivot_row[s]];
                if v.abs() > DROP_TOL {
                    f.u_steps.push(s);
                    f.u_vals.push(v);
                }
            }
            f.u_start.push(f.u_steps.len());
            f.u_diag.push(piv);
            for &r in &touched {
                if f.row_step[r] == NONE && r != pivot {
                    let l = x[r] / piv;
                    if l.abs() > DROP_TOL {
                        f.l_rows.push(r);
                        f.l_vals.push(l);
                    }
                }
                x[r] = 0.0;
            }
            f.l_start.push(f.l_rows.len());
            f.pivot_row.push(pivot);
            f.row_step[pivot] = k;
            f.col_order.push(p);
        }

        if singular_positions.is_empty() {
            (f, None)
        } else {
            let rows = (0..m).filter(|&r| f.row_step[r] == NONE).collect();
            (
                f,
                Some(Deficiency {
                    positions: singular_positions,
                    rows,
                }),
            )
        }
    }

    pub fn nnz(&self) -> usize {
        self.l_vals.len() + self.u_vals.len() + self.m
    }

    /// Solves `B z = b`. `x` holds `b` by row on entry and `z` by basis
    /// position on exit. `work` must have length `m`.
    pub fn ftran(&self, x: &mut [f64], work: &mut [f64]) {
        let m = self.m;
        for s in 0..m {
            let xs = x[self.pivot_row[s]];
            if xs != 0.0 {
                for k in self.l_start[s]..self.l_start[s + 1] {
                    x[self.l_rows[k]] -= self.l_vals[k] * xs;
                }
            }
        }
        for s in 0..m {
            work[s] = x[self.pivot_row[s]];
        }
        for k in (0..m).rev() {
            let v = work[k] / self.u_diag[k];
            work[k] = v;
            if v != 0.0 {
                for e in self.u_start[k]..self.u_start[k + 1] {
                    work[self.u_steps[e]] -= self.u_vals[e] * v;
                }
            }
        }
        for k in 0..m {
            x[self.col_order[k]] = work[k];
        }
    }

    /// Solves `yᵀ B = cᵀ`. `x` holds `c` by basis position on entry and `y`
    /// by row on exit. `work` must have length `m`.
    pub fn btran(&self, x: &mut [f64], work: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let mut v = x[self.col_order[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                v -= self.u_vals[e] * work[self.u_steps[e]];
            }
            work[k] = v / self.u_diag[k];
        }
        for s in (0..m).rev() {
            let mut v = work[s];
            for e in self.l_start[s]..self.l_start[s + 1] {
                v -= self.l_vals[e] * x[self.l_rows[e]];
            }
            x[self.pivot_row[s]] = v;
        }
    }
}

/// Column order: column singletons peeled repeatedly, then the nucleus by
/// ascending active count.
fn singleton_order(
    m: usize,
    cols: &[ColRef<'_>],
    row_start: &[usize],
    row_pos: &[usize],
) -> Vec<usize> {
    let mut active = vec![0usize; m];
    for (p, (rows, _)) in cols.iter().enumerate() {
        active[p] = rows.len();
    }
    let mut row_done = vec![false; m];
    let mut col_done = vec![false; m];
    let mut order = Vec::with_capacity(m);
    let mut queue: Vec<usize> = (0..m).rev().filter(|&p| active[p] == 1).collect();
    while let Some(p) = queue.pop() {
        if col_done[p] || active[p] != 1 {
            continue;
        }
        let (rows, vals) = cols[p];
        let Some(r) = rows
            .iter()
            .zip(vals.iter())
            .find(|(&r, &v)| !row_done[r] && v.abs() > SINGULAR_TOL)
            .map(|(&r, _)| r)
        else {
            continue;
        };
        col_done[p] = true;
        row_done[r] = true;
        order.push(p);
        for &q in &row_pos[row_start[r]..row_start[r + 1]] {
            if !col_done[q] {
                active[q] -= 1;
                if active[q] == 1 {
                    queue.push(q);
                }
            }
        }
    }
    let mut rest: Vec<usize> = (0..m).filter(|&p| !col_done[p]).collect();
    rest.sort_by_key(|&p| (active[p], p));
    order.extend(rest);
    order
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

/// LU factor plus a product-form eta file of basis changes since the last
/// refactorisation.
#[derive(Debug, Clone, Default)]
pub(crate) struct BasisFactor {
    lu: LuFactor,
    etas: Vec<Eta>,
    work: Vec<f64>,
}

impl BasisFactor {
    pub fn new(lu: LuFactor) -> Self {
        let m = lu.m;
        BasisFactor {
            lu,
            etas: Vec::new(),
            work: vec![0.0; m],
        }
    }

    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// `B z = b`: row-indexed input, position-indexed output.
    pub fn ftran(&mut self, x: &mut [f64]) {
        self.lu.ftran(x, &mut self.work);
        for eta in &self.etas {
            let zr = x[eta.pos] / eta.pivot;
            x[eta.pos] = zr;
            if zr != 0.0 {
                for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                    x[i] -= a * zr;
                }
            }
        }
    }

    /// `yᵀ B = cᵀ`: position-indexed input, row-indexed output.
    pub fn btran(&mut self, x: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut v = x[eta.pos];
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                v -= a * x[i];
            }
            x[eta.pos] = v / eta.pivot;
        }
        self.lu.btran(x, &mut self.work);
    }

    /// Records the replacement of the column at `pos` by a column whose
    /// FTRAN image is `alpha`.
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                idx.push(i);
                val.push(a);
            }
        }
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            idx,
            val,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cols(a: &[Vec<f64>]) -> Vec<(Vec<usize>, Vec<f64>)> {
        let m = a.len();
        (0..m)
            .map(|j| {
                let mut r = Vec::new();
                let mut v = Vec::new();
                for (i, row) in a.iter().enumerate() {
                    if row[j] != 0.0 {
                        r.push(i);
                        v.push(row[j]);
                    }
                }
                (r, v)
            })
            .collect()
    }

    fn matvec(a: &[Vec<f64>], z: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(z).map(|(x, y)| x * y).sum())
            .collect()
    }

    #[test]
    fn ftran_btran_solve_dense_system() {
        let a = vec![
            vec![4.0, 0.0, 1.0, 0.0],
            vec![0.0, 3.0, 0.0, 2.0],
            vec![1.0, 0.0, 5.0, 0.0],
            vec![0.0, 1.0, 0.0, 6.0],
        ];
        let cols = dense_cols(&a);
        let (lu, def) = LuFactor::factorize(4, |p| (&cols[p].0[..], &cols[p].1[..]));
        assert!(def.is_none());
        let mut bf = BasisFactor::new(lu);
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let mut z = b.clone();
        bf.ftran(&mut z);
        let back = matvec(&a, &z);
        for (x, y) in back.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        // yᵀ A = c  <=>  Aᵀ y = c
        let c = vec![1.0, -1.0, 0.5, 2.0];
        let mut y = c.clone();
        bf.btran(&mut y);
        for j in 0..4 {
            let s: f64 = (0..4).map(|i| a[i][j] * y[i]).sum();
            assert!((s - c[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_update_tracks_column_replacement() {
        let mut a = vec![
            vec![2.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 3.0],
        ];
        let cols = dense_cols(&a);
        let (lu, _) = LuFactor::factorize(3, |p| (&cols[p].0[..], &cols[p].1[..]));
        let mut bf = BasisFactor::new(lu);
        let newcol = vec![1.0, 2.0, 1.0];
        let mut alpha = newcol.clone();
        bf.ftran(&mut alpha);
        bf.update(1, &alpha);
        for (i, row) in a.iter_mut().enumerate() {
            row[1] = newcol[i];
        }
        let b = vec![3.0, -1.0, 2.0];
        let mut z = b.clone();
        bf.ftran(&mut z);
        let back = matvec(&a, &z);
        for (x, y) in back.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let mut y = b.clone();
        bf.btran(&mut y);
        for j in 0..3 {
            let s: f64 = (0..3).map(|i| a[i][j] * y[i]).sum();
            assert!((s - b[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_rank_deficiency() {
        let a = vec![
            vec![1.0, 2.0, 0.0],
            vec![2.0, 4.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let cols = dense_cols(&a);
        let (_, def) = LuFactor::factorize(3, |p| (&cols[p].0[..], &cols[p].1[..]));
        let def = def.expect("singular");
        assert_eq!(def.positions.len(), 1);
        assert_eq!(def.rows.len(), 1);
    }

    #[test]
    fn random_sparse_systems_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = rng.gen_range(1..30);
            let mut a = vec![vec![0.0f64; m]; m];
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = rng.gen_range(1.0..5.0);
            }
            for _ in 0..(2 * m) {
                let i = rng.gen_range(0..m);
                let j = rng.gen_range(0..m);
                a[i][j] = rng.gen_range(-1.0..1.0);
            }
            // diagonal dominance keeps it nonsingular
            for i in 0..m {
                let off: f64 = (0..m).filter(|&j| j != i).map(|j| a[i][j].abs()).sum();
                a[i][i] = off + 1.0;
            }
            let cols = dense_cols(&a);
            let (lu, def) = LuFactor::factorize(m, |p| (&cols[p].0[..], &cols[p].1[..]));
            assert!(def.is_none());
            let mut bf = BasisFactor::new(lu);
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let mut z = b.clone();
            bf.ftran(&mut z);
            let back = matvec(&a, &z);
            for (x, y) in back.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
