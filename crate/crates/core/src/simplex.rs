//! Dense two-phase primal simplex for small equality-form LPs
//!
//! ```text
//! minimize c.x  subject to  A x = b,  x >= 0
//! ```
//!
//! Pivoting follows Bland's rule (lowest-index entering column, lowest-index
//! leaving basic variable on ratio ties), which cannot cycle, so degenerate
//! problems need no perturbation.

/// Pivot and reduced-cost threshold.
const EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        value: f64,
    },
    /// Phase 1 could not drive the artificial variables below the tolerance.
    Infeasible {
        residual: f64,
    },
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

struct Tableau {
    /// Constraint rows; last column is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// Reduced costs; last entry is minus the current objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Columns that may enter the basis.
    allowed: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        *self.rows[i].last().unwrap()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs Bland pivots until optimal. Returns false if unbounded.
    fn optimize(&mut self) -> bool {
        for _ in 0..MAX_PIVOTS {
            let Some(enter) = (0..self.allowed).find(|&j| self.obj[j] < -EPS) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - EPS || (ratio <= lr + EPS && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, enter),
            }
        }
        panic!("simplex exceeded {MAX_PIVOTS} pivots; Bland's rule should prevent cycling");
    }
}

/// Minimizes `c.x` subject to `A x = b`, `x >= 0`. Infeasibility is declared
/// when the phase-1 optimum exceeds `feas_tol`.
pub fn minimize(a: &[Vec<f64>], b: &[f64], c: &[f64], feas_tol: f64) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m, "one right-hand side per row");
    assert!(a.iter().all(|row| row.len() == n), "rows must match the objective length");

    // Phase 1 tableau [A | I | b] with rows sign-flipped so b >= 0.
    let width = n + m + 1;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width];
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = 1.0;
        row[width - 1] = sign * b[i];
        rows.push(row);
    }
    let mut obj = vec![0.0; width];
    for row in &rows {
        for j in 0..n {
            obj[j] -= row[j];
        }
        obj[width - 1] -= row[width - 1];
    }
    let mut t = Tableau { rows, obj, basis: (n..n + m).collect(), allowed: n };
    // Phase 1 is bounded below by 0.
    t.optimize();
    let residual = -t.obj[width - 1];
    if residual > feas_tol {
        return LpOutcome::Infeasible { residual };
    }

    // Drive artificial variables out of the basis; drop rows that are redundant.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| t.rows[i][j].abs() > EPS) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // Phase 2: strip artificial columns and price out the real objective.
    for row in t.rows.iter_mut() {
        let rhs = row[width - 1];
        row.truncate(n);
        row.push(rhs);
    }
    let mut obj = c.to_vec();
    obj.push(0.0);
    for (r, &bv) in t.basis.iter().enumerate() {
        let f = obj[bv];
        if f != 0.0 {
            for (v, p) in obj.iter_mut().zip(&t.rows[r]) {
                *v -= f * p;
            }
        }
    }
    t.obj = obj;
    if !t.optimize() {
        return LpOutcome::Unbounded;
    }

    let mut x = vec![0.0; n];
    for (r, &bv) in t.basis.iter().enumerate() {
        x[bv] = t.rhs(r).max(0.0);
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}

/// Maximizes `c.x` subject to `A x = b`, `x >= 0`.
pub fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64], feas_tol: f64) -> LpOutcome {
    let neg: Vec<f64> = c.iter().map(|v| -v).collect();
    match minimize(a, b, &neg, feas_tol) {
        LpOutcome::Optimal { x, value } => LpOutcome::Optimal { x, value: -value },
        other => other,
    }
}
