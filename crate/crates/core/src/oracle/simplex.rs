//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Sized for the small LPs that arise when an activation pattern is fixed:
//! a handful of input variables and a few dozen inequality rows.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-12;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

/// `min cᵀx  s.t.  A x ≤ b`, with `x` either free or non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub free: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn free_vars(c: Vec<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        let rows = (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect();
        Self { c, rows, rhs: b.iter().copied().collect(), free: true }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn push_row(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }
}

struct Tableau {
    // rows 0..m are constraints, column `cols` is the rhs
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64], allowed: usize) -> Vec<f64> {
        let mut red: Vec<f64> = cost[..allowed].to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, r) in red.iter_mut().enumerate() {
                    *r -= cb * self.t[i][j];
                }
            }
        }
        red
    }

    /// Runs Bland-rule iterations over columns `0..allowed`; returns false if
    /// the objective is unbounded below.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        loop {
            let red = self.reduced_costs(cost, allowed);
            let Some(enter) = (0..allowed).find(|&j| red[j] < -COST_TOL) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[enter];
                if a > PIVOT_TOL {
                    let ratio = row[self.cols] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    let n = lp.num_vars();
    let m = lp.rows.len();
    // structural columns: x (or x⁺, x⁻), then one slack per row
    let nx = if lp.free { 2 * n } else { n };
    let structural = nx + m;
    let cols = structural + m;

    let mut t = vec![vec![0.0; cols + 1]; m];
    for (i, (row, &b)) in lp.rows.iter().zip(&lp.rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * row[j];
            if lp.free {
                t[i][n + j] = -sign * row[j];
            }
        }
        t[i][nx + i] = sign;
        t[i][structural + i] = 1.0;
        t[i][cols] = sign * b;
    }
    let mut tab = Tableau { t, basis: (structural..cols).collect(), cols };

    let mut phase1 = vec![0.0; cols];
    for c in phase1.iter_mut().skip(structural) {
        *c = 1.0;
    }
    tab.optimize(&phase1, cols);
    let infeas: f64 = tab.basis.iter().zip(&tab.t).filter(|(b, _)| **b >= structural).map(|(_, r)| r[cols]).sum();
    if infeas > FEAS_TOL {
        return LpOutcome::Infeasible;
    }
    // drive remaining artificials out of the basis; rows where that is
    // impossible are redundant and get dropped
    let mut r = 0;
    while r < tab.basis.len() {
        if tab.basis[r] >= structural {
            match (0..structural).find(|&j| tab.t[r][j].abs() > 1e-9) {
                Some(j) => {
                    tab.pivot(r, j);
                    r += 1;
                }
                None => {
                    tab.t.remove(r);
                    tab.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = lp.c[j];
        if lp.free {
            cost[n + j] = -lp.c[j];
        }
    }
    if !tab.optimize(&cost, structural) {
        return LpOutcome::Unbounded;
    }

    let mut y = vec![0.0; cols];
    for (i, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.t[i][cols];
    }
    let x: Vec<f64> = (0..n).map(|j| if lp.free { y[j] - y[n + j] } else { y[j] }).collect();
    let value = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { value, x }
}
