//! A small dense two-phase simplex, sized for the least-core program.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Ge,
    Eq,
}

/// `max c.z` subject to `rows`, with `z >= 0`.
pub(crate) struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
}

const EPS: f64 = 1e-10;

struct Tableau {
    cells: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    allowed: Vec<bool>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        *self.cells[i].last().expect("rhs column")
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.cells[row][col];
        for v in self.cells[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (i, r) in self.cells.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, &pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost` over the current basis; Bland's rule throughout.
    fn optimize(&mut self, cost: &[f64]) -> Result<f64> {
        let width = cost.len();
        loop {
            let reduced = |j: usize, cells: &[Vec<f64>], basis: &[usize]| -> f64 {
                basis.iter().enumerate().map(|(i, &b)| cost[b] * cells[i][j]).sum::<f64>() - cost[j]
            };
            let entering = (0..width).find(|&j| self.allowed[j] && reduced(j, &self.cells, &self.basis) < -EPS);
            let Some(col) = entering else {
                let value = self.basis.iter().enumerate().map(|(i, &b)| cost[b] * self.rhs(i)).sum();
                return Ok(value);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.cells.len() {
                let a = self.cells[i][col];
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((k, best)) => ratio < best - EPS || (ratio <= best + EPS && self.basis[i] < self.basis[k]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::NoConvergence("linear program is unbounded".into()));
            };
            self.pivot(row, col);
        }
    }
}

/// Returns the optimum and an optimal point.
pub(crate) fn maximize(lp: &LinearProgram) -> Result<(f64, Vec<f64>)> {
    let n = lp.objective.len();
    let m = lp.rows.len();
    // Normalize to nonnegative right-hand sides.
    let rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .rows
        .iter()
        .map(|(a, rel, b)| {
            if *b < 0.0 {
                let flipped = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (a.iter().map(|v| -v).collect(), flipped, -b)
            } else {
                (a.clone(), *rel, *b)
            }
        })
        .collect();
    let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + slacks + artificials;
    let mut cells = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0; m];
    let (mut next_slack, mut next_art) = (n, n + slacks);
    for (i, (a, rel, b)) in rows.iter().enumerate() {
        cells[i][..n].copy_from_slice(a);
        cells[i][width] = *b;
        match rel {
            Relation::Le => {
                cells[i][next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                cells[i][next_slack] = -1.0;
                next_slack += 1;
                cells[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                cells[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }
    let mut tableau = Tableau { cells, basis, allowed: vec![true; width] };

    let phase1: Vec<f64> = (0..width).map(|j| if j >= n + slacks { -1.0 } else { 0.0 }).collect();
    let infeasibility = -tableau.optimize(&phase1)?;
    let scale = rows.iter().map(|r| r.2).fold(1.0, f64::max);
    if infeasibility > 1e-9 * scale {
        return Err(Error::NoConvergence(format!("linear program is infeasible (residual {infeasibility:e})")));
    }
    // Drive zero-level artificials out of the basis where possible.
    for i in 0..m {
        if tableau.basis[i] >= n + slacks {
            if let Some(col) = (0..n + slacks).find(|&j| tableau.cells[i][j].abs() > EPS) {
                tableau.pivot(i, col);
            }
        }
    }
    for j in n + slacks..width {
        tableau.allowed[j] = false;
    }

    let mut phase2 = vec![0.0; width];
    phase2[..n].copy_from_slice(&lp.objective);
    let value = tableau.optimize(&phase2)?;
    let mut z = vec![0.0; n];
    for (i, &b) in tableau.basis.iter().enumerate() {
        if b < n {
            z[b] = tableau.rhs(i);
        }
    }
    Ok((value, z))
}
