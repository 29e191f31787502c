//! Dense two-phase tableau simplex with Bland's rule. Small and slow, but it
//! has no dependencies on the capacity machinery it is used to check.

const EPS: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Ge,
    #[cfg_attr(not(test), allow(dead_code))]
    Eq,
}

#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, PartialEq)]
enum ColumnKind {
    Original,
    Slack,
    Artificial,
}

struct Tableau {
    /// `rows × (columns + 1)`, right-hand side in the last column
    cells: Vec<Vec<f64>>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
}

impl Tableau {
    fn columns(&self) -> usize {
        self.kinds.len()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.columns() + 1;
        let p = self.cells[row][col];
        for v in self.cells[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (r, cells) in self.cells.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = cells[col];
            if factor.abs() > 0.0 {
                for c in 0..width {
                    cells[c] -= factor * pivot_row[c];
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost · x` from the current basic feasible solution.
    /// Returns `false` if the objective is unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: impl Fn(usize) -> bool) -> bool {
        let n = self.columns();
        loop {
            // reduced cost c_j - c_B B^{-1} A_j
            let entering = (0..n).filter(|&j| allowed(j)).find(|&j| {
                let z: f64 = self.basis.iter().enumerate().map(|(r, &b)| cost[b] * self.cells[r][j]).sum();
                cost[j] - z > EPS
            });
            let Some(col) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.cells.len() {
                let a = self.cells[r][col];
                if a > EPS {
                    let ratio = self.cells[r][n] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - EPS || (ratio <= lratio + EPS && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        let n = self.columns();
        self.basis.iter().enumerate().map(|(r, &b)| cost[b] * self.cells[r][n]).sum()
    }
}

/// Maximizes `objective · x` subject to `rows` and `x ≥ 0`.
pub(crate) fn maximize(objective: &[f64], rows: &[Row]) -> LpOutcome {
    let nv = objective.len();
    let m = rows.len();

    let mut kinds = vec![ColumnKind::Original; nv];
    // (row sign, slack column, artificial column)
    let mut layout = Vec::with_capacity(m);
    for row in rows {
        let flip = row.rhs < 0.0;
        let relation = match (row.relation, flip) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => r,
        };
        let slack = match relation {
            Relation::Le | Relation::Ge => {
                kinds.push(ColumnKind::Slack);
                Some(kinds.len() - 1)
            }
            Relation::Eq => None,
        };
        let artificial = match relation {
            Relation::Le => None,
            Relation::Ge | Relation::Eq => {
                kinds.push(ColumnKind::Artificial);
                Some(kinds.len() - 1)
            }
        };
        layout.push((if flip { -1.0 } else { 1.0 }, relation, slack, artificial));
    }
    let n = kinds.len();

    let mut cells = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for (row, &(sign, relation, slack, artificial)) in rows.iter().zip(&layout) {
        let mut cells_row = vec![0.0; n + 1];
        for (j, &a) in row.coefficients.iter().enumerate() {
            cells_row[j] = sign * a;
        }
        cells_row[n] = sign * row.rhs;
        if let Some(s) = slack {
            cells_row[s] = if relation == Relation::Le { 1.0 } else { -1.0 };
        }
        if let Some(a) = artificial {
            cells_row[a] = 1.0;
            basis.push(a);
        } else {
            basis.push(slack.expect("≤ rows carry a slack"));
        }
        cells.push(cells_row);
    }
    let mut t = Tableau { cells, basis, kinds };

    // phase I: drive the artificials to zero
    let phase_one: Vec<f64> = t.kinds.iter().map(|k| if *k == ColumnKind::Artificial { -1.0 } else { 0.0 }).collect();
    t.optimize(&phase_one, |_| true);
    if t.objective(&phase_one) < -1e-9 {
        return LpOutcome::Infeasible;
    }
    // pivot remaining zero-level artificials out of the basis, dropping redundant rows
    let mut r = 0;
    while r < t.cells.len() {
        if t.kinds[t.basis[r]] == ColumnKind::Artificial {
            match (0..n).find(|&j| t.kinds[j] != ColumnKind::Artificial && t.cells[r][j].abs() > 1e-9) {
                Some(col) => t.pivot(r, col),
                None => {
                    t.cells.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // phase II
    let mut cost = vec![0.0; n];
    cost[..nv].copy_from_slice(objective);
    let kinds = t.kinds.clone();
    if !t.optimize(&cost, |j| kinds[j] != ColumnKind::Artificial) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; nv];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < nv {
            x[b] = t.cells[r][n];
        }
    }
    LpOutcome::Optimal { value: t.objective(&cost), x }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(c: &[f64], relation: Relation, rhs: f64) -> Row {
        Row { coefficients: c.to_vec(), relation, rhs }
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6)
        let out = maximize(
            &[3.0, 5.0],
            &[
                row(&[1.0, 0.0], Relation::Le, 4.0),
                row(&[0.0, 2.0], Relation::Le, 12.0),
                row(&[3.0, 2.0], Relation::Le, 18.0),
            ],
        );
        match out {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge_rows() {
        // max x - y, x + y = 1, y ≥ 0.25 → 0.5
        let out = maximize(&[1.0, -1.0], &[row(&[1.0, 1.0], Relation::Eq, 1.0), row(&[0.0, 1.0], Relation::Ge, 0.25)]);
        assert!(matches!(out, LpOutcome::Optimal { value, .. } if (value - 0.5).abs() < 1e-9));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let out = maximize(&[1.0], &[row(&[1.0], Relation::Le, 1.0), row(&[1.0], Relation::Ge, 2.0)]);
        assert_eq!(out, LpOutcome::Infeasible);
        let out = maximize(&[1.0, 0.0], &[row(&[0.0, 1.0], Relation::Le, 1.0)]);
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_is_flipped() {
        // max -x, -x ≤ -3 → -3
        let out = maximize(&[-1.0], &[row(&[-1.0], Relation::Le, -3.0)]);
        assert!(matches!(out, LpOutcome::Optimal { value, .. } if (value + 3.0).abs() < 1e-9));
    }
}
