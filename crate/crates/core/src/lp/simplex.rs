//! Dense two-phase primal simplex with Bland's rule, for small
//! `min c'x  s.t.  Ax >= b, x >= 0` problems with `b >= 0`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SimplexError {
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Row-major `>=` system. All rhs values must be nonnegative.
pub(crate) struct DenseGeLp {
    pub costs: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

pub(crate) fn solve(lp: &DenseGeLp, tol: f64) -> Result<(Vec<f64>, f64), SimplexError> {
    let n = lp.costs.len();
    let m = lp.rows.len();
    debug_assert!(lp.rhs.iter().all(|&b| b >= 0.0));

    // Columns: n structural, m surplus, m artificial. Last column is rhs.
    let cols = n + 2 * m;
    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        let mut t = vec![0.0; cols + 1];
        t[..n].copy_from_slice(row);
        t[n + i] = -1.0; // surplus: a'x - s = b
        t[n + m + i] = 1.0; // artificial
        t[cols] = lp.rhs[i];
        tab.push(t);
    }
    let mut basis: Vec<usize> = (0..m).map(|i| n + m + i).collect();

    // Phase 1: minimize the artificial sum. Reduced costs start as
    // c1 - sum of rows (artificials are basic with cost 1).
    let mut cost_row = vec![0.0; cols + 1];
    for j in n + m..cols {
        cost_row[j] = 1.0;
    }
    for row in &tab {
        for (c, r) in cost_row.iter_mut().zip(row.iter()) {
            *c -= r;
        }
        cost_row[cols] -= row[cols];
    }
    let cap = 50 * (m + cols);
    pivot_to_optimal(&mut tab, &mut cost_row, &mut basis, cols, tol, cap)?;
    let phase1: f64 = basis
        .iter()
        .zip(tab.iter())
        .filter(|(&b, _)| b >= n + m)
        .map(|(_, row)| row[cols])
        .sum();
    if phase1 > 1e-7_f64.max(tol) {
        return Err(SimplexError::Infeasible);
    }

    // Drive leftover artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < tab.len() {
        if basis[i] >= n + m {
            if let Some(j) = (0..n + m).find(|&j| tab[i][j].abs() > tol) {
                pivot(&mut tab, &mut cost_row, &mut basis, i, j, cols);
            } else {
                tab.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }

    // Phase 2 over structural + surplus columns only.
    let cols2 = n + m;
    for row in &mut tab {
        row.drain(cols2..cols);
    }
    cost_row = vec![0.0; cols2 + 1];
    cost_row[..n].copy_from_slice(&lp.costs);
    for (row, &b) in tab.iter().zip(basis.iter()) {
        let cb = if b < n { lp.costs[b] } else { 0.0 };
        if cb != 0.0 {
            for (c, r) in cost_row.iter_mut().zip(row.iter()) {
                *c -= cb * r;
            }
        }
    }
    pivot_to_optimal(&mut tab, &mut cost_row, &mut basis, cols2, tol, cap)?;

    let mut x = vec![0.0; n];
    for (row, &b) in tab.iter().zip(basis.iter()) {
        if b < n {
            x[b] = row[cols2].max(0.0);
        }
    }
    let objective = lp.costs.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok((x, objective))
}

/// Bland's rule: entering = lowest column with negative reduced cost,
/// leaving = among minimal ratios the row whose basic variable has the
/// lowest index.
fn pivot_to_optimal(
    tab: &mut [Vec<f64>],
    cost_row: &mut [f64],
    basis: &mut [usize],
    cols: usize,
    tol: f64,
    cap: usize,
) -> Result<(), SimplexError> {
    for _ in 0..cap {
        let entering = match (0..cols).find(|&j| cost_row[j] < -tol) {
            Some(j) => j,
            None => return Ok(()),
        };
        let mut leaving: Option<(usize, f64)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[entering] > tol {
                let ratio = row[cols] / row[entering];
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12
                            || ((ratio - lr).abs() <= 1e-12 && basis[i] < basis[li])
                        {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let (row_idx, _) = leaving.ok_or(SimplexError::Unbounded)?;
        pivot(tab, cost_row, basis, row_idx, entering, cols);
    }
    Err(SimplexError::IterationLimit)
}

fn pivot(
    tab: &mut [Vec<f64>],
    cost_row: &mut [f64],
    basis: &mut [usize],
    row_idx: usize,
    col: usize,
    cols: usize,
) {
    let p = tab[row_idx][col];
    for v in tab[row_idx].iter_mut() {
        *v /= p;
    }
    tab[row_idx][col] = 1.0;
    for i in 0..tab.len() {
        if i != row_idx {
            let factor = tab[i][col];
            if factor != 0.0 {
                for j in 0..=cols {
                    tab[i][j] -= factor * tab[row_idx][j];
                }
                tab[i][col] = 0.0;
            }
        }
    }
    let factor = cost_row[col];
    if factor != 0.0 {
        for j in 0..=cols {
            cost_row[j] -= factor * tab[row_idx][j];
        }
        cost_row[col] = 0.0;
    }
    basis[row_idx] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_variable() {
        // min x s.t. x >= 1, x >= eps
        let lp = DenseGeLp {
            costs: vec![1.0],
            rows: vec![vec![1.0], vec![1.0]],
            rhs: vec![1.0, 1e-5],
        };
        let (x, obj) = solve(&lp, 1e-9).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert!((obj - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_variable_coverage_shape() {
        // min 0.5a + 0.5b s.t. 0.5a >= 1, 0.5a + 0.5b >= 1, a >= eps, b >= eps
        let e = 1e-5;
        let lp = DenseGeLp {
            costs: vec![0.5, 0.5],
            rows: vec![
                vec![0.5, 0.0],
                vec![0.5, 0.5],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
            ],
            rhs: vec![1.0, 1.0, e, e],
        };
        let (x, obj) = solve(&lp, 1e-9).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9);
        assert!((x[1] - e).abs() < 1e-9);
        assert!((obj - (1.0 + e / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        // 0*x >= 1 has no solution: phase 1 keeps the artificial basic.
        let lp = DenseGeLp {
            costs: vec![0.0, 0.0],
            rows: vec![vec![0.0, 0.0]],
            rhs: vec![1.0],
        };
        assert_eq!(solve(&lp, 1e-9).unwrap_err(), SimplexError::Infeasible);

        // x <= 1 (as -x + s... not expressible): instead cross constraints
        // x - y >= 1 and y - x >= 0 force 0 >= 1.
        let lp = DenseGeLp {
            costs: vec![1.0, 1.0],
            rows: vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
            rhs: vec![1.0, 0.0],
        };
        assert_eq!(solve(&lp, 1e-9).unwrap_err(), SimplexError::Infeasible);
    }

    #[test]
    fn degenerate_ties_terminate() {
        // Heavily degenerate rows that force repeated zero-ratio pivots.
        let lp = DenseGeLp {
            costs: vec![1.0, 1.0, 1.0],
            rows: vec![
                vec![1.0, 1.0, 0.0],
                vec![1.0, 1.0, 0.0],
                vec![0.0, 1.0, 1.0],
                vec![1.0, 0.0, 1.0],
            ],
            rhs: vec![1.0, 1.0, 1.0, 1.0],
        };
        let (x, obj) = solve(&lp, 1e-9).unwrap();
        assert!(obj <= 1.5 + 1e-9, "obj={obj} x={x:?}");
        for (row, rhs) in [
            (vec![1.0, 1.0, 0.0], 1.0),
            (vec![0.0, 1.0, 1.0], 1.0),
            (vec![1.0, 0.0, 1.0], 1.0),
        ] {
            let lhs: f64 = row.iter().zip(&x).map(|(a, v)| a * v).sum();
            assert!(lhs >= rhs - 1e-9);
        }
    }
}
