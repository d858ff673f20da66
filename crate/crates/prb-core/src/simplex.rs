//! Dense two-phase simplex for the small guessing-bound linear programs.
//!
//! Problems here have at most a few hundred variables and ~15 rows, so a
//! plain dense tableau with Bland's rule is enough. No external solver.

use crate::error::{Error, Result};

const TOL: f64 = 1e-11;
const MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per constraint row.
    pub dual: Vec<f64>,
    /// |primal objective - dual objective| at termination.
    pub gap: f64,
    pub iterations: usize,
}

/// Maximize `c . x` subject to the constraints and `x >= 0`.
/// Right-hand sides must be nonnegative.
pub fn maximize(c: &[f64], constraints: &[Constraint]) -> Result<LpSolution> {
    let n = c.len();
    let m = constraints.len();
    for row in constraints {
        if row.coeffs.len() != n {
            return Err(Error::Lp("constraint width mismatch".into()));
        }
        if row.rhs < 0.0 {
            return Err(Error::Lp("negative right-hand side".into()));
        }
    }

    let n_slack = constraints.iter().filter(|r| r.cmp == Cmp::Le).count();
    let n_art = m - n_slack;
    let ncols = n + n_slack + n_art;

    // Tableau: m rows of [coeffs | slack | artificial | rhs].
    let mut tab = vec![vec![0.0; ncols + 1]; m];
    let mut basis = vec![0usize; m];
    // Column that certifies row i's dual multiplier (slack or artificial).
    let mut cert_col = vec![0usize; m];
    let mut slack_at = n;
    let mut art_at = n + n_slack;
    for (i, row) in constraints.iter().enumerate() {
        tab[i][..n].copy_from_slice(&row.coeffs);
        tab[i][ncols] = row.rhs;
        match row.cmp {
            Cmp::Le => {
                tab[i][slack_at] = 1.0;
                basis[i] = slack_at;
                cert_col[i] = slack_at;
                slack_at += 1;
            }
            Cmp::Eq => {
                tab[i][art_at] = 1.0;
                basis[i] = art_at;
                cert_col[i] = art_at;
                art_at += 1;
            }
        }
    }
    let art_range = (n + n_slack)..ncols;

    let mut iterations = 0usize;

    // Phase 1: maximize -(sum of artificials).
    if n_art > 0 {
        let mut cost1 = vec![0.0; ncols];
        for j in art_range.clone() {
            cost1[j] = -1.0;
        }
        let feas = run_phase(&mut tab, &mut basis, &cost1, None, &mut iterations)?;
        if feas < -1e-8 {
            return Err(Error::Lp(format!("infeasible (phase-1 residual {feas:e})")));
        }
        // Pivot artificials out of the basis where possible.
        for i in 0..m {
            if art_range.contains(&basis[i]) {
                if let Some(j) = (0..n + n_slack).find(|&j| tab[i][j].abs() > TOL) {
                    pivot(&mut tab, &mut basis, i, j);
                }
            }
        }
    }

    // Phase 2: the real objective, artificial columns barred.
    let mut cost2 = vec![0.0; ncols];
    cost2[..n].copy_from_slice(c);
    let barred: Vec<usize> = art_range.clone().collect();
    let objective = run_phase(&mut tab, &mut basis, &cost2, Some(&barred), &mut iterations)?;

    let mut x = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = tab[i][ncols];
        }
    }
    // Reduced costs of the slack/artificial columns give the duals.
    let red = reduced_costs(&tab, &basis, &cost2);
    let dual: Vec<f64> = (0..m).map(|i| -red[cert_col[i]]).collect();
    let dual_obj: f64 = dual
        .iter()
        .zip(constraints)
        .map(|(y, row)| y * row.rhs)
        .sum();
    Ok(LpSolution {
        x,
        objective,
        gap: (objective - dual_obj).abs(),
        dual,
        iterations,
    })
}

fn reduced_costs(tab: &[Vec<f64>], basis: &[usize], cost: &[f64]) -> Vec<f64> {
    let ncols = cost.len();
    let mut red = cost.to_vec();
    for (i, &b) in basis.iter().enumerate() {
        let cb = cost[b];
        if cb != 0.0 {
            for j in 0..ncols {
                red[j] -= cb * tab[i][j];
            }
        }
    }
    red
}

fn run_phase(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    barred: Option<&[usize]>,
    iterations: &mut usize,
) -> Result<f64> {
    let ncols = cost.len();
    let rhs = tab[0].len() - 1;
    loop {
        *iterations += 1;
        if *iterations > MAX_ITER {
            return Err(Error::Lp("iteration limit reached".into()));
        }
        let red = reduced_costs(tab, basis, cost);
        // Bland: smallest improving column index.
        let entering = (0..ncols)
            .filter(|j| barred.map_or(true, |b| !b.contains(j)))
            .find(|&j| red[j] > TOL);
        let Some(entering) = entering else {
            let obj: f64 = basis
                .iter()
                .enumerate()
                .map(|(i, &b)| cost[b] * tab[i][rhs])
                .sum();
            return Ok(obj);
        };
        // Ratio test, ties broken by smallest basic variable index.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..tab.len() {
            let a = tab[i][entering];
            if a > TOL {
                let ratio = tab[i][rhs] / a;
                let better = match leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - TOL || (ratio < lr + TOL && basis[i] < basis[li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((leave, _)) = leave else {
            return Err(Error::Lp("unbounded objective".into()));
        };
        pivot(tab, basis, leave, entering);
    }
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    for i in 0..tab.len() {
        if i != row {
            let f = tab[i][col];
            if f != 0.0 {
                for j in 0..tab[i].len() {
                    tab[i][j] -= f * tab[row][j];
                }
            }
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(coeffs: Vec<f64>, rhs: f64) -> Constraint {
        Constraint { coeffs, cmp: Cmp::Le, rhs }
    }

    fn eq(coeffs: Vec<f64>, rhs: f64) -> Constraint {
        Constraint { coeffs, cmp: Cmp::Eq, rhs }
    }

    #[test]
    fn textbook_max() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
        let sol = maximize(
            &[3.0, 5.0],
            &[
                le(vec![1.0, 0.0], 4.0),
                le(vec![0.0, 2.0], 12.0),
                le(vec![3.0, 2.0], 18.0),
            ],
        )
        .unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9);
        assert!((sol.x[1] - 6.0).abs() < 1e-9);
        assert!(sol.gap < 1e-9);
    }

    #[test]
    fn equality_constraint() {
        // max x + 2y, x + y = 1, y <= 0.4 -> x = 0.6, y = 0.4, obj 1.4.
        let sol = maximize(
            &[1.0, 2.0],
            &[eq(vec![1.0, 1.0], 1.0), le(vec![0.0, 1.0], 0.4)],
        )
        .unwrap();
        assert!((sol.objective - 1.4).abs() < 1e-9);
        assert!(sol.gap < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let r = maximize(&[1.0], &[eq(vec![1.0], 2.0), le(vec![1.0], 1.0)]);
        assert!(matches!(r, Err(Error::Lp(_))));
    }

    #[test]
    fn unbounded_detected() {
        let r = maximize(&[1.0, 0.0], &[le(vec![0.0, 1.0], 1.0)]);
        assert!(matches!(r, Err(Error::Lp(_))));
    }

    #[test]
    fn duals_satisfy_strong_duality() {
        let sol = maximize(
            &[2.0, 3.0, 1.0],
            &[
                le(vec![1.0, 1.0, 1.0], 10.0),
                le(vec![2.0, 1.0, 0.0], 8.0),
                eq(vec![0.0, 1.0, 1.0], 4.0),
            ],
        )
        .unwrap();
        assert!(sol.gap < 1e-9);
        // Dual multipliers of <= rows are nonnegative.
        assert!(sol.dual[0] >= -1e-9 && sol.dual[1] >= -1e-9);
    }

    #[test]
    fn matches_vertex_enumeration_random() {
        use rand::{Rng, SeedableRng};
        // 2-variable problems against a dense grid search.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..25 {
            let c = [rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0)];
            let rows: Vec<Constraint> = (0..3)
                .map(|_| {
                    le(
                        vec![rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0)],
                        rng.gen_range(0.5..3.0),
                    )
                })
                .collect();
            let sol = maximize(&c, &rows).unwrap();
            let mut best = 0.0f64;
            let steps = 400;
            for i in 0..=steps {
                for j in 0..=steps {
                    let x = 5.0 * i as f64 / steps as f64;
                    let y = 5.0 * j as f64 / steps as f64;
                    if rows
                        .iter()
                        .all(|r| r.coeffs[0] * x + r.coeffs[1] * y <= r.rhs + 1e-9)
                    {
                        best = best.max(c[0] * x + c[1] * y);
                    }
                }
            }
            assert!(sol.objective >= best - 2e-2);
            assert!(sol.gap < 1e-8);
        }
    }
}
