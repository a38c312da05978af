//! Dense small-scale linear programming in standard form:
//! maximize c·x subject to Ax = b, x ≥ 0.
//!
//! Two routes: exhaustive basic-feasible-solution enumeration for up to 20
//! variables, and a two-phase dense simplex with Bland's rule beyond that.
//! Optimal-vertex ties break toward the lexicographically smallest support.

use nalgebra::{DMatrix, DVector};

pub const FEAS_TOL: f64 = 1e-9;
/// Constraint residual separating "empty set" from numerical noise.
pub const INFEAS_THRESHOLD: f64 = 1e-7;
pub const BFS_ENUM_LIMIT: usize = 20;

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
        degenerate: bool,
        vertices_checked: usize,
    },
    Infeasible {
        /// minimizer of ‖Ax−b‖ over the nonnegative orthant ∩ {Σx free}
        witness: Vec<f64>,
        residual: f64,
    },
    Unbounded,
}

/// Row-reduce A|b, returning indices of independent rows. Rows that are
/// dependent but inconsistent make the system infeasible outright.
fn independent_rows(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Vec<usize>, f64> {
    let m = a.nrows();
    let n = a.ncols();
    let mut aug = DMatrix::<f64>::zeros(m, n + 1);
    aug.view_mut((0, 0), (m, n)).copy_from(a);
    aug.set_column(n, b);
    let mut rows: Vec<usize> = (0..m).collect();
    let mut kept = Vec::new();
    let mut r = 0usize;
    for col in 0..n {
        // find pivot
        let mut piv = None;
        let mut best = 1e-11;
        for i in r..m {
            if aug[(rows[i], col)].abs() > best {
                best = aug[(rows[i], col)].abs();
                piv = Some(i);
            }
        }
        let Some(p) = piv else { continue };
        rows.swap(r, p);
        kept.push(rows[r]);
        let prow = rows[r];
        for i in (r + 1)..m {
            let f = aug[(rows[i], col)] / aug[(prow, col)];
            if f != 0.0 {
                for j in col..=n {
                    let v = aug[(prow, j)] * f;
                    aug[(rows[i], j)] -= v;
                }
            }
        }
        r += 1;
        if r == m {
            break;
        }
    }
    // leftover rows must be all-zero including the b entry
    for i in r..m {
        let row = rows[i];
        let coef_max = (0..n).map(|j| aug[(row, j)].abs()).fold(0.0, f64::max);
        if coef_max < 1e-10 && aug[(row, n)].abs() > INFEAS_THRESHOLD {
            return Err(aug[(row, n)].abs());
        }
    }
    Ok(kept)
}

fn support_of(x: &[f64]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &v)| v > FEAS_TOL)
        .map(|(i, _)| i)
        .collect()
}

/// Enumerate all bases of the reduced system.
fn solve_by_enumeration(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> LpOutcome {
    let rows = match independent_rows(a, b) {
        Ok(r) => r,
        Err(residual) => {
            return LpOutcome::Infeasible {
                witness: min_residual_point(a, b),
                residual,
            }
        }
    };
    let m = rows.len();
    let n = a.ncols();
    let ar = DMatrix::<f64>::from_fn(m, n, |i, j| a[(rows[i], j)]);
    let br = DVector::<f64>::from_fn(m, |i, _| b[rows[i]]);

    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    let mut degenerate = false;
    let mut checked = 0usize;
    let mut combo: Vec<usize> = (0..m).collect();
    if m == 0 {
        // no constraints: optimum unbounded unless c ≤ 0
        if c.iter().any(|&v| v > 0.0) {
            return LpOutcome::Unbounded;
        }
        return LpOutcome::Optimal {
            x: vec![0.0; n],
            objective: 0.0,
            degenerate: false,
            vertices_checked: 0,
        };
    }
    if m > n {
        return LpOutcome::Infeasible {
            witness: min_residual_point(a, b),
            residual: min_residual_value(a, b),
        };
    }
    loop {
        checked += 1;
        let basis = DMatrix::<f64>::from_fn(m, m, |i, k| ar[(i, combo[k])]);
        if let Some(inv) = basis.clone().try_inverse() {
            let xb = &inv * &br;
            if xb.iter().all(|&v| v >= -FEAS_TOL) {
                let mut x = vec![0.0; n];
                for (k, &j) in combo.iter().enumerate() {
                    x[j] = xb[k].max(0.0);
                }
                // confirm the full system (pruned rows included)
                let resid = (a * DVector::from_vec(x.clone()) - b).amax();
                if resid < 1e-8 {
                    if xb.iter().any(|&v| v.abs() < FEAS_TOL) {
                        degenerate = true;
                    }
                    let obj: f64 = x.iter().zip(c.iter()).map(|(xi, ci)| xi * ci).sum();
                    let supp = support_of(&x);
                    let better = match &best {
                        None => true,
                        Some((bo, _, bsupp)) => {
                            obj > bo + 1e-12 || (obj > bo - 1e-12 && supp < *bsupp)
                        }
                    };
                    if better {
                        best = Some((obj, x, supp));
                    }
                }
            }
        }
        // next combination
        let mut i = m;
        loop {
            if i == 0 {
                match best {
                    Some((objective, x, _)) => {
                        return LpOutcome::Optimal {
                            x,
                            objective,
                            degenerate,
                            vertices_checked: checked,
                        }
                    }
                    None => {
                        return LpOutcome::Infeasible {
                            witness: min_residual_point(a, b),
                            residual: min_residual_value(a, b),
                        }
                    }
                }
            }
            i -= 1;
            combo[i] += 1;
            if combo[i] <= n - (m - i) {
                for k in (i + 1)..m {
                    combo[k] = combo[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Projection of v onto the probability simplex scaled to total mass `s`.
fn project_simplex(v: &[f64], s: f64) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut rho = 0usize;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - s) / (i + 1) as f64;
        if ui - t > 0.0 {
            rho = i + 1;
            theta = t;
        }
    }
    let _ = rho;
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Minimum-residual certificate: projected gradient on ½‖Ax−b‖² over the
/// simplex (our LPs always carry a total-mass row, so the simplex is the
/// natural certificate domain).
fn min_residual_point(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
    let n = a.ncols();
    let mut x = vec![1.0 / n as f64; n];
    let lip = (a.transpose() * a).norm() + 1e-12;
    let step = 1.0 / lip;
    for _ in 0..2000 {
        let xv = DVector::from_vec(x.clone());
        let grad = a.transpose() * (a * &xv - b);
        let y: Vec<f64> = x
            .iter()
            .zip(grad.iter())
            .map(|(&xi, &gi)| xi - step * gi)
            .collect();
        let xn = project_simplex(&y, 1.0);
        let delta: f64 = xn.iter().zip(x.iter()).map(|(a, b)| (a - b).abs()).sum();
        x = xn;
        if delta < 1e-13 {
            break;
        }
    }
    x
}

fn min_residual_value(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let x = min_residual_point(a, b);
    (a * DVector::from_vec(x) - b).norm()
}

/// Two-phase dense simplex with Bland's rule.
fn solve_by_simplex(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> LpOutcome {
    let rows = match independent_rows(a, b) {
        Ok(r) => r,
        Err(residual) => {
            return LpOutcome::Infeasible {
                witness: min_residual_point(a, b),
                residual,
            }
        }
    };
    let m = rows.len();
    let n = a.ncols();
    // sign-normalize so b ≥ 0
    let mut ar = DMatrix::<f64>::from_fn(m, n, |i, j| a[(rows[i], j)]);
    let mut br = DVector::<f64>::from_fn(m, |i, _| b[rows[i]]);
    for i in 0..m {
        if br[i] < 0.0 {
            br[i] = -br[i];
            for j in 0..n {
                ar[(i, j)] = -ar[(i, j)];
            }
        }
    }

    // phase 1: artificials
    let total = n + m;
    let mut tab = DMatrix::<f64>::zeros(m, total);
    tab.view_mut((0, 0), (m, n)).copy_from(&ar);
    for i in 0..m {
        tab[(i, n + i)] = 1.0;
    }
    let mut basis: Vec<usize> = (n..total).collect();
    let mut rhs = br.clone();
    let phase1_cost: Vec<f64> = (0..total)
        .map(|j| if j >= n { -1.0 } else { 0.0 })
        .collect();
    simplex_core(&mut tab, &mut rhs, &mut basis, &phase1_cost, None);
    let p1_obj: f64 = basis
        .iter()
        .zip(rhs.iter())
        .filter(|(&bj, _)| bj >= n)
        .map(|(_, &v)| v)
        .sum();
    if p1_obj > INFEAS_THRESHOLD {
        return LpOutcome::Infeasible {
            witness: min_residual_point(a, b),
            residual: p1_obj,
        };
    }
    // drive leftover artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab[(i, j)].abs() > 1e-9) {
                pivot(&mut tab, &mut rhs, i, j);
                basis[i] = j;
            }
        }
    }
    // phase 2
    let cost: Vec<f64> = (0..total)
        .map(|j| if j < n { c[j] } else { -1e30 })
        .collect();
    let bounded = simplex_core(&mut tab, &mut rhs, &mut basis, &cost, None);
    if !bounded {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    let mut degenerate = false;
    for (i, &bj) in basis.iter().enumerate() {
        if bj < n {
            x[bj] = rhs[i].max(0.0);
            if rhs[i].abs() < FEAS_TOL {
                degenerate = true;
            }
        }
    }
    let objective = x.iter().zip(c.iter()).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal {
        x,
        objective,
        degenerate,
        vertices_checked: 0,
    }
}

/// Maximizing simplex iterations with Bland's anti-cycling rule. Returns
/// false when unbounded.
fn simplex_core(
    tab: &mut DMatrix<f64>,
    rhs: &mut DVector<f64>,
    basis: &mut [usize],
    cost: &[f64],
    iter_cap: Option<usize>,
) -> bool {
    let m = tab.nrows();
    let total = tab.ncols();
    let cap = iter_cap.unwrap_or(20_000);
    for _ in 0..cap {
        // reduced costs: c_j − c_B B⁻¹ a_j (tableau is already B⁻¹A)
        let mut entering = None;
        for j in 0..total {
            if basis.contains(&j) {
                continue;
            }
            let mut red = cost[j];
            for i in 0..m {
                red -= cost[basis[i]] * tab[(i, j)];
            }
            if red > 1e-9 {
                entering = Some(j); // Bland: smallest index
                break;
            }
        }
        let Some(j) = entering else { return true };
        // ratio test, Bland ties by smallest basis index
        let mut leave = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if tab[(i, j)] > 1e-11 {
                let ratio = rhs[i] / tab[(i, j)];
                if ratio < best - 1e-12
                    || (ratio < best + 1e-12
                        && leave.map(|l: usize| basis[i] < basis[l]).unwrap_or(false))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(i) = leave else { return false };
        pivot(tab, rhs, i, j);
        basis[i] = j;
    }
    true
}

fn pivot(tab: &mut DMatrix<f64>, rhs: &mut DVector<f64>, pi: usize, pj: usize) {
    let m = tab.nrows();
    let total = tab.ncols();
    let pv = tab[(pi, pj)];
    for j in 0..total {
        tab[(pi, j)] /= pv;
    }
    rhs[pi] /= pv;
    for i in 0..m {
        if i != pi {
            let f = tab[(i, pj)];
            if f != 0.0 {
                for j in 0..total {
                    let v = tab[(pi, j)] * f;
                    tab[(i, j)] -= v;
                }
                let v = rhs[pi] * f;
                rhs[i] -= v;
            }
        }
    }
}

/// maximize c·x subject to Ax = b, x ≥ 0.
pub fn solve_lp(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> LpOutcome {
    if a.ncols() <= BFS_ENUM_LIMIT {
        solve_by_enumeration(a, b, c)
    } else {
        solve_by_simplex(a, b, c)
    }
}

/// Force the simplex route (used by tests to cross-check the enumerator).
pub fn solve_lp_simplex(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> LpOutcome {
    solve_by_simplex(a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
    ) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
        let m = a.len();
        let n = a[0].len();
        (
            DMatrix::from_fn(m, n, |i, j| a[i][j]),
            DVector::from_vec(b),
            DVector::from_vec(c),
        )
    }

    #[test]
    fn simple_feasible_lp() {
        // max x0 + 2 x1 s.t. x0 + x1 = 1
        let (a, b, c) = lp(vec![vec![1.0, 1.0]], vec![1.0], vec![1.0, 2.0]);
        match solve_lp(&a, &b, &c) {
            LpOutcome::Optimal { x, objective, .. } => {
                assert!((objective - 2.0).abs() < 1e-12);
                assert!((x[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_lp_reports_residual() {
        let (a, b, c) = lp(
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            vec![1.0, 2.0],
            vec![1.0, 0.0],
        );
        match solve_lp(&a, &b, &c) {
            LpOutcome::Infeasible { residual, .. } => assert!(residual > 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tie_breaks_to_lex_smallest_support() {
        // both vertices optimal: max 0 s.t. x0 + x1 = 1
        let (a, b, c) = lp(vec![vec![1.0, 1.0]], vec![1.0], vec![0.0, 0.0]);
        match solve_lp(&a, &b, &c) {
            LpOutcome::Optimal { x, .. } => {
                assert!((x[0] - 1.0).abs() < 1e-12, "{x:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn enumeration_matches_simplex() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let n = 4 + rng.gen_range(0..4);
            let m = 2 + rng.gen_range(0..2);
            let raw = DMatrix::<f64>::from_fn(m, n, |_, _| rng.gen::<f64>());
            // make feasible by construction
            let x0 = DVector::<f64>::from_fn(n, |_, _| rng.gen::<f64>());
            let b = &raw * &x0;
            let c = DVector::<f64>::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
            let e = solve_lp(&raw, &b, &c);
            let s = solve_lp_simplex(&raw, &b, &c);
            match (e, s) {
                (
                    LpOutcome::Optimal { objective: o1, .. },
                    LpOutcome::Optimal { objective: o2, .. },
                ) => {
                    assert!((o1 - o2).abs() < 1e-7, "{o1} vs {o2}");
                }
                (LpOutcome::Unbounded, LpOutcome::Unbounded) => {}
                (e, s) => panic!("{e:?} vs {s:?}"),
            }
        }
    }
}
