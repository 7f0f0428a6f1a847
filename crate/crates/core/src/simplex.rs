//! A small dense two-phase simplex solver for the mechanism LPs.
//!
//! Problems here are tiny (tens of variables), so a full-tableau method
//! with Bland's rule is plenty. The solver returns the optimal point
//! together with a dual certificate: the dual vector recovered from the
//! optimal basis, the worst dual-feasibility violation, and the
//! primal-dual objective gap. Callers treat a solution as certified only
//! when both residuals are below their tolerance.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("problem is infeasible (phase-1 optimum {0})")]
    Infeasible(f64),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("pivot limit exceeded")]
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

/// `minimize c.x  subject to  a_i . x (rel_i) b_i,  x >= 0`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Rel, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Optimal values of the original variables.
    pub x: Vec<f64>,
    /// Optimal objective value.
    pub value: f64,
    /// Dual vector (one entry per input row, in input order and with the
    /// sign convention of the standardized `A x = b` system).
    pub dual: Vec<f64>,
    /// `dual . b` at the optimum; equals `value` up to roundoff.
    pub dual_objective: f64,
    /// Worst violation of the dual feasibility conditions.
    pub max_dual_infeasibility: f64,
}

impl LpSolution {
    pub fn certificate_gap(&self) -> f64 {
        (self.value - self.dual_objective).abs().max(self.max_dual_infeasibility)
    }
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const MAX_PIVOTS: usize = 50_000;

pub fn solve(p: &LpProblem) -> Result<LpSolution, LpError> {
    let n = p.objective.len();
    let m = p.rows.len();

    // Standard form: A x = b with b >= 0, x >= 0, slack then artificial
    // columns appended after the original variables.
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut b: Vec<f64> = Vec::with_capacity(m);
    let mut rels: Vec<Rel> = Vec::with_capacity(m);
    let mut flipped = vec![false; m];
    for (i, (coeffs, rel, rhs)) in p.rows.iter().enumerate() {
        assert_eq!(coeffs.len(), n, "row {i} arity");
        let (mut row, mut rel, mut rhs) = (coeffs.clone(), *rel, *rhs);
        if rhs < 0.0 {
            for v in &mut row {
                *v = -*v;
            }
            rhs = -rhs;
            rel = match rel {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
            flipped[i] = true;
        }
        a.push(row);
        b.push(rhs);
        rels.push(rel);
    }

    let mut cols = n;
    let mut slack_col = vec![None; m];
    for (i, rel) in rels.iter().enumerate() {
        if *rel != Rel::Eq {
            slack_col[i] = Some(cols);
            cols += 1;
        }
    }
    let mut artificial_col = vec![None; m];
    for (i, rel) in rels.iter().enumerate() {
        if *rel != Rel::Le {
            artificial_col[i] = Some(cols);
            cols += 1;
        }
    }
    let mut tab: Vec<Vec<f64>> = (0..m).map(|i| {
        let mut row = vec![0.0; cols + 1];
        row[..n].copy_from_slice(&a[i]);
        if let Some(s) = slack_col[i] {
            row[s] = if rels[i] == Rel::Le { 1.0 } else { -1.0 };
        }
        if let Some(t) = artificial_col[i] {
            row[t] = 1.0;
        }
        row[cols] = b[i];
        row
    }).collect();
    let mut basis: Vec<usize> = (0..m)
        .map(|i| artificial_col[i].or(slack_col[i]).expect("every row has a basic column"))
        .collect();

    let n_artificial = artificial_col.iter().flatten().count();
    if n_artificial > 0 {
        // Phase 1: minimize the sum of artificials.
        let mut cost1 = vec![0.0; cols];
        for t in artificial_col.iter().flatten() {
            cost1[*t] = 1.0;
        }
        let obj1 = run_simplex(&mut tab, &mut basis, &cost1, cols)?;
        if obj1 > FEAS_TOL {
            return Err(LpError::Infeasible(obj1));
        }
        // Pivot remaining basic artificials out on any eligible
        // non-artificial column (original or slack).
        let first_artificial = artificial_col.iter().flatten().min().cloned().unwrap_or(cols);
        for i in 0..m {
            if artificial_col.contains(&Some(basis[i])) {
                if let Some(j) =
                    (0..first_artificial).find(|&j| tab[i][j].abs() > PIVOT_TOL)
                {
                    pivot(&mut tab, &mut basis, i, j);
                }
                // A row still basic in an artificial is redundant; its
                // RHS is ~0 and it can stay.
            }
        }
    }

    // Phase 2: the real objective over original + slack columns.
    let mut cost2 = vec![0.0; cols];
    cost2[..n].copy_from_slice(&p.objective);
    let artificial_set: Vec<usize> = artificial_col.iter().flatten().cloned().collect();
    let value = run_simplex_excluding(&mut tab, &mut basis, &cost2, cols, &artificial_set)?;

    let mut x = vec![0.0; n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = tab[i][cols];
        }
    }

    // Dual recovery: solve B^T y = c_B on the standardized system.
    let bt: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            (0..m)
                .map(|i| {
                    let j = basis[i];
                    // column j of standardized A, entry r
                    if j < n {
                        a[r][j]
                    } else if slack_col[r] == Some(j) {
                        if rels[r] == Rel::Le {
                            1.0
                        } else {
                            -1.0
                        }
                    } else if artificial_col[r] == Some(j) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    // rows of the system: for each basis position i: sum_r y_r A[r][basis_i] = c_basis_i
    let mut sys: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row: Vec<f64> = (0..m).map(|r| bt[r][i]).collect();
            row.push(*cost2.get(basis[i]).unwrap_or(&0.0));
            row
        })
        .collect();
    let y = gauss_solve(&mut sys);
    let (dual, dual_objective, max_dual_infeasibility) = match y {
        Some(y) => {
            let dual_obj: f64 = y.iter().zip(&b).map(|(yi, bi)| yi * bi).sum();
            // dual feasibility: c_j - y.A_j >= -tol for all structural and
            // slack columns (slack columns encode the sign constraints).
            let mut worst = 0.0f64;
            for j in 0..n {
                let ya: f64 = (0..m).map(|r| y[r] * a[r][j]).sum();
                worst = worst.max(ya - p.objective[j]);
            }
            for (r, sc) in slack_col.iter().enumerate() {
                if sc.is_some() {
                    let sign = if rels[r] == Rel::Le { 1.0 } else { -1.0 };
                    worst = worst.max(sign * y[r]);
                }
            }
            // report duals in input-row order, undoing RHS flips
            let mut d = y;
            for (i, f) in flipped.iter().enumerate() {
                if *f {
                    d[i] = -d[i];
                }
            }
            (d, dual_obj, worst)
        }
        None => (vec![f64::NAN; m], f64::NAN, f64::INFINITY),
    };

    Ok(LpSolution { x, value, dual, dual_objective, max_dual_infeasibility })
}

fn run_simplex(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    cols: usize,
) -> Result<f64, LpError> {
    run_simplex_excluding(tab, basis, cost, cols, &[])
}

fn run_simplex_excluding(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    cols: usize,
    banned: &[usize],
) -> Result<f64, LpError> {
    let m = tab.len();
    for _ in 0..MAX_PIVOTS {
        // reduced costs: z_j = c_j - sum_i c_B[i] * tab[i][j]
        let cb: Vec<f64> = basis.iter().map(|&j| cost[j]).collect();
        let mut entering = None;
        for j in 0..cols {
            if banned.contains(&j) || basis.contains(&j) {
                continue;
            }
            let z: f64 = cost[j] - (0..m).map(|i| cb[i] * tab[i][j]).sum::<f64>();
            if z < -PIVOT_TOL {
                entering = Some(j); // Bland: first improving index
                break;
            }
        }
        let Some(j) = entering else {
            let obj: f64 = (0..m).map(|i| cb[i] * tab[i][cols]).sum();
            return Ok(obj);
        };
        // ratio test, Bland tie-break on the leaving variable index
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if tab[i][j] > PIVOT_TOL {
                let ratio = tab[i][cols] / tab[i][j];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12
                            || ((ratio - lr).abs() <= 1e-12 && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, _)) = leave else {
            return Err(LpError::Unbounded);
        };
        pivot(tab, basis, i, j);
    }
    Err(LpError::Stalled)
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let m = tab.len();
    let cols = tab[0].len();
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    for i in 0..m {
        if i != row {
            let f = tab[i][col];
            if f != 0.0 {
                for c in 0..cols {
                    tab[i][c] -= f * tab[row][c];
                }
            }
        }
    }
    basis[row] = col;
}

/// Gaussian elimination with partial pivoting on an augmented system.
fn gauss_solve(sys: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let m = sys.len();
    for k in 0..m {
        let piv = (k..m).max_by(|&a, &b| {
            sys[a][k].abs().partial_cmp(&sys[b][k].abs()).unwrap()
        })?;
        if sys[piv][k].abs() < 1e-12 {
            return None;
        }
        sys.swap(k, piv);
        for i in k + 1..m {
            let f = sys[i][k] / sys[k][k];
            for c in k..=m {
                sys[i][c] -= f * sys[k][c];
            }
        }
    }
    let mut y = vec![0.0; m];
    for k in (0..m).rev() {
        let mut acc = sys[k][m];
        for c in k + 1..m {
            acc -= sys[k][c] * y[c];
        }
        y[k] = acc / sys[k][k];
    }
    Some(y)
}
