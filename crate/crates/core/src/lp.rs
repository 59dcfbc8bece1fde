//! Dense tableau simplex for small problems max c·z s.t. A z ≤ b, z ≥ 0
//! with b ≥ 0, so the slack basis is feasible from the start.

const EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub objective: f64,
    pub z: Vec<f64>,
    /// Dual value of each row.
    pub duals: Vec<f64>,
}

/// `a` is row-major m×n. Uses Bland's rule, so degenerate rows (b_i = 0)
/// cannot make it cycle. Returns `None` when the problem is unbounded.
pub(crate) fn solve_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<LpSolution> {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        debug_assert!(b[i] >= 0.0);
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    while let Some(enter) = (0..n + m).find(|&j| t[m][j] < -EPS) {
        let mut leave = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][width - 1] / t[i][enter];
                let better = ratio < best - EPS
                    || (ratio <= best + EPS && leave.is_some_and(|l: usize| basis[i] < basis[l]));
                if leave.is_none() || better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let r = leave?;
        let pivot = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r {
                let f = row[enter];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
        basis[r] = enter;
    }
    let mut z = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            z[bv] = t[i][width - 1];
        }
    }
    let duals = (0..m).map(|i| t[m][n + i]).collect();
    Some(LpSolution { objective: t[m][width - 1], z, duals })
}
