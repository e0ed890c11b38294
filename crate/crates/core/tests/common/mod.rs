//! Shared test oracles, independent of the library's solver internals.

#![allow(dead_code)]

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dual objective W(alpha) = sum(alpha) - 1/2 sum_ij a_i a_j y_i y_j <x_i, x_j>.
pub fn dual_objective(points: &[Vec<f64>], labels: &[f64], alpha: &[f64]) -> f64 {
    let n = points.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * labels[i] * labels[j] * dot(&points[i], &points[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Gauss-Jordan with partial pivoting; None when a pivot degenerates.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|i, j| a[*i][col].abs().total_cmp(&a[*j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Exact maximizer of the soft-margin dual for tiny instances, found by
/// enumerating every lower/upper/free active-set assignment and solving the
/// equality-constrained stationarity system on the free block. The best
/// feasible candidate is the global optimum of the concave dual.
pub fn brute_force_qp(points: &[Vec<f64>], labels: &[f64], c: f64) -> (Vec<f64>, f64) {
    let n = points.len();
    assert!(n <= 6, "oracle is exponential in n");
    let q = |i: usize, j: usize| labels[i] * labels[j] * dot(&points[i], &points[j]);

    let mut best: Option<(Vec<f64>, f64)> = None;
    for assignment in 0..3usize.pow(n as u32) {
        let mut kind = Vec::with_capacity(n);
        let mut rest = assignment;
        for _ in 0..n {
            kind.push(rest % 3); // 0 = lower, 1 = upper, 2 = free
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| kind[i] == 2).collect();
        let mut alpha: Vec<f64> = kind
            .iter()
            .map(|k| match k {
                0 => 0.0,
                1 => c,
                _ => f64::NAN,
            })
            .collect();

        if free.is_empty() {
            let balance: f64 = (0..n).map(|i| labels[i] * alpha[i]).sum();
            if balance.abs() > 1e-9 {
                continue;
            }
        } else {
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut b = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (col, &j) in free.iter().enumerate() {
                    a[r][col] = q(i, j);
                }
                a[r][m] = labels[i];
                a[m][r] = labels[i];
                let bound_term: f64 = (0..n)
                    .filter(|k| kind[*k] == 1)
                    .map(|k| q(i, k) * c)
                    .sum();
                b[r] = 1.0 - bound_term;
            }
            b[m] = -(0..n)
                .filter(|k| kind[*k] == 1)
                .map(|k| labels[k] * c)
                .sum::<f64>();
            let Some(solution) = solve_linear(a, b) else {
                continue;
            };
            if solution[..m].iter().any(|v| *v < -1e-9 || *v > c + 1e-9) {
                continue;
            }
            for (slot, &i) in free.iter().enumerate() {
                alpha[i] = solution[slot].clamp(0.0, c);
            }
        }

        let objective = dual_objective(points, labels, &alpha);
        if best.as_ref().is_none_or(|(_, b)| objective > *b) {
            best = Some((alpha, objective));
        }
    }
    best.expect("the all-zero assignment is always feasible")
}

/// Independent KKT violation m(alpha) - M(alpha) of a candidate dual point.
pub fn kkt_violation(points: &[Vec<f64>], labels: &[f64], alpha: &[f64], c: f64) -> f64 {
    let n = points.len();
    let f: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| alpha[j] * labels[j] * dot(&points[j], &points[i]))
                .sum()
        })
        .collect();
    let bound_tol = 1e-9 * c.max(1.0);
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for i in 0..n {
        let at_lower = alpha[i] <= bound_tol;
        let at_upper = alpha[i] >= c - bound_tol;
        let value = labels[i] - f[i];
        let in_up = (labels[i] > 0.0 && !at_upper) || (labels[i] < 0.0 && !at_lower);
        let in_low = (labels[i] > 0.0 && !at_lower) || (labels[i] < 0.0 && !at_upper);
        if in_up {
            up = up.max(value);
        }
        if in_low {
            low = low.min(value);
        }
    }
    up - low
}
