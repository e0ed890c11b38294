//! SMO solver for the soft-margin SVM dual.
//!
//! Solves  maximize  sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j <x_i, x_j>
//!         subject to  0 <= alpha_i <= C,  sum_i alpha_i y_i = 0
//!
//! by repeatedly optimizing the maximal violating pair of dual coefficients
//! exactly, until the KKT violation m(alpha) - M(alpha) drops below the
//! termination tolerance.

use crate::error::{Error, Result};
use crate::matrix::dot;

/// Pairs with squared distance below this are treated as having a flat
/// subproblem; the step then runs to a box bound.
const TAU: f64 = 1e-12;

/// Steps smaller than this cannot make progress in f64; stopping earlier
/// than the tolerance is reported as non-convergence, not hidden.
const MIN_STEP: f64 = 1e-16;

/// Gram matrices up to this many points are precomputed.
const DENSE_LIMIT: usize = 2048;

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective at the solution (maximization form).
    pub dual_objective: f64,
    /// Final KKT violation m(alpha) - M(alpha), clamped at zero.
    pub kkt_residual: f64,
    #[allow(dead_code)]
    pub iterations: u64,
}

pub(crate) fn solve(points: &[Vec<f64>], labels: &[f64], c: f64, tolerance: f64) -> Result<Solution> {
    let n = points.len();
    debug_assert_eq!(labels.len(), n);

    let dense: Option<Vec<f64>> = (n <= DENSE_LIMIT).then(|| {
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = dot(&points[i], &points[j]);
                gram[i * n + j] = k;
                gram[j * n + i] = k;
            }
        }
        gram
    });
    let kernel = |i: usize, j: usize| match &dense {
        Some(gram) => gram[i * n + j],
        None => dot(&points[i], &points[j]),
    };

    let mut alpha = vec![0.0; n];
    // Gradient of the minimization form 1/2 a'Qa - e'a; starts at -e.
    let mut grad = vec![-1.0; n];

    let in_up = |k: usize, alpha: &[f64]| {
        (labels[k] > 0.0 && alpha[k] < c) || (labels[k] < 0.0 && alpha[k] > 0.0)
    };
    let in_low = |k: usize, alpha: &[f64]| {
        (labels[k] > 0.0 && alpha[k] > 0.0) || (labels[k] < 0.0 && alpha[k] < c)
    };

    let max_iterations = 200_000u64.max(400 * n as u64);
    let mut iterations = 0u64;
    let (final_m, final_big_m) = loop {
        // Maximal violating pair: i maximizes -y*grad over the set still able
        // to move up, j minimizes it over the set still able to move down.
        let mut i = usize::MAX;
        let mut m = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut big_m = f64::INFINITY;
        for k in 0..n {
            let v = -labels[k] * grad[k];
            if in_up(k, &alpha) && v > m {
                m = v;
                i = k;
            }
            if in_low(k, &alpha) && v < big_m {
                big_m = v;
                j = k;
            }
        }
        if i == usize::MAX || j == usize::MAX || m - big_m <= tolerance {
            break (m, big_m);
        }
        if iterations >= max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                violation: m - big_m,
            });
        }
        iterations += 1;

        let (yi, yj) = (labels[i], labels[j]);
        let s = yi * yj;
        let (lo, hi) = if s < 0.0 {
            (
                f64::max(0.0, alpha[j] - alpha[i]),
                f64::min(c, c + alpha[j] - alpha[i]),
            )
        } else {
            (
                f64::max(0.0, alpha[i] + alpha[j] - c),
                f64::min(c, alpha[i] + alpha[j]),
            )
        };

        // E_k = f_k - y_k = y_k * grad_k for unit labels.
        let e_i = yi * grad[i];
        let e_j = yj * grad[j];
        let eta = f64::max(kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j), TAU);
        let unclipped = alpha[j] + yj * (e_i - e_j) / eta;
        // Snap within one rounding error of a box bound onto the bound, so a
        // coefficient never lingers microscopically inside and keeps getting
        // selected for sub-ULP steps.
        let snap = 1e-12 * c.max(1.0);
        let snap_bound = |v: f64| {
            if v <= snap {
                0.0
            } else if v >= c - snap {
                c
            } else {
                v
            }
        };
        let new_j = snap_bound(unclipped.clamp(lo, hi));
        let delta_j = new_j - alpha[j];
        if delta_j.abs() < MIN_STEP {
            return Err(Error::NoConvergence {
                iterations,
                violation: m - big_m,
            });
        }
        let new_i = snap_bound((alpha[i] - s * delta_j).clamp(0.0, c));
        let delta_i = new_i - alpha[i];
        alpha[j] = new_j;
        alpha[i] = new_i;

        for k in 0..n {
            grad[k] += labels[k] * (yi * kernel(k, i) * delta_i + yj * kernel(k, j) * delta_j);
        }
    };

    // y_k - f_k = -y_k * grad_k: averaged over free vectors, or the midpoint
    // of the remaining feasible interval when none are free.
    let free: Vec<usize> = (0..n)
        .filter(|&k| alpha[k] > 0.0 && alpha[k] < c)
        .collect();
    let bias = if free.is_empty() {
        (final_m + final_big_m) / 2.0
    } else {
        free.iter().map(|&k| -labels[k] * grad[k]).sum::<f64>() / free.len() as f64
    };

    let dual_objective = 0.5
        * alpha
            .iter()
            .zip(&grad)
            .map(|(a, g)| a * (1.0 - g))
            .sum::<f64>();

    Ok(Solution {
        alpha,
        bias,
        dual_objective,
        kkt_residual: (final_m - final_big_m).max(0.0),
        iterations,
    })
}
