//! Primal active-set method for Euclidean projection onto a polyhedron
//! `{c : <row_i, c> >= rhs_i}`.
//!
//! The objective is `0.5 * |c - target|^2`, so the equality-constrained
//! subproblem on a working set reduces to an orthogonal projection of the
//! residual onto the complement of the working rows. Entering and leaving
//! indices are chosen by smallest index among ties (Bland's rule).

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, orthonormalize, pinv_solve};

const STEP_TOL: f64 = 1e-14;
const MULT_TOL: f64 = 1e-12;

pub fn project_polyhedron(
    target: &[f64],
    rows: &[Vec<f64>],
    rhs: &[f64],
    start: &[f64],
) -> Result<Vec<f64>> {
    let k = target.len();
    debug_assert_eq!(rows.len(), rhs.len());
    debug_assert_eq!(start.len(), k);
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut c = start.to_vec();
    let mut working: Vec<usize> = Vec::new();
    let scale = 1.0 + norm(target) + norm(start);
    let max_iter = 50 * (rows.len() + k) + 100;

    for _ in 0..max_iter {
        let active: Vec<Vec<f64>> = working.iter().map(|&i| rows[i].clone()).collect();
        let q = orthonormalize(&active, 1e-12);
        let mut step: Vec<f64> = target.iter().zip(&c).map(|(t, x)| t - x).collect();
        for qi in &q {
            let proj = dot(qi, &step);
            axpy(-proj, qi, &mut step);
        }

        if norm(&step) <= STEP_TOL * scale {
            if working.is_empty() {
                return Ok(c);
            }
            // c - target = sum_i lambda_i * row_i, lambda >= 0 at the optimum.
            let grad: Vec<f64> = c.iter().zip(target).map(|(x, t)| x - t).collect();
            let transposed: Vec<Vec<f64>> = (0..k)
                .map(|j| working.iter().map(|&i| rows[i][j]).collect())
                .collect();
            let lambda = pinv_solve(&transposed, &grad, 1e-12);
            let leaving = working
                .iter()
                .zip(&lambda)
                .filter(|(_, &l)| l < -MULT_TOL * scale)
                .map(|(&i, _)| i)
                .min();
            match leaving {
                None => return Ok(c),
                Some(i) => working.retain(|&w| w != i),
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for (i, row) in rows.iter().enumerate() {
            if working.contains(&i) {
                continue;
            }
            let rate = dot(row, &step);
            if rate >= -1e-15 * norm(row) * norm(&step) {
                continue;
            }
            let slack = (dot(row, &c) - rhs[i]).max(0.0);
            let limit = slack / -rate;
            if limit < alpha {
                alpha = limit;
                blocking = Some(i);
            }
        }
        axpy(alpha, &step, &mut c);
        if let Some(i) = blocking {
            working.push(i);
        }
    }
    Err(Error::Qp)
}
