//! Linear solvers for the implicit parts of the time steps.

use crate::error::{Error, Result};
use crate::tolerances;

/// Solves a tridiagonal system by elimination without pivoting.
///
/// `lower[i]` multiplies `x[i-1]` and `upper[i]` multiplies `x[i+1]`; the
/// unused `lower[0]` and `upper[n-1]` are ignored. Intended for the
/// diagonally dominant matrices of the implicit steps.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { upper[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Conjugate gradients for a symmetric positive definite operator given as a
/// closure. Starts from `x0` and stops once `‖r‖ ≤ tol·‖b‖`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x0: Vec<f64>,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = x0;
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let target = tolerances::LINEAR_SOLVE * bnorm.max(f64::MIN_POSITIVE);
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    if rr.sqrt() <= target {
        return Ok(x);
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    for _ in 0..tolerances::LINEAR_SOLVE_MAX_ITER {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Solver { iterations: 0, residual: rr.sqrt() });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        if rr_new.sqrt() <= target {
            return Ok(x);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::Solver { iterations: tolerances::LINEAR_SOLVE_MAX_ITER, residual: rr.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_like(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (vec![-1.0; n], vec![3.0; n], vec![-1.0; n])
    }

    #[test]
    fn tridiagonal_matches_matrix_product() {
        let n = 7;
        let (l, d, u) = laplacian_like(n);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 2.0).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = d[i] * x_true[i];
                if i > 0 {
                    s += l[i] * x_true[i - 1];
                }
                if i + 1 < n {
                    s += u[i] * x_true[i + 1];
                }
                s
            })
            .collect();
        let x = solve_tridiagonal(&l, &d, &u, &b);
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn conjugate_gradient_agrees_with_elimination() {
        let n = 30;
        let (l, d, u) = laplacian_like(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let direct = solve_tridiagonal(&l, &d, &u, &b);
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = 3.0 * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1];
                }
                y[i] = s;
            }
        };
        let x = conjugate_gradient(apply, &b, vec![0.0; n]).unwrap();
        for i in 0..n {
            assert!((x[i] - direct[i]).abs() < 1e-10);
        }
    }
}
