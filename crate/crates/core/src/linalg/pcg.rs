//! Preconditioned conjugate gradients for symmetric positive definite systems.

use super::{dot, SymmetricOperator};
use crate::error::{Error, Result};

pub trait Preconditioner {
    /// `z = M^{-1} r`.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// No preconditioning (`M = I`).
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal (Jacobi) scaling.
#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new<A: SymmetricOperator + ?Sized>(op: &A) -> Self {
        Self {
            inv_diag: op.diagonal().into_iter().map(|d| 1.0 / d).collect(),
        }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgOptions {
    /// Stop once `||b - A x|| <= tol * ||b||`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 * N`.
    pub max_iter: Option<usize>,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned CG from a zero initial guess.
pub fn pcg_solve<A: SymmetricOperator + ?Sized>(op: &A, rhs: &[f64], opts: &PcgOptions) -> Result<PcgOutcome> {
    pcg_solve_with(op, rhs, None, opts, &Jacobi::new(op))
}

pub fn pcg_solve_with<A: SymmetricOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    x0: Option<&[f64]>,
    opts: &PcgOptions,
    precond: &dyn Preconditioner,
) -> Result<PcgOutcome> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rhs.len(),
            context: "PCG right-hand side",
        });
    }
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return Ok(PcgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let threshold = opts.tol * b_norm;

    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x0.len(),
                context: "PCG initial guess",
            })
        }
        None => vec![0.0; n],
    };
    let mut ap = vec![0.0; n];
    op.apply(&x, &mut ap);
    let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut r_norm = dot(&r, &r).sqrt();
    let mut iterations = 0;

    while r_norm > threshold {
        if iterations == max_iter {
            return Err(Error::PcgNotConverged {
                iterations,
                relative_residual: r_norm / b_norm,
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // A is not positive definite along p
            return Err(Error::PcgNotConverged {
                iterations,
                relative_residual: r_norm / b_norm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        r_norm = dot(&r, &r).sqrt();
        iterations += 1;
    }

    Ok(PcgOutcome {
        solution: x,
        iterations,
        relative_residual: r_norm / b_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn laplacian_2d(n: usize) -> DMatrix<f64> {
        let h2 = ((n + 1) as f64).powi(2);
        let t = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let id = DMatrix::<f64>::identity(n, n);
        (t.kronecker(&id) + id.kronecker(&t)) * h2
    }

    #[test]
    fn identity_returns_rhs() {
        let a = DMatrix::<f64>::identity(6, 6);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0, 7.0];
        let out = pcg_solve(&a, &b, &PcgOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        for (x, y) in out.solution.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_matches_dense_solve() {
        let a = laplacian_2d(8);
        let b: Vec<f64> = (0..64).map(|k| ((k * 7 % 11) as f64) - 5.0).collect();
        let opts = PcgOptions {
            tol: 1e-14,
            max_iter: None,
        };
        let x = pcg_solve(&a, &b, &opts).unwrap().solution;
        let dense = a.clone().lu().solve(&DVector::from_vec(b)).unwrap();
        let err = (DVector::from_vec(x) - &dense).norm() / dense.norm();
        assert!(err < 1e-12, "relative error {err:e}");
    }

    #[test]
    fn tighter_tolerance_never_increases_residual() {
        let a = laplacian_2d(8);
        let b: Vec<f64> = (0..64).map(|k| (k as f64 * 0.3).cos()).collect();
        let mut last = f64::INFINITY;
        for tol in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
            let out = pcg_solve(&a, &b, &PcgOptions { tol, max_iter: None }).unwrap();
            assert!(out.relative_residual <= tol);
            assert!(out.relative_residual <= last);
            last = out.relative_residual;
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplacian_2d(3);
        let out = pcg_solve(&a, &[0.0; 9], &PcgOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.solution.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let a = laplacian_2d(8);
        let b = vec![1.0; 64];
        let err = pcg_solve(
            &a,
            &b,
            &PcgOptions {
                tol: 1e-14,
                max_iter: Some(2),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::PcgNotConverged { iterations: 2, .. }));
    }
}
