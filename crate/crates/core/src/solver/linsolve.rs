//! Compressed sparse rows and a Jacobi-preconditioned BiCGStab for the Newton
//! corrections; the linearized Hessian operator is nonsymmetric through its
//! variable coefficients.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<u32>,
    pub col: Vec<u32>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for row in 0..self.n {
            let lo = self.row_ptr[row] as usize;
            let hi = self.row_ptr[row + 1] as usize;
            let mut acc = 0.0;
            for idx in lo..hi {
                acc += self.val[idx] * x[self.col[idx] as usize];
            }
            y[row] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for row in 0..self.n {
            for idx in self.row_ptr[row] as usize..self.row_ptr[row + 1] as usize {
                if self.col[idx] as usize == row {
                    d[row] = self.val[idx];
                }
            }
        }
        d
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub struct LinearOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` to the given relative residual, starting from `x = 0`,
/// with Jacobi (diagonal) left preconditioning folded into the iteration.
pub fn bicgstab(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iters: usize,
) -> Result<LinearOutcome> {
    let n = a.n;
    let diag = a.diagonal();
    let mut inv_diag = vec![0.0; n];
    for (i, &d) in diag.iter().enumerate() {
        if d.abs() < 1e-300 {
            return Err(Error::LinearSolveFailed {
                detail: format!("zero diagonal at equation {i}"),
                off_cone_nodes: 0,
            });
        }
        inv_diag[i] = 1.0 / d;
    }
    let scaled_matvec = |x: &[f64], y: &mut [f64]| {
        a.matvec(x, y);
        for i in 0..n {
            y[i] *= inv_diag[i];
        }
    };
    let b_scaled: Vec<f64> = b.iter().zip(&inv_diag).map(|(&v, &d)| v * d).collect();
    let b_norm = norm(&b_scaled).max(1e-300);

    x.iter_mut().for_each(|v| *v = 0.0);
    let mut r = b_scaled.clone();
    let r0 = r.clone();
    let mut rho = 1.0_f64;
    let mut alpha = 1.0_f64;
    let mut omega = 1.0_f64;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut s = vec![0.0; n];

    for iter in 0..max_iters {
        let res = norm(&r) / b_norm;
        if res <= rtol {
            return Ok(LinearOutcome {
                iterations: iter,
                relative_residual: res,
            });
        }
        let rho_next = dot(&r0, &r);
        if rho_next.abs() < 1e-280 {
            return Err(Error::LinearSolveFailed {
                detail: format!("BiCGStab breakdown (rho) at iteration {iter}"),
                off_cone_nodes: 0,
            });
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        scaled_matvec(&p, &mut v);
        let r0v = dot(&r0, &v);
        if r0v.abs() < 1e-280 {
            return Err(Error::LinearSolveFailed {
                detail: format!("BiCGStab breakdown (r0.v) at iteration {iter}"),
                off_cone_nodes: 0,
            });
        }
        alpha = rho / r0v;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / b_norm <= rtol {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return Ok(LinearOutcome {
                iterations: iter + 1,
                relative_residual: norm(&s) / b_norm,
            });
        }
        scaled_matvec(&s, &mut t);
        let tt = dot(&t, &t);
        if tt < 1e-280 {
            return Err(Error::LinearSolveFailed {
                detail: format!("BiCGStab breakdown (t.t) at iteration {iter}"),
                off_cone_nodes: 0,
            });
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if omega.abs() < 1e-280 {
            return Err(Error::LinearSolveFailed {
                detail: format!("BiCGStab breakdown (omega) at iteration {iter}"),
                off_cone_nodes: 0,
            });
        }
    }
    Err(Error::LinearSolveFailed {
        detail: format!(
            "BiCGStab reached {max_iters} iterations at relative residual {:.3e}",
            norm(&r) / b_norm
        ),
        off_cone_nodes: 0,
    })
}
