//! Matrix-free Krylov solvers: restarted GMRES for the nonsymmetric
//! time-step systems and plain CG for symmetric positive definite maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::operator::SparseOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative residual target `||Ax - b|| <= tol * ||b||`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 * n`.
    pub max_iter: Option<usize>,
    pub restart: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            restart: 60,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
///
/// `x` holds the initial guess on entry and the solution on exit.
pub fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: &SolveOptions,
) -> Result<SolveStats> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "solver tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let cap = opts.cap(n);
    let m = opts.restart.clamp(1, n.max(1));
    let target = opts.tol * bnorm;

    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut hess = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut total = 0usize;

    loop {
        apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        if beta <= target {
            return Ok(SolveStats {
                iterations: total,
                relative_residual: beta / bnorm,
            });
        }
        if total >= cap {
            return Err(Error::NoConvergence {
                iterations: total,
                residual: beta / bnorm,
            });
        }

        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            apply(&basis[k], &mut w);
            for (i, v) in basis.iter().enumerate().take(k + 1) {
                let hik = dot(&w, v);
                hess[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let denom = hess[k][k].hypot(hess[k + 1][k]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = hess[k][k] / denom;
                sn[k] = hess[k + 1][k] / denom;
            }
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= target || hn == 0.0 || total >= cap {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }

        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = if hess[i][i] != 0.0 { s / hess[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
    }
}

/// Conjugate gradients for a symmetric positive definite map.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]) -> Result<()>,
    b: &[f64],
    x: &mut [f64],
    opts: &SolveOptions,
) -> Result<SolveStats> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let cap = opts.cap(n);
    let mut ax = vec![0.0; n];
    apply(x, &mut ax)?;
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    for it in 0..cap {
        if rr.sqrt() <= opts.tol * bnorm {
            return Ok(SolveStats {
                iterations: it,
                relative_residual: rr.sqrt() / bnorm,
            });
        }
        apply(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: rr.sqrt() / bnorm,
            });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= opts.tol * bnorm {
        return Ok(SolveStats {
            iterations: cap,
            relative_residual: rr.sqrt() / bnorm,
        });
    }
    Err(Error::NoConvergence {
        iterations: cap,
        residual: rr.sqrt() / bnorm,
    })
}

/// Solves `system * x = rhs` with GMRES from a zero initial guess.
pub fn solve_linear(system: &SparseOperator, rhs: &Field, opts: &SolveOptions) -> Result<Field> {
    if rhs.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: rhs.len(),
        });
    }
    let mut x = Field::zeros(rhs.grid());
    gmres(
        |v, out| system.mul_into(v, out),
        rhs.values(),
        x.values_mut(),
        opts,
    )?;
    Ok(x)
}
