//! Sparse symmetric systems on a lattice graph and their solvers.

use crate::error::{Error, Result};
use crate::graph::EdgeSet;
use crate::numeric::KahanSum;

/// Relative residual target for every linear solve.
pub const REL_TOL: f64 = 1e-10;

/// Which linear solver to use for the quadratic steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Jacobi-preconditioned conjugate gradients.
    #[default]
    Pcg,
    /// Dense Cholesky factorization; only for small systems.
    Dense,
}

/// Largest system the dense solver accepts.
pub const DENSE_LIMIT: usize = 200;

/// Quadratic form `1/2 x^T A x - b^T x` (up to a constant) with `A`
/// symmetric and sparse on the edge pattern: `A = diag + offdiag`, where
/// `offdiag` is stored per ordered pair in CSR order of the edge set.
#[derive(Debug, Clone)]
pub(crate) struct Quadratic<'a> {
    pub edges: &'a EdgeSet,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl<'a> Quadratic<'a> {
    pub fn new(edges: &'a EdgeSet) -> Self {
        let n = edges.num_points();
        Self {
            edges,
            diag: vec![0.0; n],
            off: vec![0.0; edges.num_ordered()],
            rhs: vec![0.0; n],
        }
    }

    /// Add `c (x_i - x_j)^2 / 2`-style coupling: contributes `c` to both
    /// diagonals and `-c` to both off-diagonal slots.
    pub fn add_coupling(&mut self, i: usize, j: usize, c: f64) {
        self.diag[i] += c;
        self.diag[j] += c;
        let a = self.edges.slot(i, j).expect("pair in edge set");
        let b = self.edges.slot(j, i).expect("pair in edge set");
        self.off[a] -= c;
        self.off[b] -= c;
    }

    /// Solve `A x = b` with `x[i] = fixed[i]` wherever `fixed[i]` is set.
    /// `x0` is the starting guess for free entries.
    pub fn solve(&self, fixed: &[Option<f64>], x0: &[f64], which: LinearSolver) -> Result<(Vec<f64>, f64)> {
        let n = self.diag.len();
        let offsets = self.edges.offsets();
        let nbrs = |i: usize| self.edges.neighbors(i);
        let mut free_of = vec![usize::MAX; n];
        let mut free = Vec::new();
        for i in 0..n {
            if fixed[i].is_none() {
                free_of[i] = free.len();
                free.push(i);
            }
        }
        let mut x: Vec<f64> = (0..n).map(|i| fixed[i].unwrap_or(x0[i])).collect();
        if free.is_empty() {
            return Ok((x, 0.0));
        }
        // reduced right-hand side b_f - A_fF x_F
        let b: Vec<f64> = free
            .iter()
            .map(|&i| {
                let mut s = self.rhs[i];
                for (k, &j) in nbrs(i).iter().enumerate() {
                    if let Some(val) = fixed[j] {
                        s -= self.off[offsets[i] + k] * val;
                    }
                }
                s
            })
            .collect();
        let apply = |y: &[f64], out: &mut [f64]| {
            for (r, &i) in free.iter().enumerate() {
                let mut s = self.diag[i] * y[r];
                for (k, &j) in nbrs(i).iter().enumerate() {
                    let c = free_of[j];
                    if c != usize::MAX {
                        s += self.off[offsets[i] + k] * y[c];
                    }
                }
                out[r] = s;
            }
        };
        let start: Vec<f64> = free.iter().map(|&i| x[i]).collect();
        let (sol, res) = match which {
            LinearSolver::Pcg => {
                let precond: Vec<f64> = free.iter().map(|&i| self.diag[i]).collect();
                pcg(apply, &b, &precond, start)?
            }
            LinearSolver::Dense => {
                if free.len() > DENSE_LIMIT {
                    return Err(Error::InvalidParameter(format!(
                        "dense solver limited to {DENSE_LIMIT} unknowns, got {}",
                        free.len()
                    )));
                }
                let m = free.len();
                let mut a = vec![0.0; m * m];
                let mut e = vec![0.0; m];
                let mut col = vec![0.0; m];
                for c in 0..m {
                    e.iter_mut().for_each(|v| *v = 0.0);
                    e[c] = 1.0;
                    apply(&e, &mut col);
                    for r in 0..m {
                        a[r * m + c] = col[r];
                    }
                }
                let sol = dense_cholesky_solve(a, &b, m)?;
                let mut ax = vec![0.0; m];
                apply(&sol, &mut ax);
                let res = rel_residual(&b, &ax);
                (sol, res)
            }
        };
        for (r, &i) in free.iter().enumerate() {
            x[i] = sol[r];
        }
        Ok((x, res))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).collect::<KahanSum>().value().sqrt()
}

fn dotk(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).collect::<KahanSum>().value()
}

fn rel_residual(b: &[f64], ax: &[f64]) -> f64 {
    let r: Vec<f64> = b.iter().zip(ax).map(|(x, y)| x - y).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

/// Jacobi-preconditioned conjugate gradients from `x`, to relative residual
/// [`REL_TOL`] with at most `20 n` iterations.
pub(crate) fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    diag: &[f64],
    mut x: Vec<f64>,
) -> Result<(Vec<f64>, f64)> {
    let n = b.len();
    let nb = norm(b);
    if nb == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    if norm(&r) <= REL_TOL * nb {
        return Ok((x, norm(&r) / nb));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dotk(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = 20 * n.max(1);
    for _ in 0..cap {
        apply(&p, &mut ap);
        let pap = dotk(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numerical(format!(
                "conjugate gradients hit a non-positive curvature {pap}"
            )));
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rn = norm(&r);
        if rn <= REL_TOL * nb {
            // confirm with the true residual
            apply(&x, &mut ax);
            let res = rel_residual(b, &ax);
            if res <= REL_TOL {
                return Ok((x, res));
            }
            r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        }
        for k in 0..n {
            z[k] = r[k] * inv[k];
        }
        let rz_new = dotk(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    apply(&x, &mut ax);
    let res = rel_residual(b, &ax);
    Err(Error::Numerical(format!(
        "conjugate gradients did not reach {REL_TOL} in {cap} iterations (residual {res:e})"
    )))
}

/// Solve a dense SPD system stored row-major.
pub(crate) fn dense_cholesky_solve(mut a: Vec<f64>, b: &[f64], m: usize) -> Result<Vec<f64>> {
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d -= a[j * m + k] * a[j * m + k];
        }
        if !(d > 0.0) {
            return Err(Error::Numerical("matrix is not positive definite".into()));
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..m {
        for k in 0..i {
            y[i] -= a[i * m + k] * y[k];
        }
        y[i] /= a[i * m + i];
    }
    for i in (0..m).rev() {
        for k in i + 1..m {
            y[i] -= a[k * m + i] * y[k];
        }
        y[i] /= a[i * m + i];
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_small() {
        let a = vec![4.0, 1.0, 1.0, 3.0];
        let x = dense_cholesky_solve(a, &[1.0, 2.0], 2).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
        assert!(dense_cholesky_solve(vec![1.0, 2.0, 2.0, 1.0], &[1.0, 1.0], 2).is_err());
    }

    #[test]
    fn pcg_tridiagonal() {
        let n = 50;
        let apply = |y: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut s = 3.0 * y[i];
                if i > 0 {
                    s -= y[i - 1];
                }
                if i + 1 < n {
                    s -= y[i + 1];
                }
                out[i] = s;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x, res) = pcg(apply, &b, &vec![3.0; n], vec![0.0; n]).unwrap();
        assert!(res <= REL_TOL);
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        assert!(rel_residual(&b, &ax) <= REL_TOL);
    }
}
