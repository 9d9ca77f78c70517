//! Krylov solvers: preconditioned CG for SPD systems and right-preconditioned
//! GMRES for the coupled 2×2 block systems of the implicit Runge-Kutta stages.

use super::banded::BandedCholesky;
use super::dense::{DenseLu, DenseMatrix};
use super::sparse::{axpy, dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

/// Stopping rule shared by the iterative solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Relative residual target `‖A x − b‖₂ ≤ rel_tol ‖b‖₂`.
    pub rel_tol: f64,
    /// Iteration cap; `None` means ten times the system dimension.
    pub max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iter: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Argument(format!(
                "rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == Some(0) {
            return Err(Error::Argument("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    fn iteration_cap(&self, dim: usize) -> usize {
        self.max_iter.unwrap_or(10 * dim.max(1))
    }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite matrix.
pub fn solve_spd(a: &CsrMatrix, rhs: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = a.dim();
    if rhs.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: rhs.len(),
        });
    }
    let mut x = vec![0.0; n];
    let rhs_norm = norm2(rhs);
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let target = cfg.rel_tol * rhs_norm;
    let cap = cfg.iteration_cap(n);

    let mut iterations = 0;
    let mut r = rhs.to_vec();
    let mut ap = vec![0.0; n];
    // Outer loop re-seeds from the true residual so the recurrence drift
    // never lets an inaccurate solution through.
    loop {
        let true_res = norm2(&r);
        if true_res <= target {
            return Ok(x);
        }
        if iterations >= cap {
            return Err(Error::Solver {
                iterations,
                residual: true_res / rhs_norm,
            });
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < cap {
            iterations += 1;
            a.mul_vec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(Error::Argument(
                    "matrix is not positive definite (pᵀAp ≤ 0 in CG)".into(),
                ));
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            if norm2(&r) <= target {
                break;
            }
            for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&inv_diag) {
                *zi = ri * di;
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        r = a.mul_vec(&x);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
    }
}

/// The 2×2 block operator `[[A11, A12], [A21, A22]]` on vectors `(x1, x2)`.
#[derive(Clone, Copy, Debug)]
pub struct BlockSystem<'a> {
    pub a11: &'a CsrMatrix,
    pub a12: &'a CsrMatrix,
    pub a21: &'a CsrMatrix,
    pub a22: &'a CsrMatrix,
}

impl BlockSystem<'_> {
    pub fn block_dim(&self) -> usize {
        self.a11.dim()
    }

    fn check(&self) -> Result<()> {
        let d = self.a11.dim();
        for m in [self.a12, self.a21, self.a22] {
            if m.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: m.dim(),
                });
            }
        }
        Ok(())
    }

    /// Applies the operator to the stacked vector `x = (x1, x2)`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let d = self.block_dim();
        let (x1, x2) = x.split_at(d);
        let (y1, y2) = y.split_at_mut(d);
        self.a11.mul_vec_into(x1, y1);
        self.a12.mul_vec_add(1.0, x2, y1);
        self.a21.mul_vec_into(x1, y2);
        self.a22.mul_vec_add(1.0, x2, y2);
    }

    fn to_dense(self) -> DenseMatrix {
        let d = self.block_dim();
        let mut m = DenseMatrix::zeros(2 * d, 2 * d);
        for (blk, (ro, co)) in [
            (self.a11, (0, 0)),
            (self.a12, (0, d)),
            (self.a21, (d, 0)),
            (self.a22, (d, d)),
        ] {
            for (i, j, v) in blk.triplets() {
                m[(ro + i, co + j)] = v;
            }
        }
        m
    }
}

/// Block dimension up to which a failed Krylov solve falls back to dense LU.
pub const DENSE_FALLBACK_MAX_DIM: usize = 2000;

const GMRES_RESTART: usize = 60;

/// Solves the coupled block system; the diagonal blocks must be SPD.
pub fn solve_block2(
    a11: &CsrMatrix,
    a12: &CsrMatrix,
    a21: &CsrMatrix,
    a22: &CsrMatrix,
    rhs1: &[f64],
    rhs2: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let system = BlockSystem { a11, a12, a21, a22 };
    system.check()?;
    let p11 = BandedCholesky::factor(a11)?;
    let p22 = BandedCholesky::factor(a22)?;
    solve_block2_preconditioned(&system, &p11, &p22, rhs1, rhs2, cfg)
}

/// GMRES on the block system, right-preconditioned by exact solves with the
/// diagonal blocks. Falls back to dense LU for small systems if GMRES stalls.
pub fn solve_block2_preconditioned(
    system: &BlockSystem<'_>,
    p11: &BandedCholesky,
    p22: &BandedCholesky,
    rhs1: &[f64],
    rhs2: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    system.check()?;
    let d = system.block_dim();
    for r in [rhs1, rhs2] {
        if r.len() != d {
            return Err(Error::Dimension {
                expected: d,
                found: r.len(),
            });
        }
    }
    let rhs: Vec<f64> = rhs1.iter().chain(rhs2).copied().collect();
    let precondition = |v: &mut [f64]| {
        let (v1, v2) = v.split_at_mut(d);
        p11.solve_in_place(v1);
        p22.solve_in_place(v2);
    };
    match gmres(
        |x, y| system.apply(x, y),
        precondition,
        &rhs,
        cfg.rel_tol,
        cfg.iteration_cap(2 * d),
    ) {
        Ok(x) => {
            let (x1, x2) = x.split_at(d);
            Ok((x1.to_vec(), x2.to_vec()))
        }
        Err(err) if d <= DENSE_FALLBACK_MAX_DIM => {
            let lu = DenseLu::factor(&system.to_dense()).map_err(|_| err)?;
            let x = lu.solve(&rhs);
            let (x1, x2) = x.split_at(d);
            Ok((x1.to_vec(), x2.to_vec()))
        }
        Err(err) => Err(err),
    }
}

/// Restarted GMRES with right preconditioning, so the monitored residual is
/// the residual of the original system.
fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    precondition: impl Fn(&mut [f64]),
    rhs: &[f64],
    rel_tol: f64,
    cap: usize,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let rhs_norm = norm2(rhs);
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let target = rel_tol * rhs_norm;
    let m = GMRES_RESTART.min(n);
    let mut iterations = 0;
    let mut r = rhs.to_vec();
    let mut work = vec![0.0; n];

    loop {
        let beta = norm2(&r);
        if beta <= target {
            return Ok(x);
        }
        if iterations >= cap {
            return Err(Error::Solver {
                iterations,
                residual: beta / rhs_norm,
            });
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns, already rotated into upper-triangular form.
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;

        let mut k = 0;
        while k < m && iterations < cap {
            iterations += 1;
            let mut z = basis[k].clone();
            precondition(&mut z);
            apply(&z, &mut work);
            let mut w = work.clone();
            let mut col = vec![0.0; k + 2];
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(&w, v);
                    col[i] += hij;
                    axpy(-hij, v, &mut w);
                }
            }
            let w_norm = norm2(&w);
            col[k + 1] = w_norm;
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            let (c, s) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (col[k] / denom, col[k + 1] / denom)
            };
            col[k] = denom;
            col[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            cs.push(c);
            sn.push(s);
            h.push(col);
            k += 1;
            if g[k].abs() <= target || w_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / w_norm).collect());
        }

        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut update);
        }
        precondition(&mut update);
        axpy(1.0, &update, &mut x);

        apply(&x, &mut work);
        for ((ri, bi), ai) in r.iter_mut().zip(rhs).zip(&work) {
            *ri = bi - ai;
        }
    }
}
