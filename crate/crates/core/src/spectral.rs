//! Parareal as a preconditioned fixed-point iteration on stacked vectors
//! `(y_0, …, y_N)`.
//!
//! With `F` and `G` the one-slice propagator matrices,
//!
//! ```text
//! M_f = [ I          ]      M_g = [ I          ]
//!       [-F  I       ]            [-G  I       ]
//!       [    ⋱  ⋱    ]            [    ⋱  ⋱    ]
//!       [      -F  I ]            [      -G  I ]
//! ```
//!
//! and one iteration maps the error `e^k = y − y^k` to `E e^k` with
//! `E = I − M_g⁻¹ M_f`. `E` is strictly block lower triangular, so
//! `E^{N+1} = 0`; its largest singular value bounds the contraction per
//! iteration in the stacked 2-norm.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrators::Propagator;
use crate::linalg::{
    max_singular_value, norm2, seeded_vector, DenseLu, DenseMatrix, SingularValueEstimate,
};

/// Largest number of unknowns for which propagator matrices are formed.
pub const MAX_DENSE_DOFS: usize = 5000;

const NILPOTENCY_TOL: f64 = 1e-10;
const NILPOTENCY_SAMPLES: usize = 10;
const NILPOTENCY_SEED: u64 = 0x00e1_1207;

/// Matrix of a propagator over one slice; column `j` is the propagated unit
/// vector `e_j`. Only time-independent coefficients give a slice-independent
/// matrix.
pub fn build_propagator_matrix(prop: &Propagator, slice_length: f64) -> Result<DenseMatrix> {
    if !prop.nu().is_constant() {
        return Err(Error::Unsupported(format!(
            "propagator matrices need a constant nu profile, got '{}'",
            prop.nu().name()
        )));
    }
    let d = prop.system().dim();
    if d > MAX_DENSE_DOFS {
        return Err(Error::Size(format!(
            "{d} unknowns exceed the dense limit of {MAX_DENSE_DOFS}"
        )));
    }
    let columns: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            prop.propagate(&e, 0.0, slice_length)
        })
        .collect::<Result<_>>()?;
    DenseMatrix::from_columns(d, &columns)
}

/// `E = I − M_g⁻¹ M_f` applied matrix-free from the per-slice blocks.
#[derive(Clone, Debug)]
pub struct IterationOperator {
    slices: usize,
    coarse: DenseMatrix,
    fine: DenseMatrix,
}

impl IterationOperator {
    pub fn new(slices: usize, coarse: DenseMatrix, fine: DenseMatrix) -> Result<Self> {
        let d = coarse.rows();
        for m in [&coarse, &fine] {
            if m.rows() != d || m.cols() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: m.cols().max(m.rows()),
                });
            }
        }
        if slices == 0 {
            return Err(Error::Config("need at least one time slice".into()));
        }
        Ok(Self {
            slices,
            coarse,
            fine,
        })
    }

    /// Builds both propagator matrices and the operator for `slices` slices
    /// of `[0, t_end]`.
    pub fn from_propagators(
        coarse: &Propagator,
        fine: &Propagator,
        t_end: f64,
        slices: usize,
    ) -> Result<Self> {
        let len = t_end / slices as f64;
        Self::new(
            slices,
            build_propagator_matrix(coarse, len)?,
            build_propagator_matrix(fine, len)?,
        )
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn block_dim(&self) -> usize {
        self.coarse.rows()
    }

    pub fn dim(&self) -> usize {
        (self.slices + 1) * self.block_dim()
    }

    pub fn coarse_matrix(&self) -> &DenseMatrix {
        &self.coarse
    }

    pub fn fine_matrix(&self) -> &DenseMatrix {
        &self.fine
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    fn block<'a>(&self, x: &'a [f64], n: usize) -> &'a [f64] {
        let d = self.block_dim();
        &x[n * d..(n + 1) * d]
    }

    /// `r_0 = x_0`, `r_{n+1} = x_{n+1} − F x_n`
    pub fn apply_mf(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let d = self.block_dim();
        let mut r = x.to_vec();
        let mut fx = vec![0.0; d];
        for n in 0..self.slices {
            self.fine.mul_vec_into(self.block(x, n), &mut fx);
            for (ri, f) in r[(n + 1) * d..(n + 2) * d].iter_mut().zip(&fx) {
                *ri -= f;
            }
        }
        Ok(r)
    }

    /// Forward block substitution `z_0 = r_0`, `z_{n+1} = G z_n + r_{n+1}`.
    pub fn apply_mg_inverse(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.check(r)?;
        let d = self.block_dim();
        let mut z = r.to_vec();
        let mut gz = vec![0.0; d];
        for n in 0..self.slices {
            self.coarse.mul_vec_into(&z[n * d..(n + 1) * d], &mut gz);
            for (zi, g) in z[(n + 1) * d..(n + 2) * d].iter_mut().zip(&gz) {
                *zi += g;
            }
        }
        Ok(z)
    }

    pub fn apply_e(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.apply_mg_inverse(&self.apply_mf(x)?)?;
        Ok(x.iter().zip(&z).map(|(a, b)| a - b).collect())
    }

    /// `s_n = w_n − Fᵀ w_{n+1}`, `s_N = w_N`
    pub fn apply_mf_transpose(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check(w)?;
        let d = self.block_dim();
        let mut s = w.to_vec();
        let mut ftw = vec![0.0; d];
        for n in 0..self.slices {
            self.fine.mul_vec_transpose_into(self.block(w, n + 1), &mut ftw);
            for (si, f) in s[n * d..(n + 1) * d].iter_mut().zip(&ftw) {
                *si -= f;
            }
        }
        Ok(s)
    }

    /// Backward block substitution `w_N = y_N`, `w_n = y_n + Gᵀ w_{n+1}`.
    pub fn apply_mg_inverse_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        let d = self.block_dim();
        let mut w = y.to_vec();
        let mut gtw = vec![0.0; d];
        for n in (0..self.slices).rev() {
            self.coarse
                .mul_vec_transpose_into(&w[(n + 1) * d..(n + 2) * d], &mut gtw);
            for (wi, g) in w[n * d..(n + 1) * d].iter_mut().zip(&gtw) {
                *wi += g;
            }
        }
        Ok(w)
    }

    pub fn apply_e_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        let s = self.apply_mf_transpose(&self.apply_mg_inverse_transpose(y)?)?;
        Ok(y.iter().zip(&s).map(|(a, b)| a - b).collect())
    }

    /// Explicit `E` from dense `M_f`, `M_g` and an LU solve; intended for
    /// small checks only.
    pub fn assemble_dense(&self) -> Result<DenseMatrix> {
        let dim = self.dim();
        if dim > 2000 {
            return Err(Error::Size(format!("stacked dimension {dim} is too large to assemble")));
        }
        let d = self.block_dim();
        let mut mf = DenseMatrix::identity(dim);
        let mut mg = DenseMatrix::identity(dim);
        for n in 0..self.slices {
            for i in 0..d {
                for j in 0..d {
                    mf[((n + 1) * d + i, n * d + j)] = -self.fine[(i, j)];
                    mg[((n + 1) * d + i, n * d + j)] = -self.coarse[(i, j)];
                }
            }
        }
        let lu = DenseLu::factor(&mg)?;
        let mut e = DenseMatrix::identity(dim);
        for j in 0..dim {
            let col = lu.solve(&mf.column(j));
            for (i, v) in col.iter().enumerate() {
                e[(i, j)] -= v;
            }
        }
        Ok(e)
    }
}

/// Outcome of [`check_nilpotent`].
#[derive(Clone, Debug)]
pub struct NilpotencyReport {
    /// `‖E^k x‖₂ / ‖x‖₂` for `k = 0..=N+1`, one row per random sample.
    pub decay: Vec<Vec<f64>>,
    /// Largest `‖E^{N+1} x‖ / ‖x‖` over the samples.
    pub max_residual_full: f64,
    /// Largest `‖E^N x‖ / ‖x‖` over samples with `x_0 = 0`.
    pub max_residual_zero_start: f64,
    pub passed: bool,
}

/// Applies `E` repeatedly to seeded random vectors and checks that
/// `E^{N+1} x` and, for `x_0 = 0`, `E^N x` vanish to 1e-10 relative.
pub fn check_nilpotent(op: &IterationOperator) -> Result<NilpotencyReport> {
    let n = op.slices();
    let d = op.block_dim();
    let mut decay = Vec::with_capacity(NILPOTENCY_SAMPLES);
    let mut max_full: f64 = 0.0;
    let mut max_zero: f64 = 0.0;
    for s in 0..NILPOTENCY_SAMPLES {
        let x = seeded_vector(op.dim(), NILPOTENCY_SEED + s as u64);
        let x_norm = norm2(&x);
        let mut row = vec![1.0];
        let mut v = x.clone();
        for _ in 0..=n {
            v = op.apply_e(&v)?;
            row.push(norm2(&v) / x_norm);
        }
        max_full = max_full.max(row[n + 1]);
        decay.push(row);

        let mut v = x;
        v[..d].iter_mut().for_each(|c| *c = 0.0);
        let v_norm = norm2(&v);
        for _ in 0..n {
            v = op.apply_e(&v)?;
        }
        max_zero = max_zero.max(norm2(&v) / v_norm);
    }
    Ok(NilpotencyReport {
        decay,
        max_residual_full: max_full,
        max_residual_zero_start: max_zero,
        passed: max_full <= NILPOTENCY_TOL && max_zero <= NILPOTENCY_TOL,
    })
}

/// Power-iteration estimate of `σ_max(E)`.
pub fn estimate_sigma_max(op: &IterationOperator, tol: f64, max_iter: usize) -> SingularValueEstimate {
    max_singular_value(
        |x| op.apply_e(x).expect("power iteration keeps the stacked dimension"),
        |x| op.apply_e_transpose(x).expect("power iteration keeps the stacked dimension"),
        op.dim(),
        tol,
        max_iter,
    )
}

/// Predicted defect `d⁰ σ_max^k`.
pub fn convergence_bound(sigma_max: f64, d0: f64, k: u32) -> f64 {
    d0 * sigma_max.powi(k as i32)
}

/// Concatenates per-slice vectors into one stacked vector.
pub fn stack(blocks: &[Vec<f64>]) -> Vec<f64> {
    blocks.iter().flatten().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_op(slices: usize, g: f64, f: f64) -> IterationOperator {
        let m = |v| DenseMatrix::from_row_major(1, 1, vec![v]).unwrap();
        IterationOperator::new(slices, m(g), m(f)).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let op = scalar_op(3, 0.5, 0.4);
        let z = vec![0.0; 4];
        assert_eq!(op.apply_mf(&z).unwrap(), z);
        assert_eq!(op.apply_mg_inverse(&z).unwrap(), z);
        assert_eq!(op.apply_e(&z).unwrap(), z);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let op = scalar_op(3, 0.5, 0.4);
        assert!(matches!(op.apply_e(&[1.0; 3]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn single_slice_is_nilpotent_of_index_two() {
        let op = scalar_op(1, 0.9, 0.2);
        let e1 = op.apply_e(&[0.0, 1.0]).unwrap();
        assert_eq!(e1, vec![0.0, 0.0]);
        let e2 = op.apply_e(&op.apply_e(&[1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(e2, vec![0.0, 0.0]);
    }

    #[test]
    fn equal_propagators_give_zero_operator() {
        let op = scalar_op(4, 0.7, 0.7);
        let x = seeded_vector(5, 1);
        assert!(op.apply_e(&x).unwrap().iter().all(|&v| v.abs() < 1e-15));
        assert!(estimate_sigma_max(&op, 1e-8, 100).sigma < 1e-14);
    }

    #[test]
    fn bound_values() {
        assert_eq!(convergence_bound(0.3, 2.0, 0), 2.0);
        assert!((convergence_bound(0.162, 1.0, 2) - 0.026244).abs() < 1e-15);
        assert_eq!(convergence_bound(0.0, 5.0, 1), 0.0);
    }

    #[test]
    fn dense_assembly_matches_matrix_free_columns() {
        let op = scalar_op(5, 0.5, 0.3);
        let e = op.assemble_dense().unwrap();
        for j in 0..op.dim() {
            let mut unit = vec![0.0; op.dim()];
            unit[j] = 1.0;
            let col = op.apply_e(&unit).unwrap();
            for i in 0..op.dim() {
                assert!((col[i] - e[(i, j)]).abs() < 1e-12);
            }
        }
    }
}
