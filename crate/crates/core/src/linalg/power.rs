//! Largest singular value of a matrix-free operator by power iteration on
//! the Gram operator `AᵀA`.

#[cfg(debug_assertions)]
use super::sparse::dot;
use super::sparse::norm2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const START_SEED: u64 = 0x005e_ed0f_5167;

/// Outcome of [`max_singular_value`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularValueEstimate {
    pub sigma: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Deterministic pseudo-random vector shared by the spectral routines.
pub fn seeded_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Estimates `σ_max(A)` given the actions of `A` and `Aᵀ`.
///
/// Iterates `v ← AᵀA v / ‖AᵀA v‖` from a fixed seeded start and stops once
/// the estimate `‖A v‖` changes by at most `tol` relative. If `max_iter` runs
/// out, the last estimate is returned with `converged == false`.
pub fn max_singular_value<A, At>(
    apply: A,
    apply_transpose: At,
    dim: usize,
    tol: f64,
    max_iter: usize,
) -> SingularValueEstimate
where
    A: Fn(&[f64]) -> Vec<f64>,
    At: Fn(&[f64]) -> Vec<f64>,
{
    if dim == 0 {
        return SingularValueEstimate {
            sigma: 0.0,
            iterations: 0,
            converged: true,
        };
    }

    #[cfg(debug_assertions)]
    {
        let x = seeded_vector(dim, START_SEED ^ 1);
        let ax = apply(&x);
        let y = seeded_vector(ax.len(), START_SEED ^ 2);
        let aty = apply_transpose(&y);
        let gap = (dot(&ax, &y) - dot(&x, &aty)).abs();
        debug_assert!(
            gap <= 1e-10 * norm2(&x) * norm2(&y) * (1.0 + norm2(&ax) / norm2(&x)),
            "apply_transpose is not the adjoint of apply (gap {gap:.3e})"
        );
    }

    let mut v = seeded_vector(dim, START_SEED);
    let n0 = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n0);

    let mut sigma = 0.0;
    for iter in 1..=max_iter {
        let av = apply(&v);
        let next = norm2(&av);
        if next == 0.0 {
            // v landed in the null space; for a nonzero operator this only
            // happens if A vanishes on the whole Krylov space.
            return SingularValueEstimate {
                sigma: 0.0,
                iterations: iter,
                converged: true,
            };
        }
        let delta = (next - sigma).abs();
        sigma = next;
        if iter > 1 && delta <= tol * sigma {
            return SingularValueEstimate {
                sigma,
                iterations: iter,
                converged: true,
            };
        }
        let mut w = apply_transpose(&av);
        let wn = norm2(&w);
        if wn == 0.0 {
            return SingularValueEstimate {
                sigma,
                iterations: iter,
                converged: true,
            };
        }
        w.iter_mut().for_each(|x| *x /= wn);
        v = w;
    }
    SingularValueEstimate {
        sigma,
        iterations: max_iter,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::DenseMatrix;

    fn estimate(a: &DenseMatrix, tol: f64, max_iter: usize) -> SingularValueEstimate {
        max_singular_value(
            |x| a.mul_vec(x),
            |x| a.mul_vec_transpose(x),
            a.cols(),
            tol,
            max_iter,
        )
    }

    #[test]
    fn diagonal_matrix() {
        let a = DenseMatrix::from_row_major(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        let est = estimate(&a, 1e-12, 1000);
        assert!(est.converged);
        assert!((est.sigma - 2.0).abs() < 1e-10);
    }

    #[test]
    fn jordan_block_has_unit_singular_value() {
        let a = DenseMatrix::from_row_major(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let est = estimate(&a, 1e-12, 100);
        assert!((est.sigma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_operator() {
        let a = DenseMatrix::zeros(3, 3);
        let est = estimate(&a, 1e-8, 10);
        assert_eq!(est.sigma, 0.0);
        assert!(est.converged);
    }

    #[test]
    fn sign_flip_invariance() {
        let data: Vec<f64> = seeded_vector(16, 3);
        let a = DenseMatrix::from_row_major(4, 4, data.clone()).unwrap();
        let neg = DenseMatrix::from_row_major(4, 4, data.iter().map(|v| -v).collect()).unwrap();
        let (s1, s2) = (estimate(&a, 1e-12, 10_000).sigma, estimate(&neg, 1e-12, 10_000).sigma);
        assert!((s1 - s2).abs() <= 1e-10 * s1);
    }

    #[test]
    fn exhausted_iterations_are_flagged() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.0, 0.0, 0.999]).unwrap();
        let est = estimate(&a, 1e-15, 3);
        assert!(!est.converged);
        assert_eq!(est.iterations, 3);
    }
}
