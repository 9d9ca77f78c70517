//! Linear-algebra kernels shared by the discretization, the time integrators
//! and the spectral analysis.

mod banded;
mod dense;
mod krylov;
mod power;
mod special;
mod sparse;

pub use banded::BandedCholesky;
pub use dense::{DenseLu, DenseMatrix};
pub use krylov::{
    solve_block2, solve_block2_preconditioned, solve_spd, BlockSystem, SolverConfig,
    DENSE_FALLBACK_MAX_DIM,
};
pub use power::{max_singular_value, seeded_vector, SingularValueEstimate};
pub use sparse::{axpy, dot, norm2, norm_inf, CsrMatrix};
pub use special::erf;
