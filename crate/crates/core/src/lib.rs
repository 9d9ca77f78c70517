//! Parareal for the two-dimensional heat equation `u_t = ν(t) ∇·(a(x,y) ∇u)`
//! on the unit square, with a piecewise-constant coefficient on three
//! vertical strips and homogeneous Dirichlet boundary conditions.
//!
//! The pipeline is:
//!
//! 1. [`mesh`]: strip-aligned structured triangulations and uniform refinement.
//! 2. [`fem`]: P1 mass and stiffness matrices on the interior unknowns.
//! 3. [`integrators`]: implicit Euler (coarse) and RadauIIA (fine) propagators.
//! 4. [`parareal`]: the iteration itself, fine propagations run concurrently.
//! 5. [`spectral`]: the iteration operator `I − M_g⁻¹ M_f`, its nilpotency and
//!    largest singular value.
//! 6. [`experiment`]: configurations, presets and CSV output.

// `!(x > 0.0)` is used on purpose so that NaN is rejected as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops read more naturally in the triangular solves.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod experiment;
pub mod fem;
pub mod integrators;
pub mod linalg;
pub mod mesh;
pub mod parareal;
pub mod spectral;

pub use error::{Error, Result};
pub use experiment::{preset, run_experiment, ExperimentConfig, ExperimentResult, ExperimentSetup};
pub use fem::{assemble, DiscreteSystem, InitialCondition, StripCoefficients};
pub use integrators::{Method, NuProfile, Propagator};
pub use mesh::{build_strip_mesh, mesh_width_stats, refine_uniform, Mesh, Point2D, Strip, StripGeometry};
pub use parareal::{PararealConfig, PararealState, TimeSlicePartition};
pub use spectral::IterationOperator;
