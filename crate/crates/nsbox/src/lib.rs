//! Pseudospectral incompressible Navier-Stokes on the 2*pi-periodic box.
//!
//! The crate has three jobs:
//!
//! * a dealiased Fourier-Galerkin solver for the incompressible equations on
//!   `[0, 2*pi)^3` (classical RK4 with the viscous term integrated exactly per
//!   mode), with trajectory diagnostics;
//! * a monitor for a directional regularity quantity built from two entries of
//!   the velocity Hessian, `d1 d3 u3` and `d2 d3 u3`, measured in mixed
//!   space-time Lebesgue norms `L^alpha(0,T; L^beta)` with
//!   `alpha = beta/(beta-1)`, together with windowed smallness and Gronwall
//!   diagnostics and the classical Serrin baseline for comparison;
//! * a verification suite that certifies exact trilinear integral identities
//!   for divergence-free fields (the Kukavica-Ziane identity and the rewrites
//!   of the advective pairings against horizontal and vertical dissipation)
//!   and empirically bounds the constants in two anisotropic trilinear
//!   inequalities on compactly supported test functions.
//!
//! Everything is deterministic for fixed seeds: random fields come from a
//! seeded ChaCha stream and every floating-point reduction runs through
//! fixed-chunk deterministic summation (see [`exec`]), so results are bitwise
//! reproducible regardless of thread count.

pub mod error;
pub mod exec;
pub mod fft;
pub mod field;
pub mod grid;
pub mod identities;
pub mod inequalities;
pub mod monitor;
pub mod norms;
pub mod solver;

pub use error::Error;
pub use field::{generate_test_field, Axis, ScalarField, TestFieldKind, VectorField};
pub use grid::GridSpec;
pub use monitor::{evaluate_criterion, AxisTriple, CriterionConfig, CriterionReport};
pub use solver::{run_simulation, RunParams, SolverState, Trajectory};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
