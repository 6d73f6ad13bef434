//! Error type shared by the whole crate.

use thiserror::Error;

/// Everything that can go wrong across grid construction, field generation,
/// norms, identity/inequality evaluation, time stepping and monitoring.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid sizes must be even (real spectra need paired modes) and large
    /// enough for the 2/3-rule dealiasing band to be non-trivial.
    #[error("invalid grid size n = {n}: n must be even and >= 8")]
    InvalidGridSize { n: usize },

    /// The stored grid viscosity is a physical parameter of the problem.
    #[error("invalid viscosity {nu}: must be positive")]
    InvalidViscosity { nu: f64 },

    /// Two fields entering one operation live on different grids.
    #[error("grid mismatch: {left} vs {right} points per axis")]
    GridMismatch { left: usize, right: usize },

    /// A Lebesgue exponent outside `[1, inf]`.
    #[error("invalid Lebesgue exponent q = {q}: need q >= 1 (or infinity)")]
    InvalidLebesgueExponent { q: f64 },

    /// A criterion integrability exponent outside `(1, inf]`.
    #[error("invalid criterion exponent beta = {beta}: need beta > 1 (or infinity)")]
    InvalidCriterionBeta { beta: f64 },

    /// A Serrin exponent outside `[3, inf]`.
    #[error("invalid Serrin exponent beta' = {beta_prime}: need beta' >= 3 (or infinity)")]
    InvalidSerrinBeta { beta_prime: f64 },

    /// An interpolation parameter outside `(1, 3]`.
    #[error("invalid interpolation parameter r = {r}: need 1 < r <= 3")]
    InvalidInterpolationR { r: f64 },

    /// Mixed-norm samples must be appended in time order.
    #[error("non-monotone time sample {t} after {last}")]
    NonMonotoneTime { t: f64, last: f64 },

    /// Norm samples must be finite and non-negative.
    #[error("invalid norm sample value {value} at t = {t}")]
    InvalidNormSample { t: f64, value: f64 },

    /// The trilinear identities hold only for divergence-free fields.
    #[error("input field is not solenoidal (max spectral divergence {divergence:.3e})")]
    NotSolenoidal { divergence: f64 },

    /// Inequality inputs must vanish near the cell boundary.
    #[error("field does not vanish in the period/8 boundary margin (max {max:.3e} vs amplitude {amplitude:.3e})")]
    MarginViolation { max: f64, amplitude: f64 },

    /// An axis triple must be a permutation of (1, 2, 3).
    #[error("invalid axis triple {triple:?}: must be a permutation of (1, 2, 3)")]
    InvalidAxisTriple { triple: [usize; 3] },

    /// Advective CFL bound exceeded.
    #[error("CFL violation: dt = {dt:.3e} exceeds limit {limit:.3e} (max speed {max_speed:.3e})")]
    CflViolation { dt: f64, limit: f64, max_speed: f64 },

    /// Non-finite values appeared in the state: discrete blow-up.
    #[error("non-finite state at t = {t:.6}: discrete blow-up")]
    BlowUp { t: f64 },

    /// A time instant outside (or between) the recorded samples.
    #[error("time {t} does not match a recorded sample in [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    /// A trajectory without the data the requested computation needs.
    #[error("trajectory is missing required data: {0}")]
    MissingData(&'static str),

    /// Invalid step size or horizon.
    #[error("invalid time step parameters: {0}")]
    InvalidTimeStep(String),

    /// An empty or undersized collection where content is required.
    #[error("{0}")]
    EmptyInput(&'static str),

    /// An unrecognized test-field kind string.
    #[error("unknown test field kind {0:?} (expected taylor_green_2d, abc_flow, random_solenoidal or bump_compact)")]
    UnknownFieldKind(String),

    /// Snapshot (de)serialization failures.
    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
