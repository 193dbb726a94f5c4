//! Typed error conditions shared across the solvers.
//!
//! Every failure mode the solvers can hit maps to one variant here, so the
//! CLI can translate them into stable exit codes and callers can match on
//! the physics that went wrong rather than on strings.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, WaveError>;

#[derive(Error, Debug)]
pub enum WaveError {
    /// A field contained NaN or infinite samples on input.
    #[error("non-finite field: {0}")]
    InvalidField(&'static str),

    /// Antiderivative (or another mean-sensitive operation) received a field
    /// with a zero mode that is too large to drop.
    #[error("field mean is not zero (|c0| = {c0:.3e})")]
    MeanNotZero { c0: f64 },

    /// Initial data violated the one-sided spectrum condition.
    #[error("{what} is not the trace of a holomorphic function (residual {residual:.3e})")]
    NotHolomorphic { what: &'static str, residual: f64 },

    /// The conformal map derivative came too close to zero.
    #[error("degenerate conformal map derivative: min |Z_alpha| = {min_abs:.3e}")]
    DegenerateMap { min_abs: f64 },

    /// Chord-arc floor violated: the interface is about to self-intersect.
    #[error("surface contact: chord-arc ratio {mu:.3e} below floor {floor:.3e} at t = {t}")]
    SurfaceContact { mu: f64, floor: f64, t: f64 },

    /// The Taylor coefficient dropped below its guaranteed lower bound, or
    /// |w - i| collapsed; both signal leaving the regular regime.
    #[error("Taylor degeneracy: min A1 = {a1_min:.12} at t = {t}")]
    TaylorDegeneracy { a1_min: f64, t: f64 },

    /// An iterative linear solve ran out of iterations.
    #[error("linear solver did not converge: residual {residual:.3e} after {iters} iterations")]
    SolverConvergence { residual: f64, iters: usize },

    /// The normal-form coordinate change lost monotonicity.
    #[error("coordinate map not monotone: min k' = {min_kprime:.3e}")]
    Monotonicity { min_kprime: f64 },

    /// Root finding for a composition failed to bracket or converge.
    #[error("interpolation failure: {0}")]
    Interpolation(String),

    /// A time step produced non-finite samples.
    #[error("numerical blow-up at t = {t}")]
    NumericalBlowup { t: f64 },

    /// Bad configuration file or command-line input.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WaveError {
    /// Stable process exit code for the CLI.
    ///
    /// 1 config/data, 2 blow-up, 3 surface contact, 4 solver convergence,
    /// 5 Taylor degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            WaveError::NumericalBlowup { .. } => 2,
            WaveError::SurfaceContact { .. } => 3,
            WaveError::SolverConvergence { .. } => 4,
            WaveError::TaylorDegeneracy { .. } => 5,
            _ => 1,
        }
    }
}
