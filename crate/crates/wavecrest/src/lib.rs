//! # wavecrest
//!
//! A spectral laboratory for 2D free-surface gravity waves, built around
//! the conformal (Riemann-mapping) boundary formulation of the
//! irrotational Euler equations.
//!
//! The crate evolves the free surface through the pair of boundary traces
//! `(u, w)`, the conjugate velocity and conjugate acceleration in the
//! conformal parametrization, where every nonlocal operator reduces to
//! the flat Hilbert multiplier. A second, independent integrator evolves
//! the interface in Lagrangian coordinates with curve-dependent singular
//! integrals, and the two are compared as point sets. On top of the
//! solvers sit diagnostics for the structural facts the formulation
//! guarantees: positivity of the Taylor coefficient, conservation
//! monitors, the gravity-wave dispersion relation, and the quadratic/cubic
//! smallness of the normal-form transformed quantities.
//!
//! ## Modules
//!
//! * [`spectral`]: periodic FFT infrastructure, the flat Hilbert
//!   transform, projections, derivatives, dealiasing.
//! * [`curve`]: curve Hilbert transform, double-layer operators,
//!   commutator brackets, the operator-identity battery.
//! * [`c1c2`]: generic Calderon-commutator-type multilinear operators.
//! * [`riemann`]: the primary conformal-variable solver.
//! * [`lagrangian`]: the cross-validation integrator.
//! * [`normalform`]: the flattening coordinate change and the
//!   quadratic/cubic structure checks.
//! * [`driver`]: config files, CSV output, manifests, CLI commands.
//!
//! ## Example
//!
//! Rest stays at rest, and the Taylor coefficient never drops below one:
//!
//! ```
//! use wavecrest::riemann::{run, SolverConfig, InitKind, DtPolicy};
//!
//! let cfg = SolverConfig {
//!     n: 32,
//!     t_end: 0.2,
//!     dt: DtPolicy::Fixed(0.05),
//!     init: InitKind::Rest,
//!     ..Default::default()
//! };
//! let out = run(&cfg);
//! assert!(out.failure.is_none());
//! for rec in &out.records {
//!     assert!(rec.a1_min >= 1.0 - 1e-10);
//!     assert!(rec.energy.abs() < 1e-20);
//! }
//! ```

pub mod c1c2;
pub mod curve;
pub mod driver;
pub mod error;
pub mod interp;
pub mod lagrangian;
pub mod linalg;
pub mod normalform;
pub mod riemann;
pub mod spectral;

pub use error::{Result, WaveError};
