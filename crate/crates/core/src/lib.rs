//! Solvers and verifiers for viscosity solutions of eikonal, stationary and
//! evolution Hamilton-Jacobi equations on grid domains carrying a
//! point-dependent norm (a Finsler structure).
//!
//! The pieces build on each other:
//!
//! - [`norm`], [`grid`], [`path`], [`distance`]: norm fields, grids, Finsler
//!   lengths and stencil-graph distance fields.
//! - [`subdiff`]: finite sub/superdifferential probes, local Lipschitz
//!   estimates and the mean value inequality check.
//! - [`eikonal`]: `||du||_x = 1` with Dirichlet data via the inf-convolution
//!   formula, plus its verification and ridge diagnostic.
//! - [`stationary`], [`builtins`]: `u + H(x, ||du||_x) = 0` by monotone fast
//!   sweeping from the constant subsolution.
//! - [`evolution`]: `u_t + H(t, x, ||u_x||_x) = 0` by an explicit monotone
//!   scheme, with a brute-force Hopf-Lax oracle.
//! - [`report`], [`suite`]: uniform verification reports and the named check
//!   registry.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod builtins;
pub mod distance;
pub mod eikonal;
pub mod error;
pub mod evolution;
pub mod expr;
pub mod grid;
pub mod io;
pub mod norm;
pub mod path;
pub mod report;
pub mod stationary;
pub mod subdiff;
pub mod suite;
pub(crate) mod upwind;

pub use distance::{distance_field, DistanceField, Stencil, StencilGraph};
pub use error::{Error, Result};
pub use grid::{Bounds, GridDomain, NodeRole, ScalarField};
pub use norm::{Covector, LocalNorm, NormField, NormKind};
pub use path::{path_length, PiecewisePath, Quadrature};
pub use report::VerificationReport;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
