//! Optimal constants and extremal functions for the zero-average
//! Poincaré-Sobolev quotient `‖∇u‖₂² / ‖u‖_p²` on the unit ball, an annulus
//! and the interval (-1,1), together with structural diagnostics of the
//! minimizers (axial symmetry, angular monotonicity, axial-derivative
//! positivity, nodal counts, antisymmetry and its breaking for large p).
//!
//! The crate is organized around a small discrete calculus:
//!
//! * [`geometry`] — quadrature grids for ball / annulus / interval plus the
//!   exact reflection permutations used by polarization and antisymmetry
//!   projections,
//! * [`fields`] — grid functions, integrals, L^p norms, the edge-sum
//!   Dirichlet energy and its adjoint Neumann Laplacian,
//! * [`variational`] — Rayleigh quotient, the auxiliary functional G, Nehari
//!   projection, Euler-Lagrange residuals and the second-variation probe,
//! * [`solver`] — preconditioned projected gradient descent over the
//!   zero-average space and its restricted subspaces, continuation in p and
//!   the antisymmetry-breaking search,
//! * [`polarization`] — two-point rearrangements and foliated-Schwarz
//!   certification,
//! * [`oracles`] — independent references: the p=2 eigen-ODE by shooting,
//!   the 1D interval extremal problem, the Sobolev constant and the
//!   Aubin-Talenti instanton quotient,
//! * [`diagnostics`] — symmetry reports for computed minimizers.

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod oracles;
pub mod polarization;
pub mod solver;
pub mod variational;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
