//! Numerical laboratory for nonlinear potential theory.
//!
//! The crate evaluates the objects that drive the singular behavior of
//! p-superharmonic functions at desk scale:
//!
//! - [`measure`] — finite nonnegative Radon measures (atoms, radial
//!   densities, grid densities) with exact ball-mass queries.
//! - [`wolff`] — Wolff potentials `W_{1,p}^mu(x, r)`, their singular-ratio
//!   normalizations, four-term decompositions and exclusion sets.
//! - [`capacity`] — variational p-capacities of discretized condensers,
//!   capacitary functions and distributions, plus the spherical closed form.
//! - [`thinness`] — dyadic thinness criteria (Wiener-type and
//!   singular-behavior type), set classification and the blow-up measure
//!   construction.
//! - [`plaplace`] — `-div(|grad u|^{p-2} grad u) = mu` with zero boundary
//!   data, radial (exact) and on grids (iterative).
//! - [`asymptotics`] — extraction of the singular constant `m`, the
//!   monotone `m(r)` ladder, rescaling analysis and point-charge
//!   conversions.
//! - [`cones`] — elementary symmetric polynomial cones, the cone index
//!   `p_Gamma`, and Hessian eigenvalue cone membership of sampled fields.
//! - [`cli`] — experiment orchestration, CSV/SVG emission, config parsing.
//!
//! Everything is deterministic: fixed seeds reproduce byte-identical CSV
//! output. Queries on immutable inputs are safe to run from many threads.

pub mod asymptotics;
pub mod capacity;
pub mod cli;
pub mod cones;
mod energy;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod measure;
pub mod plaplace;
mod quadrature;
pub mod thinness;
pub mod wolff;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
