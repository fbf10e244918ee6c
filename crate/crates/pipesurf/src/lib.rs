//! Fourth-order compact finite-difference solver for Poisson-type equations
//! on the surfaces of pipe geometries.
//!
//! A pipe is built by sweeping a cross-section profile `R(θ, ω)` along a
//! smooth centerline `r_c(ω)`; the surface problem
//!
//! ```text
//!     −Δ̃₀ u + λ u = f
//! ```
//!
//! is discretized on a uniform (θ, ω) lattice with a compact scheme whose
//! truncation error is O(h⁴). The crate is organized bottom-up:
//!
//! * [`geometry`] — centerlines, moving frames, cross-sections, the pipe
//!   coordinate map, metric tensors, validity checks, mesh export.
//! * [`fields`] — analytic evaluation of every scheme coefficient on the
//!   grid, plus manufactured right-hand sides.
//! * [`discrete`] — grids, grid functions, difference operators, weighted
//!   inner products and norms.
//! * [`compact`] — the compact operators, the scheme blocks, and the
//!   compact right-hand side.
//! * [`solver`] — sparse assembly and direct/iterative linear solvers.
//! * [`harness`] — manufactured-solution convergence studies and the
//!   cross-section regularity sweep.

pub mod compact;
pub mod discrete;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod harness;
pub mod solver;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
