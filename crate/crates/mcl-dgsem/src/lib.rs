//! LGL-DGSEM solver for the compressible Euler equations with subcell
//! monolithic convex limiting (MCL).
//!
//! The discretization collocates a discontinuous Galerkin spectral element
//! method at Legendre-Gauss-Lobatto nodes, which yields summation-by-parts
//! operators and a natural decomposition of the volume term into subcell
//! fluxes. A compatible first-order Rusanov finite volume scheme shares the
//! same subcell interfaces, so the two can be hybridized interface by
//! interface. Limiting constrains the anti-diffusive flux at each interface
//! so that the low-order bar states stay inside local or global bounds,
//! pressure positivity is preserved, and (optionally) a semi-discrete
//! entropy inequality holds.
//!
//! Modules:
//! - [`basis`]: LGL quadrature and the SBP operator matrices.
//! - [`euler`]: state algebra, physical flux, wave speeds, entropy
//!   framework, and two-point numerical fluxes.
//! - [`semidisc`]: mesh, boundary conditions, and the semi-discrete
//!   operator (DG subcell fluxes, FV fluxes, bar states, blended RHS).
//! - [`limiter`]: the MCL stages (conservative, sequential, pressure,
//!   entropy) and limiting-factor diagnostics.
//! - [`timeint`]: SSP-RK3 time stepping with the bar-state CFL restriction.
//! - [`app`]: configuration, built-in benchmark cases, error/EOC harness,
//!   and the run driver.

pub mod app;
pub mod basis;
pub mod error;
pub mod euler;
pub mod limiter;
pub mod semidisc;
pub mod timeint;

pub use error::SolverError;
