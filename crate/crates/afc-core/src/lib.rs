//! Edge-based algebraic flux correction (AFC) solvers for nonlinear
//! hyperbolic conservation laws on uniform P1/Q1 finite element meshes.
//!
//! The building blocks are organized bottom-up:
//!
//! * [`mesh`]: uniform line/quad meshes and the algebraic operators
//!   (lumped/consistent masses, discrete gradient vectors).
//! * [`model`]: hyperbolic systems: fluxes, wave speed bounds, entropy
//!   pairs, entropy variables/potentials/Hessians, admissible sets.
//! * [`system`]: the edge system the solvers actually run on, including
//!   ghost nodes for wall/inflow boundaries.
//! * [`low_order`]: algebraic Lax–Friedrichs viscosities, bar states and
//!   the invariant-domain-preserving low-order scheme.
//! * [`target`]: high-order target fluxes (stabilized Galerkin, Roe).
//! * [`limiter`]: monolithic convex limiting plus the limiter-based
//!   entropy fixes (semi-discrete, fully discrete explicit/implicit) and
//!   the comparison artificial-viscosity fix.
//! * [`integrator`]: forward Euler / Heun stages, CFL control, the
//!   iterative final-stage correction.
//! * [`reference`]: analytic and sampled reference solutions.
//! * [`diagnostics`]: error norms, EOC, conservation/entropy audits.
//! * [`bench`]: the benchmark registry and run orchestration shared by
//!   the CLI and the browser demo.

pub mod algebra;
pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod limiter;
pub mod low_order;
pub mod mesh;
pub mod model;
pub mod reference;
pub mod system;
pub mod target;

pub use error::SolverError;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, SolverError>;
