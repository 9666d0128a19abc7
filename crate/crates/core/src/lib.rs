//! Numerical laboratory for hitting-time statistics of sequential
//! (nonautonomous) dynamical systems.
//!
//! The crate provides:
//!
//! - [`measures`]: phase-space points, grid densities, weighted point clouds,
//!   and the bounded-Lipschitz (Wasserstein–Kantorovich-like) distance on the
//!   circle, together with Lipschitz and W^{1,1} norms.
//! - [`systems`]: concrete map families (expanding circle maps, solenoidal
//!   skew products, a slowly converging counterexample family), orbit
//!   generation at full precision, and hitting times of small balls.
//! - [`transfer`]: Ulam discretization of transfer operators, sequential
//!   composition, equilibrium densities, convergence-to-equilibrium curves
//!   and loss-of-memory rates.
//! - [`meanfield`]: globally coupled expanding maps driven by a mean-field
//!   displacement, the self-consistent transfer operator, its fixed point,
//!   and the induced nonautonomous single-coordinate system.
//! - [`stats`]: log-log estimators tying everything together -- hitting-time
//!   scaling exponents, local dimensions of empirical measures, the
//!   exponent-vs-dimension comparison, and a Borel-Cantelli ratio diagnostic.
//!
//! Every Monte Carlo entry point takes an explicit seed and splits it
//! deterministically per trial, so results are reproducible and independent
//! of thread count.

#![forbid(unsafe_code)]

pub mod fitting;
pub mod measures;
pub mod meanfield;
pub mod seeding;
pub mod stats;
pub mod systems;
pub mod transfer;

pub use measures::{CirclePoint, EmpiricalMeasure, GridDensity, Point, SolenoidPoint};
