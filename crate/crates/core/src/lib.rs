//! Numerical harmonic analysis on the unit disc and the infinite torus.
//!
//! The crate is organised around the L¹ dilation inequality for analytic
//! functions on the disc,
//!
//! ```text
//! ‖f_r − f_ϱ‖₁ ≤ 2 √(‖f_ϱ‖₁² − ‖f_r‖₁²),   0 ≤ r ≤ ϱ < 1,
//! ```
//!
//! and the machinery around it:
//!
//! * [`circle`]: polynomials standing in for analytic functions, circle
//!   sampling and trapezoidal L¹/L² norms of dilations.
//! * [`blaschke`]: zeros, finite Blaschke products and the factorization
//!   `f = g·h` behind the inequality, with a step-by-step trace.
//! * [`lemma`]: direct evaluators of the inequality and its weakened
//!   `2√2` form, radial-mean diagnostics and a harmonic negative control.
//! * [`extremal`]: Nelder–Mead search for the best constant.
//! * [`polytorus`]: trigonometric polynomials on `T^∞`, die Abschnitte and
//!   the slice embedding.
//! * [`measures`]: atoms-plus-density measures on the circle, Poisson
//!   extensions and Poisson-product chain sequences.

pub mod blaschke;
pub mod circle;
pub mod error;
pub mod extremal;
pub mod lemma;
pub mod measures;
pub mod polytorus;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Version string embedded in every output artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
