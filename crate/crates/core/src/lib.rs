//! Numerical laboratory for the operator form of the Wiener–Ikehara
//! Tauberian theorem.
//!
//! A non-decreasing function `S` on `[1, ∞)` with `S(x) ≤ C·x` has a Laplace
//! transform `G(s) = ∫₀^∞ S(eᵘ)e^{-su} du` for `Re s > 1`. Its real part on the
//! line `σ = 1 + ε` is the convolution kernel of an operator `W_ε` on `L²(I)`
//! for a symmetric interval `I`. As `ε → 0` these operators converge weakly to
//! `A·Id + Ψ`, and `Ψ` is compact exactly when `S(eᵘ)/eᵘ → A`.
//!
//! The crate is organised bottom-up:
//!
//! * [`arith`]: counting functions, a cached segmented prime sieve and the
//!   [`GrowthFunction`] abstraction for `S`.
//! * [`special`]: `ζ`, `ζ'`, the prime zeta function and the regular parts
//!   left after removing the singularity at `s = 1`.
//! * [`transform`]: closed-form and brute-force Laplace transforms.
//! * [`operator`]: matrix truncations of `W_ε` in the exponential basis,
//!   assembled along two independent routes, plus spectral diagnostics.
//! * [`tauber`]: the theorem-level experiments and the prime number theorem
//!   pipeline.

pub mod arith;
pub mod error;
pub mod operator;
pub mod quad;
pub mod special;
pub mod tauber;
pub mod transform;

pub use arith::{GrowthFunction, PrimeTable, StepFunction};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use operator::{IntervalSpec, OperatorTruncation, Route};
pub use special::{ComplexPoint, EvalTolerance, Evaluation};
pub use tauber::{ExperimentReport, ExperimentSettings};
pub use transform::TransformSpec;

/// Version string embedded in every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifier of the JSON report schema.
pub const REPORT_SCHEMA: &str = "tauberlab/1";
