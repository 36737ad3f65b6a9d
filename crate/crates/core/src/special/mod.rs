//! Riemann zeta, the prime zeta function and their regular parts on `σ > 1`.
//!
//! All evaluators respect conjugation symmetry `F(s̄) = F(s)̄`; they are
//! undefined (domain error) on `σ ≤ 1`.

mod expint;
mod prime_zeta;
mod zeta;

pub(crate) use expint::exp_integral_e1;
pub use prime_zeta::{mobius, prime_zeta, prime_zeta_deriv, psi_prime_part};
pub use zeta::{psi_entire, stieltjes_constants, zeta, zeta_deriv, zeta_minus_one};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `s = σ + it`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub sigma: f64,
    pub t: f64,
}

impl ComplexPoint {
    pub const fn new(sigma: f64, t: f64) -> Self {
        Self { sigma, t }
    }

    pub const fn real(sigma: f64) -> Self {
        Self { sigma, t: 0.0 }
    }

    pub fn conj(self) -> Self {
        Self { sigma: self.sigma, t: -self.t }
    }

    pub fn scale(self, k: f64) -> Self {
        Self { sigma: k * self.sigma, t: k * self.t }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.sigma, self.t)
    }

    /// Rejects points outside the half plane `σ > 1`.
    pub fn require_convergent(self, what: &str) -> Result<()> {
        if !self.sigma.is_finite() || !self.t.is_finite() {
            return Err(Error::Domain(format!("{what}: non-finite argument {self}")));
        }
        if self.sigma <= 1.0 {
            return Err(Error::Domain(format!("{what} is evaluated only for sigma > 1, got {self}")));
        }
        Ok(())
    }
}

impl From<Complex64> for ComplexPoint {
    fn from(z: Complex64) -> Self {
        Self { sigma: z.re, t: z.im }
    }
}

impl std::fmt::Display for ComplexPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{:+}i", self.sigma, self.t)
    }
}

/// Accuracy target for series evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalTolerance {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for EvalTolerance {
    fn default() -> Self {
        Self { abs_tol: 1e-10, max_terms: 1_000_000 }
    }
}

impl EvalTolerance {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        let tol = Self { abs_tol, max_terms };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol <= 1e-4) {
            return Err(Error::Domain(format!("abs_tol must lie in (0, 1e-4], got {}", self.abs_tol)));
        }
        if self.max_terms < 100 {
            return Err(Error::Domain(format!("max_terms must be >= 100, got {}", self.max_terms)));
        }
        Ok(())
    }

    pub(crate) fn tightened(&self, factor: f64) -> Self {
        Self { abs_tol: self.abs_tol * factor, max_terms: self.max_terms }
    }
}

/// A value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub est_error: f64,
}

impl Evaluation {
    pub(crate) fn new(value: Complex64, est_error: f64) -> Self {
        Self { value, est_error }
    }
}

/// Principal `log(1 + z)` without cancellation for small `z`.
pub(crate) fn ln_1p(z: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
    let im = z.im.atan2(1.0 + z.re);
    Complex64::new(re, im)
}
