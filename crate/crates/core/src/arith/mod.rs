//! Counting functions and the non-decreasing functions `S` fed to the
//! Tauberian machinery.

mod growth;
mod sieve;

pub use growth::{Evaluator, GrowthFunction, StepFunction, INTEGER_JUMP_CUTOFF};
pub use sieve::{
    cache_file, default_cache_dir, CacheStatus, PrimeTable, CACHE_DIR_ENV, CACHE_MAGIC, CACHE_VERSION, DEFAULT_HARD_CAP,
};

use crate::error::{Error, Result};

/// `π_ℕ(x) = ⌊x⌋`, the number of positive integers `≤ x`.
pub fn count_integers(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("count_integers needs finite x >= 0, got {x}")));
    }
    Ok(x.floor())
}

/// `π_ℙ(x)`.
pub fn count_primes(x: f64, table: &PrimeTable) -> Result<u64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("count_primes needs x >= 0, got {x}")));
    }
    table.count(x)
}

/// `π_ℙ(x)·ln x`.
pub fn chebyshev_weighted(x: f64, table: &PrimeTable) -> Result<f64> {
    if x.is_nan() || x < 1.0 {
        return Err(Error::Domain(format!("chebyshev_weighted needs x >= 1, got {x}")));
    }
    Ok(table.count(x)? as f64 * x.ln())
}

/// `g(u) = S(eᵘ)/eᵘ`.
pub fn normalized_ratio(s: &GrowthFunction, u: f64) -> Result<f64> {
    s.ratio(u)
}
