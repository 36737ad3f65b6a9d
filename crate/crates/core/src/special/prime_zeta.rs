//! Prime zeta function via Möbius inversion of `log ζ`.

use num_complex::Complex64;

use super::zeta::{zeta, zeta_deriv, zeta_minus_one};
use super::{ln_1p, ComplexPoint, EvalTolerance, Evaluation};
use crate::error::Result;

/// Möbius function `μ(k)`.
pub fn mobius(mut k: u64) -> i8 {
    assert!(k >= 1, "mobius is defined on positive integers");
    let mut sign = 1i8;
    let mut p = 2;
    while p * p <= k {
        if k.is_multiple_of(p) {
            k /= p;
            if k.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if k > 1 {
        -sign
    } else {
        sign
    }
}

/// `log ζ(s)`. Near `σ = 1` the principal branch of `log ζ` is used; for
/// `|ζ - 1| < 1/2` the value comes from `ln(1 + (ζ - 1))` to keep digits.
pub(crate) fn log_zeta(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    let zm1 = zeta_minus_one(s, tol)?;
    let err = zm1.est_error / (zm1.value + 1.0).norm();
    if zm1.value.norm() < 0.5 {
        Ok(Evaluation::new(ln_1p(zm1.value), err))
    } else {
        Ok(Evaluation::new((zm1.value + 1.0).ln(), err))
    }
}

/// Upper bound for `Σ_{j ≥ k} |log ζ(js)|/j` and `Σ_{j ≥ k} |ζ'/ζ(js)|`.
fn remainder_bound(k: u64, sigma: f64) -> f64 {
    let ks = k as f64 * sigma;
    // |ζ(w) - 1| ≤ 2^{-σ_w}(1 + 2/(σ_w - 1)) for real part σ_w ≥ 2, and the
    // geometric decay in j contributes another factor ≤ 2.
    8.0 * (1.0 + ks) * 2f64.powf(-ks)
}

/// `ζ_ℙ(s) = Σ_p p^{-s} = Σ_{k ≥ 1} μ(k)/k · log ζ(ks)`.
pub fn prime_zeta(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    s.require_convergent("prime_zeta")?;
    let inner = tol.tightened(1e-2);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut k = 1u64;
    loop {
        let mu = mobius(k);
        if mu != 0 {
            let l = log_zeta(s.scale(k as f64), &inner)?;
            acc += l.value * (f64::from(mu) / k as f64);
            err += l.est_error / k as f64;
        }
        k += 1;
        let rest = remainder_bound(k, s.sigma) / k as f64;
        if k >= 2 && rest < 0.5 * tol.abs_tol {
            return Ok(Evaluation::new(acc, err + rest));
        }
    }
}

/// `ζ_ℙ'(s) = Σ_{k ≥ 1} μ(k) ζ'(ks)/ζ(ks)`.
pub fn prime_zeta_deriv(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    s.require_convergent("prime_zeta_deriv")?;
    let inner = tol.tightened(1e-2);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut k = 1u64;
    loop {
        let mu = mobius(k);
        if mu != 0 {
            let sk = s.scale(k as f64);
            let z = zeta(sk, &inner)?;
            let d = zeta_deriv(sk, &inner)?;
            acc += d.value / z.value * f64::from(mu);
            err += (d.est_error + z.est_error * (d.value / z.value).norm()) / z.value.norm();
        }
        k += 1;
        let rest = remainder_bound(k, s.sigma) * (k as f64 * s.sigma).max(1.0);
        if k >= 2 && rest < 0.5 * tol.abs_tol {
            return Ok(Evaluation::new(acc, err + rest));
        }
    }
}

/// `ψ_ℙ(s) = ζ_ℙ(s)/s + log(s - 1)`, the part of `ζ_ℙ(s)/s` that stays
/// analytic across `σ = 1`.
pub fn psi_prime_part(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    s.require_convergent("psi_prime_part")?;
    let z = s.to_complex();
    let p = prime_zeta(s, tol)?;
    Ok(Evaluation::new(p.value / z + (z - 1.0).ln(), p.est_error / z.norm()))
}
