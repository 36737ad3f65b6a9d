//! Euler–Maclaurin evaluation of `ζ` and `ζ'` on `σ > 1`.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::{ComplexPoint, EvalTolerance, Evaluation};
use crate::error::{Error, Result};

/// `B_{2k}/(2k)!` for `k = 1..=5`.
const BERNOULLI_OVER_FACTORIAL: [f64; 5] =
    [1.0 / 6.0 / 2.0, -1.0 / 30.0 / 24.0, 1.0 / 42.0 / 720.0, -1.0 / 30.0 / 40_320.0, 5.0 / 66.0 / 3_628_800.0];
const CORRECTION_TERMS: usize = 4;
/// Above this real part the Dirichlet series itself converges fast enough.
const DIRECT_SUM_SIGMA: f64 = 6.0;

struct Expansion {
    value: Complex64,
    bound: f64,
}

/// Euler–Maclaurin expansion with cut-off `n`. The sum starts at `first`
/// (1 for `ζ`, 2 for `ζ - 1`). With `deriv` set the expansion is
/// differentiated term by term.
fn euler_maclaurin(s: Complex64, n: usize, first: usize, deriv: bool) -> Expansion {
    let one = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in first..n {
        let ln_k = (k as f64).ln();
        let term = (-s * ln_k).exp();
        acc += if deriv { -term * ln_k } else { term };
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp(); // N^{-s}
    let sm1 = s - one;
    if deriv {
        acc += n_pow * nf * (-ln_n / sm1 - one / (sm1 * sm1));
        acc -= n_pow * ln_n * 0.5;
    } else {
        acc += n_pow * nf / sm1;
        acc += n_pow * 0.5;
    }
    // T_k = B_{2k}/(2k)! * s(s+1)...(s+2k-2) * N^{-s-2k+1}
    let mut rising = s; // s(s+1)...(s+2k-2)
    let mut inv_sum = one / s; // Σ 1/(s+j) over the same factors
    let mut n_factor = n_pow / nf; // N^{-s-2k+1}
    for (k, &coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate().take(CORRECTION_TERMS) {
        let term = rising * n_factor * coef;
        acc += if deriv { term * (inv_sum - ln_n) } else { term };
        let j = 2.0 * k as f64;
        rising *= (s + j + 1.0) * (s + j + 2.0);
        inv_sum += one / (s + j + 1.0) + one / (s + j + 2.0);
        n_factor /= nf * nf;
    }
    // First omitted term, scaled by |s + 2K + 1| / (σ + 2K + 1).
    let kk = 2.0 * CORRECTION_TERMS as f64;
    let omitted = (rising * n_factor).norm() * BERNOULLI_OVER_FACTORIAL[CORRECTION_TERMS].abs();
    let mut bound = omitted * (s + kk + 1.0).norm() / (s.re + kk + 1.0);
    if deriv {
        bound *= ln_n + inv_sum.norm() + 1.0;
    }
    Expansion { value: acc, bound }
}

/// Partial sums of the Dirichlet series from `first`, for large `σ`.
fn direct_sum(s: Complex64, first: usize, deriv: bool, tol: f64, max_terms: usize) -> Result<Expansion> {
    let sigma = s.re;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut k = first;
    loop {
        let ln_k = (k as f64).ln();
        let term = (-s * ln_k).exp();
        acc += if deriv { -term * ln_k } else { term };
        k += 1;
        // Σ_{n ≥ k} n^{-σ}(ln n)^d ≤ k^{1-σ}(ln k + 1)^d/(σ - 1) for σ ≥ 2.
        let kf = k as f64;
        let mut tail = kf.powf(1.0 - sigma) / (sigma - 1.0) + kf.powf(-sigma);
        if deriv {
            tail *= kf.ln() + 1.0;
        }
        if tail < tol {
            return Ok(Expansion { value: acc, bound: tail });
        }
        if k > max_terms {
            return Err(Error::Precision {
                message: format!("Dirichlet series at {s} did not converge within {max_terms} terms"),
                achieved: tail,
            });
        }
    }
}

fn evaluate(s: ComplexPoint, tol: &EvalTolerance, first: usize, deriv: bool, what: &str) -> Result<Evaluation> {
    s.require_convergent(what)?;
    let z = s.to_complex();
    if s.sigma >= DIRECT_SUM_SIGMA {
        let e = direct_sum(z, first, deriv, tol.abs_tol, tol.max_terms)?;
        return Ok(Evaluation::new(e.value, e.bound));
    }
    let mut n = 10usize.max(s.t.abs().ceil() as usize + 10).max(first + 1);
    if n > tol.max_terms {
        return Err(Error::Precision {
            message: format!("{what}({s}) needs at least {n} terms, budget is {}", tol.max_terms),
            achieved: f64::INFINITY,
        });
    }
    loop {
        let e = euler_maclaurin(z, n, first, deriv);
        if e.bound < tol.abs_tol {
            return Ok(Evaluation::new(e.value, e.bound));
        }
        if 2 * n > tol.max_terms {
            return Err(Error::Precision {
                message: format!("{what}({s}) needs more than {} terms", tol.max_terms),
                achieved: e.bound,
            });
        }
        n *= 2;
    }
}

/// `ζ(s)` for `σ > 1`.
pub fn zeta(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    evaluate(s, tol, 1, false, "zeta")
}

/// `ζ(s) - 1`, computed without cancellation for large `σ`.
pub fn zeta_minus_one(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    evaluate(s, tol, 2, false, "zeta")
}

/// `ζ'(s) = -Σ (ln n) n^{-s}` for `σ > 1`.
pub fn zeta_deriv(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    evaluate(s, tol, 2, true, "zeta_deriv")
}

/// Stieltjes constant `γ_m`, the limit of `Σ_{n ≤ N} (ln n)^m / n - (ln N)^{m+1}/(m+1)`,
/// accelerated by Euler–Maclaurin at `N = 1000`.
fn stieltjes_by_limit(m: usize) -> f64 {
    const N: usize = 1000;
    let nf = N as f64;
    let ln_n = nf.ln();
    let sum: f64 = (1..=N).rev().map(|k| (k as f64).ln().powi(m as i32) / k as f64).sum();
    let mut gamma = sum - ln_n.powi(m as i32 + 1) / (m as f64 + 1.0) - 0.5 * ln_n.powi(m as i32) / nf;

    // f(x) = (ln x)^m / x has f^{(j)}(x) = x^{-1-j} P_j(ln x) with
    // P_0 = L^m and P_{j+1} = P_j' - (1 + j) P_j.
    let mut poly = vec![0.0; m + 1];
    poly[m] = 1.0;
    let eval = |p: &[f64]| p.iter().rev().fold(0.0, |acc, c| acc * ln_n + c);
    for (k, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate().take(4) {
        let target = 2 * k + 1;
        let current = if k == 0 { 0 } else { 2 * k - 1 };
        for j in current..target {
            let mut next = vec![0.0; m + 1];
            for (i, c) in poly.iter().enumerate() {
                if i > 0 {
                    next[i - 1] += i as f64 * c;
                }
                next[i] -= (1 + j) as f64 * c;
            }
            poly = next;
        }
        gamma -= coef * nf.powi(-1 - target as i32) * eval(&poly);
    }
    gamma
}

/// Stieltjes constants `(γ₀, γ₁, γ₂)` of
/// `ζ(s) = 1/(s-1) + γ₀ - γ₁(s-1) + γ₂(s-1)²/2 - …`, computed once.
pub fn stieltjes_constants() -> (f64, f64, f64) {
    static CONSTANTS: OnceLock<(f64, f64, f64)> = OnceLock::new();
    *CONSTANTS.get_or_init(|| (stieltjes_by_limit(0), stieltjes_by_limit(1), stieltjes_by_limit(2)))
}

/// Inside this radius `ψ` is taken from the Stieltjes expansion.
pub const PSI_SERIES_RADIUS: f64 = 1e-3;

/// `ψ(s) = ζ(s)/s - 1/(s-1)`, the entire part left after removing the pole.
pub fn psi_entire(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    s.require_convergent("psi")?;
    let z = s.to_complex();
    let w = z - 1.0;
    if w.norm() < PSI_SERIES_RADIUS {
        let (g0, g1, g2) = stieltjes_constants();
        // Next Laurent coefficient is -γ₃/6 ≈ -3.4e-4.
        let err = 4e-4 * w.norm().powi(3) + 1e-15;
        let laurent = g0 - 1.0 - g1 * w + 0.5 * g2 * w * w;
        return Ok(Evaluation::new(laurent / (1.0 + w), err));
    }
    let zeta = zeta(s, tol)?;
    let value = zeta.value / z - 1.0 / w;
    Ok(Evaluation::new(value, zeta.est_error / z.norm() + 1e-16 * (1.0 / w).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tol() -> EvalTolerance {
        EvalTolerance::default()
    }

    /// Partial sum to `n` plus the integral tail `∫_n^∞ x^{-σ} dx` bracketed
    /// by the trapezoid correction, for real `σ`.
    fn real_oracle(sigma: f64, n: usize) -> f64 {
        let partial: f64 = (1..=n).rev().map(|k| (k as f64).powf(-sigma)).sum();
        let nf = n as f64;
        partial + nf.powf(1.0 - sigma) / (sigma - 1.0) - 0.5 * nf.powf(-sigma) + sigma / 12.0 * nf.powf(-sigma - 1.0)
    }

    #[test]
    fn zeta_two_is_basel() {
        let z = zeta(ComplexPoint::real(2.0), &tol()).unwrap();
        assert!((z.value.re - PI * PI / 6.0).abs() < 1e-12);
        assert!(z.value.im.abs() < 1e-15);
        assert!((z.value.re - 1.6449340668).abs() < 1e-10);
    }

    #[test]
    fn zeta_against_partial_sum_oracle() {
        for sigma in [1.001, 1.1, 1.5, 2.5, 4.0] {
            let expected = real_oracle(sigma, 200_000);
            let got = zeta(ComplexPoint::real(sigma), &tol()).unwrap().value.re;
            assert!((got - expected).abs() < 1e-9 * expected.max(1.0), "sigma={sigma}: {got} vs {expected}");
        }
        let z15 = zeta(ComplexPoint::real(1.5), &tol()).unwrap().value.re;
        assert!((z15 - 2.6123753487).abs() < 1e-9);
    }

    #[test]
    fn complex_zeta_against_brute_force() {
        // Euler–Maclaurin at a large cut-off, evaluated independently.
        let s = Complex64::new(1.3, 17.0);
        let big = euler_maclaurin(s, 20_000, 1, false).value;
        let got = zeta(s.into(), &tol()).unwrap().value;
        assert!((got - big).norm() < 1e-10);
        let big_d = euler_maclaurin(s, 20_000, 2, true).value;
        let got_d = zeta_deriv(s.into(), &tol()).unwrap().value;
        assert!((got_d - big_d).norm() < 1e-9);
    }

    #[test]
    fn direct_and_euler_maclaurin_agree_at_the_switch() {
        let s = Complex64::new(DIRECT_SUM_SIGMA, 3.0);
        let em = euler_maclaurin(s, 40, 2, false).value;
        let direct = direct_sum(s, 2, false, 1e-14, 1_000_000).unwrap().value;
        assert!((em - direct).norm() < 1e-13);
        let em = euler_maclaurin(s, 40, 2, true).value;
        let direct = direct_sum(s, 2, true, 1e-14, 1_000_000).unwrap().value;
        assert!((em - direct).norm() < 1e-13);
    }

    #[test]
    fn zeta_deriv_at_two() {
        let d = zeta_deriv(ComplexPoint::real(2.0), &tol()).unwrap().value;
        assert!((d.re + 0.9375482543).abs() < 1e-9);
        assert!(d.im.abs() < 1e-10);
    }

    #[test]
    fn zeta_deriv_matches_central_difference() {
        let h = 1e-5;
        for s in [Complex64::new(2.0, 0.0), Complex64::new(1.2, 5.0), Complex64::new(1.05, -30.0)] {
            let d = zeta_deriv(s.into(), &tol()).unwrap().value;
            let fp = zeta((s + h).into(), &tol()).unwrap().value;
            let fm = zeta((s - h).into(), &tol()).unwrap().value;
            let fd = (fp - fm) / (2.0 * h);
            assert!((d - fd).norm() < 1e-6, "s={s}: {d} vs {fd}");
        }
    }

    #[test]
    fn domain_and_precision_errors() {
        assert!(matches!(zeta(ComplexPoint::real(1.0), &tol()), Err(Error::Domain(_))));
        assert!(matches!(zeta(ComplexPoint::new(0.5, 3.0), &tol()), Err(Error::Domain(_))));
        let tight = EvalTolerance { abs_tol: 1e-10, max_terms: 100 };
        assert!(matches!(zeta(ComplexPoint::new(1.5, 5000.0), &tight), Err(Error::Precision { .. })));
    }

    #[test]
    fn stieltjes_constants_are_converged() {
        let (g0, g1, g2) = stieltjes_constants();
        assert!((g0 - 0.5772156649015329).abs() < 1e-14);
        assert!((g1 + 0.0728158454836767).abs() < 1e-13);
        assert!((g2 + 0.0096903631928723).abs() < 1e-12);
    }

    #[test]
    fn psi_values() {
        let p2 = psi_entire(ComplexPoint::real(2.0), &tol()).unwrap().value;
        assert!((p2.re + 0.1775329666).abs() < 1e-9);
        let (g0, _, _) = stieltjes_constants();
        let p = psi_entire(ComplexPoint::real(1.0 + 1e-6), &tol()).unwrap().value;
        assert!((p.re - (g0 - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn psi_limit_by_richardson() {
        // Independent route: ζ(s) - 1/(s-1) via a cancellation-free
        // Euler–Maclaurin variant, Richardson-extrapolated to s = 1.
        let entire_part = |eps: f64| -> f64 {
            let n = 50usize;
            let nf = n as f64;
            let s = 1.0 + eps;
            let partial: f64 = (1..n).map(|k| (k as f64).powf(-s)).sum();
            let pole_free = (-eps * nf.ln()).exp_m1() / eps;
            let corr = 0.5 * nf.powf(-s) + s / 12.0 * nf.powf(-s - 1.0)
                - s * (s + 1.0) * (s + 2.0) / 720.0 * nf.powf(-s - 3.0);
            let zeta_minus_pole = partial + pole_free + corr;
            // ψ = (ζ - 1/ε)/s - 1/(s(s-1)) + 1/(s-1) - 1/(s-1) rearranged:
            zeta_minus_pole / s - 1.0 / s
        };
        let (a, b) = (entire_part(2e-3), entire_part(1e-3));
        let extrapolated = 2.0 * b - a;
        assert!((extrapolated + 0.4227843351).abs() < 1e-5, "{extrapolated}");

        let vals: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|e| psi_entire(ComplexPoint::real(1.0 + e), &tol()).unwrap().value.re)
            .collect();
        for (v, eps) in vals.iter().zip([1e-2, 1e-3, 1e-4]) {
            // Compare at the rounded point actually evaluated.
            let eps = (1.0 + eps) - 1.0;
            assert!((v - entire_part(eps)).abs() < 1e-9, "eps={eps}: {v} vs {}", entire_part(eps));
        }
        let target = stieltjes_constants().0 - 1.0;
        let d: Vec<f64> = vals.iter().map(|v| (v - target).abs()).collect();
        assert!(d[0] > d[1] && d[1] > d[2]);
        let r1 = (vals[0] - vals[1]).abs() / (vals[1] - vals[2]).abs();
        assert!((8.0..12.5).contains(&r1), "successive differences shrink by {r1}");
    }

    #[test]
    fn reflection_symmetry() {
        let s = ComplexPoint::new(1.5, 3.0);
        let a = zeta(s, &tol()).unwrap().value;
        let b = zeta(s.conj(), &tol()).unwrap().value;
        assert!((a.conj() - b).norm() < 1e-14);
    }
}
