use num_complex::Complex64;

use super::zeta::stieltjes_constants;

/// Exponential integral `E₁(w) = ∫_w^∞ e^{-t}/t dt` for `Re w ≥ 0`, `w ≠ 0`,
/// continued to the imaginary axis.
pub(crate) fn exp_integral_e1(w: Complex64) -> Complex64 {
    debug_assert!(w.re >= 0.0 && w.norm() > 0.0, "E1 needs Re w >= 0, w != 0, got {w}");
    if w.norm() < 2.0 {
        // -γ - ln w - Σ_{k≥1} (-w)^k / (k·k!)
        let (gamma, _, _) = stieltjes_constants();
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..200 {
            term *= -w / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.norm() < 1e-17 * sum.norm().max(1e-300) {
                break;
            }
        }
        -gamma - w.ln() - sum
    } else {
        // Modified Lentz on e^{-w}/(w + 1 - 1²/(w + 3 - 2²/(w + 5 - …))).
        let tiny = 1e-300;
        let mut b = w + 1.0;
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..20_000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (d * an + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h * (-w).exp()
    }
}
