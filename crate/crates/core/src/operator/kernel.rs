//! Time-side assembly: `M[m][n] = ∫∫_{I×I} K_ε(t - τ) e_n(τ) conj(e_m(t)) dτ dt`.
//!
//! In `x = t - τ`, `y = t + τ` the square becomes `|x| + |y| ≤ L` with
//! Jacobian `1/2` and the integrand factors, so
//! `M[m][n] = (1/2L) ∫ K(x) e^{-iπ(n+m)x/L} I_{n-m}(x) dx` where
//! `I_d(x) = ∫_{|y| ≤ L-|x|} e^{iπdy/L} dy` is elementary. Only the outer
//! integral needs quadrature, on panels graded towards the kernel peak.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{IntervalSpec, OperatorTruncation, Route};
use crate::arith::GrowthFunction;
use crate::error::{Error, Result};
use crate::quad;
use crate::special::{ComplexPoint, EvalTolerance};
use crate::transform::TransformSpec;

/// Smallest `ε` accepted by the kernel route.
pub const MIN_KERNEL_EPSILON: f64 = 1e-3;

/// Largest order accepted by the kernel route.
pub const MAX_KERNEL_ORDER: usize = 256;

/// `K_ε(x) = (1/π) Re G(1 + ε + ix)`.
pub fn kernel(source: &GrowthFunction, epsilon: f64, x: f64) -> Result<f64> {
    kernel_with(&TransformSpec::new(source.clone()), epsilon, x, &EvalTolerance::default())
}

fn kernel_with(spec: &TransformSpec, epsilon: f64, x: f64, tol: &EvalTolerance) -> Result<f64> {
    check_epsilon(epsilon)?;
    let g = spec.evaluate(ComplexPoint::new(1.0 + epsilon, x), tol)?;
    Ok(g.value.re / PI)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon >= MIN_KERNEL_EPSILON) {
        return Err(Error::Domain(format!("kernel route needs epsilon >= {MIN_KERNEL_EPSILON}, got {epsilon}")));
    }
    Ok(())
}

/// Panel breakpoints on `[0, L]`: geometric from `ε/8` up to `w_max`, then
/// uniform with width `w_max`.
fn half_line_panels(length: f64, epsilon: f64, w_max: f64) -> Vec<f64> {
    let mut cuts = vec![0.0];
    let mut b = (epsilon / 8.0).min(w_max);
    while b < length && b - cuts[cuts.len() - 1] < w_max {
        cuts.push(b);
        b *= 2.0;
    }
    let mut last = *cuts.last().unwrap();
    while last + w_max < length {
        last += w_max;
        cuts.push(last);
    }
    cuts.push(length);
    cuts.dedup();
    cuts
}

/// Outer quadrature nodes and weights on `[-L, L]`, the two halves kept
/// separate because `I_d` has a kink at `x = 0`.
fn outer_rule(length: f64, epsilon: f64, order: usize) -> Vec<(f64, f64)> {
    let w_max = 0.25f64.min(length / (2 * order + 2) as f64);
    let cuts = half_line_panels(length, epsilon, w_max);
    let gl = quad::rule(16);
    let mut rule = Vec::with_capacity(2 * 16 * cuts.len());
    for seg in cuts.windows(2).rev() {
        rule.extend(gl.mapped(-seg[1], -seg[0]));
    }
    for seg in cuts.windows(2) {
        rule.extend(gl.mapped(seg[0], seg[1]));
    }
    rule
}

/// `I_d(x) = ∫_{-a}^{a} e^{iπdy/L} dy` with `a = L - |x|`.
fn inner_integral(length: f64, d: i64, x: f64) -> f64 {
    let a = length - x.abs();
    if d == 0 {
        return 2.0 * a;
    }
    let k = PI * d as f64 / length;
    2.0 * (k * a).sin() / k
}

/// Assembles `W_ε` for `S` on the time side.
pub fn assemble_kernel_route(
    source: &GrowthFunction,
    interval: IntervalSpec,
    epsilon: f64,
    order: usize,
) -> Result<OperatorTruncation> {
    let spec = TransformSpec::new(source.clone());
    let tol = EvalTolerance::default();
    assemble_kernel_route_with(source.label(), interval, epsilon, order, |x| kernel_with(&spec, epsilon, x, &tol))
}

/// Assembles the operator with an arbitrary even real kernel `K`.
pub fn assemble_kernel_route_with<F>(
    label: &str,
    interval: IntervalSpec,
    epsilon: f64,
    order: usize,
    kernel: F,
) -> Result<OperatorTruncation>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    check_epsilon(epsilon)?;
    if order > MAX_KERNEL_ORDER {
        return Err(Error::Contract(format!("kernel route supports N <= {MAX_KERNEL_ORDER}, got {order}")));
    }
    let length = interval.length();
    let rule = outer_rule(length, epsilon, order);
    let values: Vec<f64> = rule.par_iter().map(|&(x, _)| kernel(x)).collect::<Result<_>>()?;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("kernel is not finite at x = {}", rule[i].0)));
    }

    // E[p][d] = Σ_k A[p][k] B[k][d] over p = n + m and d = n - m; B is real,
    // so the real and imaginary parts of A go through separate real products.
    let span = 4 * order + 1;
    let shift = 2 * order as i64;
    let (mut a_re, mut a_im) = (DMatrix::zeros(span, rule.len()), DMatrix::zeros(span, rule.len()));
    for (k, &(x, w)) in rule.iter().enumerate() {
        let scale = w * values[k] / (2.0 * length);
        for p in 0..span {
            let (sin, cos) = (-PI * (p as i64 - shift) as f64 * x / length).sin_cos();
            a_re[(p, k)] = scale * cos;
            a_im[(p, k)] = scale * sin;
        }
    }
    let b = DMatrix::from_fn(rule.len(), span, |k, d| inner_integral(length, d as i64 - shift, rule[k].0));
    let (e_re, e_im) = (a_re * &b, a_im * &b);
    let e = |p: usize, d: usize| Complex64::new(e_re[(p, d)], e_im[(p, d)]);

    let side = 2 * order + 1;
    let mut entries = DMatrix::zeros(side, side);
    let mut max_imag = 0.0f64;
    for r in 0..side {
        for c in 0..side {
            let (m, n) = (r as i64 - order as i64, c as i64 - order as i64);
            let v = e((n + m + shift) as usize, (n - m + shift) as usize);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Numeric(format!("kernel route entry ({m}, {n}) is not finite")));
            }
            max_imag = max_imag.max(v.im.abs());
            entries[(r, c)] = v.re;
        }
    }
    let raw_asymmetry = (&entries - entries.transpose()).amax();
    let sym = (&entries + entries.transpose()) * 0.5;
    let mut out =
        OperatorTruncation::new(interval, epsilon, order, sym, label.to_string(), Route::KernelQuadrature, 0.0, 0.0);
    out.set_raw_defects(max_imag, raw_asymmetry);
    Ok(out)
}
