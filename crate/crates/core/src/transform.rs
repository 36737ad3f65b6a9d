//! Laplace transforms `G(s) = ∫₀^∞ S(eᵘ)e^{-su} du` for `Re s > 1`.
//!
//! Closed forms cover every built-in [`GrowthFunction`]; the quadrature
//! oracle handles anything, including user closures, and serves as an
//! independent cross-check of the closed forms.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::{Evaluator, GrowthFunction, StepFunction};
use crate::error::{Error, Result};
use crate::quad;
use crate::special::{exp_integral_e1, prime_zeta, prime_zeta_deriv, zeta, ComplexPoint, EvalTolerance, Evaluation};

/// Default `u` cutoff for quadrature over prime-backed functions.
pub const DEFAULT_TRUNCATION: f64 = 18.0;

/// How a [`TransformSpec`] evaluates `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    ClosedFormIntegers,
    ClosedFormPrimes,
    ClosedFormWeightedPrimes,
    /// Elementary closed forms of the synthetic instances, and sums or
    /// multiples of closed forms.
    Analytic,
    StepSum,
    NumericQuadrature,
}

/// A Laplace transform together with the method used to evaluate it.
#[derive(Debug, Clone)]
pub struct TransformSpec {
    source: GrowthFunction,
    kind: TransformKind,
    truncation: f64,
    panels: Option<usize>,
}

impl TransformSpec {
    /// Picks the closed form when one exists and quadrature otherwise.
    pub fn new(source: GrowthFunction) -> Self {
        let kind = match source.evaluator() {
            Evaluator::Integers => TransformKind::ClosedFormIntegers,
            Evaluator::Primes(_) => TransformKind::ClosedFormPrimes,
            Evaluator::WeightedPrimes(_) => TransformKind::ClosedFormWeightedPrimes,
            Evaluator::Step(_) => TransformKind::StepSum,
            _ if has_closed_form(&source) => TransformKind::Analytic,
            _ => TransformKind::NumericQuadrature,
        };
        let truncation = DEFAULT_TRUNCATION.min(source.u_max());
        Self { source, kind, truncation, panels: None }
    }

    /// Forces the quadrature oracle with cutoff `truncation`. `panels = None`
    /// sizes panels from `Im s` at each evaluation.
    pub fn quadrature(source: GrowthFunction, truncation: f64, panels: Option<usize>) -> Result<Self> {
        check_truncation(&source, truncation)?;
        if panels == Some(0) {
            return Err(Error::Contract("quadrature needs at least one panel".into()));
        }
        Ok(Self { source, kind: TransformKind::NumericQuadrature, truncation, panels })
    }

    pub fn source(&self) -> &GrowthFunction {
        &self.source
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// `G(s)`. For quadrature the tail bound is folded into `est_error`.
    pub fn evaluate(&self, s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
        match self.kind {
            TransformKind::NumericQuadrature => {
                let panels = self.panels.unwrap_or_else(|| default_panels(self.truncation, s.t));
                let q = transform_quadrature(&self.source, s, self.truncation, panels)?;
                Ok(Evaluation::new(q.value, q.tail_bound))
            }
            _ => closed_form(&self.source, s, tol)
                .unwrap_or_else(|| Err(Error::Contract("no closed form for this source".into()))),
        }
    }
}

/// `G(s) = ζ(s)/s` for `π_ℕ`.
pub fn transform_integers(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    s.require_convergent("transform of the integer counting function")?;
    let z = zeta(s, &tol.tightened(0.5))?;
    let sc = s.to_complex();
    Ok(Evaluation::new(z.value / sc, z.est_error / sc.norm()))
}

/// `G(s) = ζ_ℙ(s)/s` for `π_ℙ`.
pub fn transform_primes(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    s.require_convergent("transform of the prime counting function")?;
    let p = prime_zeta(s, &tol.tightened(0.5))?;
    let sc = s.to_complex();
    Ok(Evaluation::new(p.value / sc, p.est_error / sc.norm()))
}

/// `G(s) = (ζ_ℙ(s) - s·ζ_ℙ'(s))/s²` for `π_ℙ(x)·ln x`.
pub fn transform_weighted_primes(s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    s.require_convergent("transform of the weighted prime counting function")?;
    let inner = tol.tightened(0.25);
    let p = prime_zeta(s, &inner)?;
    let dp = prime_zeta_deriv(s, &inner)?;
    let sc = s.to_complex();
    let s2 = sc * sc;
    let value = (p.value - sc * dp.value) / s2;
    let err = (p.est_error + sc.norm() * dp.est_error) / s2.norm();
    Ok(Evaluation::new(value, err))
}

/// Exact `Σ_j a_j x_j^{-s}/s` for a finite step function.
pub fn transform_step_sum(step: &StepFunction, s: ComplexPoint) -> Result<Evaluation> {
    s.require_convergent("transform of a step function")?;
    let sc = s.to_complex();
    let sum: Complex64 =
        step.breakpoints().iter().zip(step.jumps()).rev().map(|(&x, &a)| a * (-sc * x.ln()).exp()).sum();
    let err = f64::EPSILON * step.total() * step.breakpoints().len() as f64 / sc.norm();
    Ok(Evaluation::new(sum / sc, err))
}

/// Step sum for a finite truncation of an unbounded `S ≤ C·x`, with the
/// tail `C·X^{1-σ}/((σ-1)|s|)` past the last breakpoint `X` in `est_error`.
/// Fails when the tail exceeds `tol`, reporting the `X` that would suffice.
pub fn transform_truncated_step_sum(
    step: &StepFunction,
    s: ComplexPoint,
    growth_constant: f64,
    tol: f64,
) -> Result<Evaluation> {
    let exact = transform_step_sum(step, s)?;
    let x_last = step.breakpoints().last().copied().unwrap_or(1.0);
    let sm1 = s.sigma - 1.0;
    let abs_s = s.to_complex().norm();
    let tail = growth_constant * x_last.powf(-sm1) / (sm1 * abs_s);
    if tail > tol {
        let required = (growth_constant / (sm1 * abs_s * tol)).powf(1.0 / sm1);
        return Err(Error::Precision {
            message: format!("step-sum tail {tail:.3e} exceeds {tol:.3e}; breakpoints up to x = {required:.3e} needed"),
            achieved: tail,
        });
    }
    Ok(Evaluation::new(exact.value, exact.est_error + tail))
}

/// Result of the quadrature oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// `∫₀ᵁ S(eᵘ)e^{-su} du`.
    pub value: Complex64,
    /// Bound on the neglected `∫_U^∞`.
    pub tail_bound: f64,
}

impl Quadrature {
    /// Fails when the tail bound exceeds `tol`, suggesting a cutoff that
    /// would meet it for a source with growth constant `c`.
    pub fn require_tail(self, tol: f64, c: f64, s: ComplexPoint) -> Result<Self> {
        if self.tail_bound <= tol {
            return Ok(self);
        }
        let sm1 = s.sigma - 1.0;
        let mut u = 1.0;
        while quadrature_tail(c, sm1, u) > tol && u < 1e6 {
            u *= 1.05;
        }
        Err(Error::Precision {
            message: format!("quadrature tail {:.3e} exceeds {tol:.3e}; try a cutoff near U = {u:.1}", self.tail_bound),
            achieved: self.tail_bound,
        })
    }
}

fn quadrature_tail(c: f64, sm1: f64, u: f64) -> f64 {
    c * (-sm1 * u).exp() * (u + 1.0 / sm1)
}

/// Panel count keeping widths at most `0.25`, and below `10/|t|` for large
/// `|t|` so each oscillation period sees at least ten nodes.
pub fn default_panels(truncation: f64, t: f64) -> usize {
    let width = if t.abs() > 40.0 { 10.0 / t.abs() } else { 0.25 };
    ((truncation / width).ceil() as usize).max(1)
}

/// Composite 16-point Gauss–Legendre for `∫₀ᵁ S(eᵘ)e^{-su} du` on `panels`
/// equal panels. Panels are further split at the jumps of `S`, so each
/// piece has a smooth integrand.
pub fn transform_quadrature(
    source: &GrowthFunction,
    s: ComplexPoint,
    truncation: f64,
    panels: usize,
) -> Result<Quadrature> {
    s.require_convergent("quadrature transform")?;
    check_truncation(source, truncation)?;
    if panels == 0 {
        return Err(Error::Contract("quadrature needs at least one panel".into()));
    }
    let w = Complex64::new(s.sigma - 1.0, s.t);
    let width = truncation / panels as f64;
    let scale = w.norm() + 1.0;
    let pieces: Vec<Complex64> = (0..panels)
        .into_par_iter()
        .map(|k| {
            let a = k as f64 * width;
            let b = if k + 1 == panels { truncation } else { a + width };
            let mut cuts = vec![a];
            source.jumps_in(a, b, &mut cuts);
            if cuts.last() != Some(&b) {
                cuts.push(b);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for pair in cuts.windows(2) {
                let (lo, hi) = (pair[0], pair[1]);
                if hi <= lo {
                    continue;
                }
                let rel = (hi - lo) * scale;
                let n = if rel > 0.2 {
                    16
                } else if rel > 0.02 {
                    8
                } else if rel > 0.002 {
                    4
                } else {
                    2
                };
                for (u, wt) in quad::rule(n).mapped(lo, hi) {
                    acc += wt * source.quadrature_ratio(u) * (-w * u).exp();
                }
            }
            acc
        })
        .collect();
    let value: Complex64 = pieces.into_iter().sum();
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Numeric("quadrature produced a non-finite value".into()));
    }
    let tail_bound = quadrature_tail(source.growth_constant(), s.sigma - 1.0, truncation);
    Ok(Quadrature { value, tail_bound })
}

fn check_truncation(source: &GrowthFunction, truncation: f64) -> Result<()> {
    if !(truncation.is_finite() && truncation > 0.0) {
        return Err(Error::Domain(format!("cutoff must be positive and finite, got {truncation}")));
    }
    if truncation > source.u_max() {
        return Err(Error::TableExhausted { required: truncation.exp().ceil() as u64, limit: source.x_max() as u64 });
    }
    Ok(())
}

fn has_closed_form(source: &GrowthFunction) -> bool {
    match source.evaluator() {
        Evaluator::Closed(_) => false,
        Evaluator::Scaled(_, g) => has_closed_form(g),
        Evaluator::Sum(a, b) => has_closed_form(a) && has_closed_form(b),
        _ => true,
    }
}

/// `G(s)` in closed form, or `None` when `source` has no closed form.
pub fn closed_form(source: &GrowthFunction, s: ComplexPoint, tol: &EvalTolerance) -> Option<Result<Evaluation>> {
    if !has_closed_form(source) {
        return None;
    }
    Some(closed_form_inner(source, s, tol))
}

fn closed_form_inner(source: &GrowthFunction, s: ComplexPoint, tol: &EvalTolerance) -> Result<Evaluation> {
    s.require_convergent("Laplace transform")?;
    let w = Complex64::new(s.sigma - 1.0, s.t);
    let exact = |v: Complex64| Evaluation::new(v, 4.0 * f64::EPSILON * v.norm());
    Ok(match source.evaluator() {
        Evaluator::Linear { slope } => exact(*slope / w),
        Evaluator::LinearPlusSqrt { slope, sqrt_coeff } => exact(*slope / w + *sqrt_coeff / (w + 0.5)),
        Evaluator::LogOscillation { amplitude } => exact(1.0 / w + *amplitude / (w * w + 1.0)),
        // ∫ e^{-wu}/(1+u) du = e^w E₁(w)
        Evaluator::SlowLog => exact(1.0 / w + w.exp() * exp_integral_e1(w)),
        Evaluator::Integers => transform_integers(s, tol)?,
        Evaluator::Primes(_) => transform_primes(s, tol)?,
        Evaluator::WeightedPrimes(_) => transform_weighted_primes(s, tol)?,
        Evaluator::Step(step) => transform_step_sum(step, s)?,
        Evaluator::Scaled(c, g) => {
            let e = closed_form_inner(g, s, tol)?;
            Evaluation::new(*c * e.value, c.abs() * e.est_error)
        }
        Evaluator::Sum(a, b) => {
            let ea = closed_form_inner(a, s, tol)?;
            let eb = closed_form_inner(b, s, tol)?;
            Evaluation::new(ea.value + eb.value, ea.est_error + eb.est_error)
        }
        Evaluator::Closed(_) => unreachable!("checked by has_closed_form"),
    })
}
