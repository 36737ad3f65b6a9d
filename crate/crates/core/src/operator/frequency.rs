//! Frequency-side assembly: `M[m][n] = (1/2π)∫ g(|u|)e^{-ε|u|} ê_n(u) ê_m(u) du`.
//!
//! With `z = uL/2` and `ê_n(u) = L^{1/2} sin(z - πn)/(z - πn)` the integrand
//! is `L(-1)^{m+n} sin²z / ((z - πn)(z - πm))` times the multiplier. The
//! window part is entire, so only `g` needs care: cells where `S` jumps get
//! weights from the exact Legendre moments of `g`, everywhere else plain
//! Gauss–Legendre suffices. Past the cutoff `g` is replaced by its constant
//! tail model and the window integral is done exactly with `E₁`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{IntervalSpec, OperatorTruncation, Route};
use crate::arith::GrowthFunction;
use crate::error::{Error, Result};
use crate::quad;
use crate::special::exp_integral_e1;

const CELL_NODES: usize = 16;

/// Tuning for [`assemble_frequency_route`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrequencySettings {
    /// Cutoff `U` for the quadrature part. `None` picks [`default_cutoff`].
    pub cutoff: Option<f64>,
    /// Largest acceptable tail bound on any entry. `None` only reports it.
    pub tail_tolerance: Option<f64>,
}

/// Cutoff far enough past the top window centre `2πN/L` that the tail model
/// is accurate, capped at the range where `S` can be evaluated.
pub fn default_cutoff(source: &GrowthFunction, interval: IntervalSpec, order: usize) -> f64 {
    let top = interval.frequency(order as i64);
    (top + 40.0).max(60.0).min(source.u_max())
}

/// `g` folded into quadrature weights on `[0, U]`, reusable across `ε`,
/// the order `N` and the subtracted constant `A`.
#[derive(Debug, Clone)]
pub struct MultiplierGrid {
    interval: IntervalSpec,
    label: String,
    cutoff: f64,
    nodes: Vec<f64>,
    /// `∫ g·F ≈ Σ weights[i]·F(nodes[i])` for smooth `F`.
    weights: Vec<f64>,
    /// Same for `g ≡ 1`.
    plain: Vec<f64>,
    tail_value: f64,
    tail_deviation: f64,
}

impl MultiplierGrid {
    pub fn new(source: &GrowthFunction, interval: IntervalSpec, cutoff: f64) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::Domain(format!("cutoff must be positive and finite, got {cutoff}")));
        }
        if cutoff > source.u_max() {
            return Err(Error::TableExhausted { required: cutoff.exp().ceil() as u64, limit: source.x_max() as u64 });
        }
        let target = 0.1f64.min(PI / interval.length());
        let cells = (cutoff / target).ceil() as usize;
        let width = cutoff / cells as f64;
        let gl = quad::rule(CELL_NODES);
        let mut legendre = [[0.0; CELL_NODES]; CELL_NODES];
        for (j, &x) in gl.nodes().iter().enumerate() {
            quad::legendre_values(x, &mut legendre[j]);
        }

        let per_cell: Vec<[(f64, f64, f64); CELL_NODES]> = (0..cells)
            .into_par_iter()
            .map(|c| {
                let a = c as f64 * width;
                let b = if c + 1 == cells { cutoff } else { a + width };
                let mid = 0.5 * (a + b);
                let half = 0.5 * (b - a);
                let mut jumps = Vec::new();
                source.jumps_in(a, b, &mut jumps);
                jumps.retain(|&v| v < b);

                let mut out = [(0.0, 0.0, 0.0); CELL_NODES];
                if jumps.is_empty() {
                    for (j, (u, w)) in gl.mapped(a, b).enumerate() {
                        out[j] = (u, w * source.quadrature_ratio(u), w);
                    }
                    return out;
                }

                let mut moments = [0.0; CELL_NODES];
                let mut p = [0.0; CELL_NODES];
                let mut cuts = Vec::with_capacity(jumps.len() + 2);
                cuts.push(a);
                cuts.extend_from_slice(&jumps);
                cuts.push(b);
                for seg in cuts.windows(2) {
                    let (lo, hi) = (seg[0], seg[1]);
                    if hi <= lo {
                        continue;
                    }
                    let rel = (hi - lo) / (b - a);
                    let n = if rel > 0.2 {
                        16
                    } else if rel > 0.02 {
                        8
                    } else if rel > 0.002 {
                        4
                    } else {
                        2
                    };
                    for (u, w) in quad::rule(n).mapped(lo, hi) {
                        let gu = w * source.quadrature_ratio(u);
                        quad::legendre_values((u - mid) / half, &mut p);
                        for k in 0..CELL_NODES {
                            moments[k] += gu * p[k];
                        }
                    }
                }
                for (j, (u, w)) in gl.mapped(a, b).enumerate() {
                    let omega: f64 = (0..CELL_NODES).map(|k| (k as f64 + 0.5) * legendre[j][k] * moments[k]).sum();
                    out[j] = (u, gl.weights()[j] * omega, w);
                }
                out
            })
            .collect();

        let mut nodes = Vec::with_capacity(cells * CELL_NODES);
        let mut weights = Vec::with_capacity(cells * CELL_NODES);
        let mut plain = Vec::with_capacity(cells * CELL_NODES);
        for cell in per_cell {
            for (u, w, pw) in cell {
                nodes.push(u);
                weights.push(w);
                plain.push(pw);
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numeric("multiplier weights are not finite".into()));
        }
        let (tail_value, tail_deviation) = source.tail_model(cutoff);
        Ok(Self {
            interval,
            label: source.label().to_string(),
            cutoff,
            nodes,
            weights,
            plain,
            tail_value,
            tail_deviation,
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn interval(&self) -> IntervalSpec {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, epsilon: f64, order: usize) -> Result<()> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Domain(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        let top = self.interval.frequency(order as i64);
        if self.cutoff <= top {
            return Err(Error::Contract(format!(
                "cutoff {} does not clear the top window centre {top:.4} for N = {order}",
                self.cutoff
            )));
        }
        Ok(())
    }

    /// `L/2π · g_i e^{-εu_i} sin²z_i` with `g_i` the weight for `g - offset`.
    fn window_weights(&self, epsilon: f64, offset: f64) -> Vec<f64> {
        let half_l = 0.5 * self.interval.length();
        let scale = self.interval.length() / (2.0 * PI);
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.plain)
            .map(|((&u, &w), &p)| {
                let s = (u * half_l).sin();
                scale * (w - offset * p) * (-epsilon * u).exp() * s * s
            })
            .collect()
    }

    /// `K(c) = e^{-βc} E₁(β(U - c))` for `β ∈ {ε, ε - iL}` at every window
    /// centre `c_n`, `n = -N..N`.
    fn tail_kernels(&self, epsilon: f64, order: usize) -> [Vec<Complex64>; 2] {
        let u = self.cutoff;
        let betas = [Complex64::new(epsilon, 0.0), Complex64::new(epsilon, -self.interval.length())];
        betas.map(|beta| {
            (-(order as i64)..=order as i64)
                .map(|n| {
                    let c = self.interval.frequency(n);
                    if beta.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        (-beta * c).exp() * exp_integral_e1(beta * (u - c))
                    }
                })
                .collect()
        })
    }

    /// `∫_U^∞ e^{-εu} sin²(uL/2)/((u - c_a)(u - c_b)) du` from the
    /// precomputed kernels, indices into `-N..N`.
    fn tail_integral(&self, epsilon: f64, order: usize, kernels: &[Vec<Complex64>; 2], ia: usize, ib: usize) -> f64 {
        let u = self.cutoff;
        let ca = self.interval.frequency(ia as i64 - order as i64);
        let cb = self.interval.frequency(ib as i64 - order as i64);
        let betas = [Complex64::new(epsilon, 0.0), Complex64::new(epsilon, -self.interval.length())];
        let mut j = [Complex64::new(0.0, 0.0); 2];
        for (slot, (beta, k)) in betas.iter().zip(kernels).enumerate() {
            j[slot] = if ia == ib {
                (-beta * u).exp() / (u - ca) - beta * k[ia]
            } else if beta.norm() == 0.0 {
                Complex64::new(((u - cb) / (u - ca)).ln() / (ca - cb), 0.0)
            } else {
                (k[ia] - k[ib]) / (ca - cb)
            };
        }
        0.5 * (j[0].re - j[1].re)
    }

    /// `(2/πL)(1/(U - c) + 1/(U + c))e^{-εU}`, bounding the window mass of
    /// `e_n` past the cutoff.
    fn tail_mass(&self, epsilon: f64, n: i64) -> f64 {
        let u = self.cutoff;
        let c = self.interval.frequency(n);
        2.0 / (PI * self.interval.length()) * (1.0 / (u - c) + 1.0 / (u + c)) * (-epsilon * u).exp()
    }

    /// The full `(2N+1)²` truncation of `W_ε`.
    pub fn assemble(&self, epsilon: f64, order: usize) -> Result<OperatorTruncation> {
        self.check(epsilon, order)?;
        let side = 2 * order + 1;
        let half_l = 0.5 * self.interval.length();
        let a = self.window_weights(epsilon, 0.0);
        let b = DMatrix::from_fn(side, self.nodes.len(), |r, i| {
            let n = r as f64 - order as f64;
            1.0 / (self.nodes[i] * half_l - PI * n)
        });
        let mut ba = b.clone();
        for (i, mut col) in ba.column_iter_mut().enumerate() {
            col *= a[i];
        }
        let x = &ba * b.transpose();

        let kernels = self.tail_kernels(epsilon, order);
        let tail_scale = self.interval.length() / (2.0 * PI) * 4.0 / self.interval.length().powi(2);
        let g_tail = self.tail_value;
        let masses: Vec<f64> = (0..side).map(|r| self.tail_mass(epsilon, r as i64 - order as i64)).collect();
        let mut tail_bound = 0.0f64;
        let mut entries = DMatrix::zeros(side, side);
        for r in 0..side {
            for c in 0..side {
                let (rr, cr) = (side - 1 - r, side - 1 - c);
                let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                let tail = tail_scale
                    * g_tail
                    * (self.tail_integral(epsilon, order, &kernels, r, c)
                        + self.tail_integral(epsilon, order, &kernels, rr, cr));
                entries[(r, c)] = sign * (x[(r, c)] + x[(rr, cr)] + tail);
                tail_bound = tail_bound.max(self.tail_deviation * (masses[r] * masses[c]).sqrt());
            }
        }
        if let Some((r, c)) = first_non_finite(&entries) {
            return Err(Error::Numeric(format!(
                "frequency route entry ({}, {}) is not finite",
                r as i64 - order as i64,
                c as i64 - order as i64
            )));
        }
        let raw_asymmetry = (&entries - entries.transpose()).amax();
        let mut out = OperatorTruncation::new(
            self.interval,
            epsilon,
            order,
            (&entries + entries.transpose()) * 0.5,
            self.label.clone(),
            Route::FrequencyFormula,
            0.0,
            tail_bound,
        );
        out.set_raw_defects(0.0, raw_asymmetry);
        Ok(out)
    }

    /// `⟨(W_ε - A·Id)e_n, e_n⟩` and its tail bound for each `n`, computed
    /// directly with `h = g - A` so no cancellation against `A` occurs.
    pub fn diagonal(&self, epsilon: f64, constant: f64, ns: &[i64]) -> Result<Vec<(f64, f64)>> {
        let top = ns.iter().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0);
        self.check(epsilon, top)?;
        let half_l = 0.5 * self.interval.length();
        let a = self.window_weights(epsilon, constant);
        let kernels = self.tail_kernels(epsilon, top);
        let tail_scale = 2.0 / (PI * self.interval.length());
        let deviation = self.tail_deviation;
        let g_tail = self.tail_value - constant;
        ns.par_iter()
            .map(|&n| {
                let pn = PI * n as f64;
                let body: f64 = self
                    .nodes
                    .iter()
                    .zip(&a)
                    .map(|(&u, &w)| {
                        let z = u * half_l;
                        w * ((z - pn).powi(2).recip() + (z + pn).powi(2).recip())
                    })
                    .sum();
                let i = (n + top as i64) as usize;
                let j = (top as i64 - n) as usize;
                let tail = tail_scale
                    * g_tail
                    * (self.tail_integral(epsilon, top, &kernels, i, i)
                        + self.tail_integral(epsilon, top, &kernels, j, j));
                let value = body + tail;
                if !value.is_finite() {
                    return Err(Error::Numeric(format!("diagonal entry {n} is not finite")));
                }
                Ok((value, deviation * self.tail_mass(epsilon, n)))
            })
            .collect()
    }
}

fn first_non_finite(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Some((r, c));
            }
        }
    }
    None
}

/// Assembles `W_ε` on the frequency side.
pub fn assemble_frequency_route(
    source: &GrowthFunction,
    interval: IntervalSpec,
    epsilon: f64,
    order: usize,
    settings: FrequencySettings,
) -> Result<OperatorTruncation> {
    let cutoff = settings.cutoff.unwrap_or_else(|| default_cutoff(source, interval, order));
    let grid = MultiplierGrid::new(source, interval, cutoff)?;
    let m = grid.assemble(epsilon, order)?;
    if let Some(tol) = settings.tail_tolerance {
        if m.tail_bound() > tol {
            return Err(tail_error(source, interval, epsilon, order, m.tail_bound(), tol));
        }
    }
    Ok(m)
}

/// Precision error suggesting a cutoff whose tail bound meets `tol`.
fn tail_error(
    source: &GrowthFunction,
    interval: IntervalSpec,
    epsilon: f64,
    order: usize,
    achieved: f64,
    tol: f64,
) -> Error {
    let c = interval.frequency(order as i64);
    let l = interval.length();
    let bound = |u: f64| {
        let (_, dev) = source.tail_model(u);
        let mass = 2.0 / (PI * l) * (1.0 / (u - c) + 1.0 / (u + c)) * (-epsilon * u).exp();
        dev * mass
    };
    let mut u = c + 1.0;
    while bound(u) > tol && u < 1e7 {
        u *= 1.25;
    }
    let hint = if u > source.u_max() {
        format!("a cutoff near U = {u:.1}, beyond the evaluable range U <= {:.2}", source.u_max())
    } else {
        format!("a cutoff near U = {u:.1}")
    };
    Error::Precision {
        message: format!("frequency-route tail bound {achieved:.3e} exceeds {tol:.3e}; try {hint}"),
        achieved,
    }
}

/// `⟨Ψe_n, e_n⟩` for `n = 0..=n_max`, with `Ψ = W_ε - A·Id`.
pub fn diagonal_sequence(
    source: &GrowthFunction,
    interval: IntervalSpec,
    epsilon: f64,
    constant: f64,
    n_max: usize,
) -> Result<Vec<f64>> {
    let cutoff = default_cutoff(source, interval, n_max);
    let grid = MultiplierGrid::new(source, interval, cutoff)?;
    let ns: Vec<i64> = (0..=n_max as i64).collect();
    Ok(grid.diagonal(epsilon, constant, &ns)?.into_iter().map(|(v, _)| v).collect())
}
