//! Truncations of `W_ε f(t) = (1/π)∫_I f(τ) Re G(1 + ε + i(t - τ)) dτ` in the
//! exponential basis `e_n(t) = L^{-1/2} e^{2πint/L}` of `L²(I)`,
//! `I = [-L/2, L/2]`.
//!
//! Two independent assemblies are provided: [`assemble_kernel_route`]
//! integrates the kernel over `I × I`, [`assemble_frequency_route`] integrates
//! the multiplier `g(|u|)e^{-ε|u|}` against the Fourier windows of the basis.

mod frequency;
mod kernel;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::GrowthFunction;
use crate::error::{Error, Result};

pub use frequency::{assemble_frequency_route, default_cutoff, diagonal_sequence, FrequencySettings, MultiplierGrid};
pub use kernel::{assemble_kernel_route, assemble_kernel_route_with, kernel, MAX_KERNEL_ORDER, MIN_KERNEL_EPSILON};

/// Symmetry and realness tolerance for assembled truncations.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// The symmetric interval `I = [-L/2, L/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpec {
    length: f64,
}

impl IntervalSpec {
    pub fn new(length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Domain(format!("interval length must be positive, got {length}")));
        }
        Ok(Self { length })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Centre `2πn/L` of the Fourier window of `e_n`.
    pub fn frequency(&self, n: i64) -> f64 {
        2.0 * PI * n as f64 / self.length
    }

    /// `e_n(t)`, zero outside `I`.
    pub fn basis(&self, n: i64, t: f64) -> Complex64 {
        if t.abs() > 0.5 * self.length {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.length.sqrt().recip(), self.frequency(n) * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    KernelQuadrature,
    FrequencyFormula,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::KernelQuadrature => "kernel_quadrature",
            Route::FrequencyFormula => "frequency_formula",
        }
    }
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel" | "kernel_quadrature" => Ok(Route::KernelQuadrature),
            "frequency" | "frequency_formula" => Ok(Route::FrequencyFormula),
            _ => Err(Error::Parse(format!("unknown route {s:?}"))),
        }
    }
}

/// A `(2N+1)×(2N+1)` truncation `M[m][n] = ⟨W e_n, e_m⟩`, indices `-N..N`
/// stored at `0..2N`.
#[derive(Debug, Clone)]
pub struct OperatorTruncation {
    interval: IntervalSpec,
    epsilon: f64,
    order: usize,
    entries: DMatrix<f64>,
    source: String,
    route: Route,
    constant: f64,
    tail_bound: f64,
    max_imag: f64,
    raw_asymmetry: f64,
}

impl OperatorTruncation {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        interval: IntervalSpec,
        epsilon: f64,
        order: usize,
        entries: DMatrix<f64>,
        source: String,
        route: Route,
        constant: f64,
        tail_bound: f64,
    ) -> Self {
        Self {
            interval,
            epsilon,
            order,
            entries,
            source,
            route,
            constant,
            tail_bound,
            max_imag: 0.0,
            raw_asymmetry: 0.0,
        }
    }

    pub(crate) fn set_raw_defects(&mut self, max_imag: f64, asymmetry: f64) {
        self.max_imag = max_imag;
        self.raw_asymmetry = asymmetry;
    }

    pub fn interval(&self) -> IntervalSpec {
        self.interval
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn side(&self) -> usize {
        2 * self.order + 1
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn route(&self) -> Route {
        self.route
    }

    /// `A` in `Ψ = W - A·Id`; zero for `W` itself.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Bound on the error from modelling `g` by a constant past the cutoff.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Largest imaginary part seen before taking real parts.
    pub fn max_imag(&self) -> f64 {
        self.max_imag
    }

    /// `M[m][n]` for `m, n ∈ -N..N`.
    pub fn entry(&self, m: i64, n: i64) -> f64 {
        let k = self.order as i64;
        assert!(m.abs() <= k && n.abs() <= k, "index ({m}, {n}) outside -{k}..{k}");
        self.entries[((m + k) as usize, (n + k) as usize)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.entries.diagonal().iter().copied().collect()
    }

    /// `max |M[m][n] - M[n][m]|`, including any defect removed by
    /// symmetrising after assembly.
    pub fn asymmetry(&self) -> f64 {
        asymmetry(&self.entries).max(self.raw_asymmetry)
    }

    /// Largest entrywise difference to another truncation of the same shape.
    pub fn max_difference(&self, other: &OperatorTruncation) -> Result<f64> {
        if self.side() != other.side() {
            return Err(Error::Contract(format!(
                "cannot compare truncations of order {} and {}",
                self.order, other.order
            )));
        }
        Ok((&self.entries - &other.entries).amax())
    }

    /// CSV with a one-line header, one matrix row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# tauberlab-matrix v1, L={}, eps={}, N={}, source={}, route={}, A={}",
            self.interval.length,
            self.epsilon,
            self.order,
            self.source,
            self.route.as_str(),
            self.constant
        );
        let _ = writeln!(out, "# rows m = -{0}..{0}, columns n = -{0}..{0}, entry <W e_n, e_m>", self.order);
        for r in 0..self.side() {
            let row: Vec<String> = (0..self.side()).map(|c| format!("{:e}", self.entries[(r, c)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// `Ψ = W - A·Id`, recording `A`.
pub fn split_identity(w: &OperatorTruncation, constant: f64) -> OperatorTruncation {
    let mut out = w.clone();
    for i in 0..out.side() {
        out.entries[(i, i)] -= constant;
    }
    out.constant = w.constant + constant;
    out
}

/// Eigenvalues of a symmetric truncation, largest `|λ|` first.
pub fn spectrum(m: &OperatorTruncation) -> Result<Vec<f64>> {
    symmetric_spectrum(m.entries())
}

/// Eigenvalues of a symmetric matrix, largest `|λ|` first.
pub fn symmetric_spectrum(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::Contract(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    let defect = asymmetry(m);
    if defect > SYMMETRY_TOL {
        return Err(Error::Contract(format!("matrix is not symmetric (defect {defect:.3e})")));
    }
    let mut values: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
    Ok(values)
}

/// Successive differences of `W_ε` along a decreasing `ε` schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakLimitReport {
    pub source: String,
    pub length: f64,
    pub order: usize,
    pub epsilons: Vec<f64>,
    /// `Δ_k = max |M(ε_{k+1}) - M(ε_k)|`.
    pub deltas: Vec<f64>,
    /// `Δ_k / Δ_{k+1}`.
    pub ratios: Vec<f64>,
    /// Diagonal of the truncation at the smallest `ε`.
    pub final_diagonal: Vec<f64>,
    /// Every ratio reaches `1.5` per halving of `ε`.
    pub cauchy: bool,
}

/// Differences below this count as already converged.
const CONVERGED_DELTA: f64 = 1e-13;

impl WeakLimitReport {
    /// Recomputes the verdict from the stored differences.
    pub fn verdict(epsilons: &[f64], deltas: &[f64]) -> bool {
        deltas.windows(2).enumerate().all(|(k, d)| {
            if d[0] < CONVERGED_DELTA {
                return d[1] < CONVERGED_DELTA;
            }
            if d[1] < CONVERGED_DELTA {
                return true;
            }
            let halvings = (epsilons[k] / epsilons[k + 1]).log2();
            d[0] / d[1] >= 1.5f64.powf(halvings)
        })
    }
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.len() < 2 {
        return Err(Error::Contract("weak-limit schedule needs at least two values".into()));
    }
    if schedule.iter().any(|e| !(e.is_finite() && *e > 0.0)) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Contract(format!(
            "weak-limit schedule must be positive and strictly decreasing, got {schedule:?}"
        )));
    }
    Ok(())
}

/// Assembles `W_ε` on the frequency side for every `ε` in a strictly
/// decreasing positive schedule and checks the Cauchy-type decay of the
/// successive differences.
pub fn weak_limit_diagnostic(
    source: &GrowthFunction,
    interval: IntervalSpec,
    order: usize,
    schedule: &[f64],
) -> Result<WeakLimitReport> {
    check_schedule(schedule)?;
    let cutoff = default_cutoff(source, interval, order);
    let grid = MultiplierGrid::new(source, interval, cutoff)?;
    weak_limit_on_grid(&grid, source.label(), order, schedule)
}

/// [`weak_limit_diagnostic`] on a prebuilt grid.
pub fn weak_limit_on_grid(
    grid: &MultiplierGrid,
    label: &str,
    order: usize,
    schedule: &[f64],
) -> Result<WeakLimitReport> {
    check_schedule(schedule)?;
    let interval = grid.interval();
    let mats: Vec<OperatorTruncation> = schedule.par_iter().map(|&e| grid.assemble(e, order)).collect::<Result<_>>()?;
    let deltas: Vec<f64> = mats.windows(2).map(|w| w[1].max_difference(&w[0])).collect::<Result<_>>()?;
    let ratios = deltas.windows(2).map(|d| d[0] / d[1]).collect();
    let cauchy = WeakLimitReport::verdict(schedule, &deltas);
    Ok(WeakLimitReport {
        source: label.to_string(),
        length: interval.length(),
        order,
        epsilons: schedule.to_vec(),
        deltas,
        ratios,
        final_diagonal: mats.last().map(|m| m.diagonal()).unwrap_or_default(),
        cauchy,
    })
}
