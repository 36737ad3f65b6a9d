//! Tauberian experiments on top of the operator truncations.
//!
//! The forward experiment starts from a known limit `A` of `g(u) = S(eᵘ)/eᵘ`
//! and checks that the diagonal of `Ψ = W - A·Id` decays. The converse
//! experiment estimates `A` from the high-frequency diagonal of `W` alone and
//! then checks that `g` actually approaches it. Both verdicts are recorded in
//! every report so their agreement can be read off directly.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arith::{GrowthFunction, PrimeTable, StepFunction};
use crate::error::{Error, Result};
use crate::operator::{
    default_cutoff, spectrum, split_identity, weak_limit_on_grid, IntervalSpec, MultiplierGrid, WeakLimitReport,
};
use crate::quad::golden_section_min;
use crate::{REPORT_SCHEMA, TOOL_VERSION};

/// Knobs shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub length: f64,
    pub order: usize,
    pub u_max: f64,
    pub epsilon_schedule: Vec<f64>,
    /// Band maximum of `|⟨Ψe_n, e_n⟩|` below which the diagonal counts as decayed.
    pub decay_threshold: f64,
    /// Largest `|g(u) - A|` on `[0.8·u_max, u_max]` accepted as convergence.
    pub ratio_threshold: f64,
    /// `ε` of the truncation whose spectrum is reported.
    pub spectral_epsilon: f64,
    pub spectral_count: usize,
    pub ratio_points: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            length: 8.0 * PI,
            order: 64,
            u_max: 18.0,
            epsilon_schedule: vec![0.4, 0.2, 0.1, 0.05],
            decay_threshold: 0.02,
            ratio_threshold: 0.05,
            spectral_epsilon: 0.05,
            spectral_count: 20,
            ratio_points: 40,
        }
    }
}

impl ExperimentSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("u_max", self.u_max),
            ("decay_threshold", self.decay_threshold),
            ("ratio_threshold", self.ratio_threshold),
            ("spectral_epsilon", self.spectral_epsilon),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.order == 0 {
            return Err(Error::Domain("order must be at least 1".into()));
        }
        if self.ratio_points < 2 {
            return Err(Error::Domain("ratio table needs at least two points".into()));
        }
        Ok(())
    }

    fn interval(&self) -> Result<IntervalSpec> {
        IntervalSpec::new(self.length)
    }

    /// Indices `n ∈ [⌈N/2⌉, N]` whose diagonals decide the verdicts.
    pub fn band(&self) -> (usize, usize) {
        (self.order.div_ceil(2), self.order)
    }
}

/// Largest order whose top window centre `2πN/L` stays below `u_max`.
pub fn order_for_range(length: f64, u_max: f64) -> usize {
    (u_max * length / (2.0 * PI)).floor() as usize
}

/// How `A` was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    /// `declared` or `band_minimax`.
    pub method: String,
    /// Median of the band diagonal of `W`, reported alongside the minimax.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
    /// `W` diagonal over the band, the input of the estimate.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub band_diagonal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSequence {
    pub n: Vec<i64>,
    /// `⟨Ψe_n, e_n⟩` at `ε = 0`.
    pub values: Vec<f64>,
    pub tail_bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RatioTable {
    pub u: Vec<f64>,
    pub g: Vec<f64>,
}

impl RatioTable {
    fn sample(source: &GrowthFunction, us: Vec<f64>) -> Result<Self> {
        let g = us.iter().map(|&u| source.ratio(u)).collect::<Result<_>>()?;
        Ok(Self { u: us, g })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,g\n");
        for (u, g) in self.u.iter().zip(&self.g) {
            let _ = writeln!(out, "{u:e},{g:e}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub value: bool,
    pub threshold: f64,
    /// The quantity compared against the threshold.
    pub statistic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub diag_decay: Verdict,
    pub ratio_limit: Verdict,
    /// Both sides of the theorem agree.
    pub consistent: bool,
}

/// Exact `π_ℙ(x)·ln x/x` at a round `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub x: u64,
    pub count: u64,
    pub ratio: f64,
}

/// A window `[u_start, u_start + Δu]` on which `h = g - A ≥ threshold/2`
/// follows from monotonicity of `S` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub threshold: f64,
    pub u_start: f64,
    pub delta_u: f64,
    pub g_start: f64,
    /// `g(u_start)e^{-Δu} - A`, the certified lower bound for `h`.
    pub certified_bound: f64,
    /// Separate excursions of `h` above the threshold found in the scan.
    pub excursions: usize,
    /// Smallest certified `Δu` over all excursions.
    pub uniform_delta_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub tool_version: String,
    pub experiment: String,
    pub source: String,
    pub length: f64,
    pub order: usize,
    pub u_max: f64,
    pub epsilon_schedule: Vec<f64>,
    pub band: (usize, usize),
    pub a_estimate: ConstantEstimate,
    pub diagonal: DiagonalSequence,
    pub spectral_epsilon: f64,
    /// Largest `|λ|` of `Ψ` at `spectral_epsilon`, descending.
    pub spectral_tail: Vec<f64>,
    pub ratio_table: RatioTable,
    /// Samples on `[0.8·u_max, u_max]` behind the ratio verdict.
    pub ratio_window: RatioTable,
    pub verdicts: Verdicts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak_limit: Option<WeakLimitReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<Checkpoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Effective configuration of the run, filled in by the caller.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl ExperimentReport {
    /// Verdicts derived from the stored arrays.
    pub fn recompute_verdicts(&self) -> Verdicts {
        verdicts(
            &self.diagonal,
            self.band,
            &self.ratio_window,
            self.a_estimate.value,
            self.verdicts.diag_decay.threshold,
            self.verdicts.ratio_limit.threshold,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(format!("report serialisation: {e}")))
    }

    pub fn diagonal_csv(&self) -> String {
        let mut out = String::from("n,psi_diag,tail_bound\n");
        for ((n, v), b) in self.diagonal.n.iter().zip(&self.diagonal.values).zip(&self.diagonal.tail_bounds) {
            let _ = writeln!(out, "{n},{v:e},{b:e}");
        }
        out
    }

    /// Writes the JSON report through a temporary file and a rename.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }
}

/// Writes `bytes` to `path` so that readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Contract(format!("{} is not a file path", path.display())))?;
    let at = |e: std::io::Error| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())));
    std::fs::create_dir_all(dir).map_err(at)?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes).map_err(at)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        at(e)
    })
}

fn verdicts(
    diagonal: &DiagonalSequence,
    band: (usize, usize),
    window: &RatioTable,
    constant: f64,
    decay_threshold: f64,
    ratio_threshold: f64,
) -> Verdicts {
    let band_max = diagonal
        .n
        .iter()
        .zip(&diagonal.values)
        .filter(|(n, _)| (band.0 as i64..=band.1 as i64).contains(n))
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    let ratio_dev = window.g.iter().fold(0.0f64, |m, g| m.max((g - constant).abs()));
    let diag_decay = Verdict { value: band_max < decay_threshold, threshold: decay_threshold, statistic: band_max };
    let ratio_limit = Verdict { value: ratio_dev < ratio_threshold, threshold: ratio_threshold, statistic: ratio_dev };
    Verdicts { diag_decay, ratio_limit, consistent: diag_decay.value == ratio_limit.value }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn ratio_grid(u_max: f64, points: usize) -> Vec<f64> {
    let lo = 1000f64.ln().min(0.5 * u_max);
    (0..points).map(|i| lo + (u_max - lo) * i as f64 / (points - 1) as f64).collect()
}

fn window_grid(u_max: f64) -> Vec<f64> {
    (0..=40).map(|i| u_max * (0.8 + 0.2 * i as f64 / 40.0)).collect()
}

enum Constant {
    Declared(f64),
    Estimate,
}

fn run(
    source: &GrowthFunction,
    constant: Constant,
    settings: &ExperimentSettings,
    experiment: &str,
) -> Result<ExperimentReport> {
    settings.validate()?;
    if settings.u_max > source.u_max() {
        return Err(Error::TableExhausted {
            required: settings.u_max.exp().ceil() as u64,
            limit: source.x_max() as u64,
        });
    }
    let interval = settings.interval()?;
    let order = settings.order;
    let cutoff = default_cutoff(source, interval, order);
    let grid = MultiplierGrid::new(source, interval, cutoff)?;
    let band = settings.band();

    let a_estimate = match constant {
        Constant::Declared(a) => {
            ConstantEstimate { value: a, method: "declared".into(), median: None, band_diagonal: Vec::new() }
        }
        Constant::Estimate => {
            let ns: Vec<i64> = (band.0 as i64..=band.1 as i64).collect();
            let w: Vec<f64> = grid.diagonal(0.0, 0.0, &ns)?.into_iter().map(|(v, _)| v).collect();
            let worst = |a: f64| w.iter().fold(0.0f64, |m, d| m.max((d - a).abs()));
            let hi = 2.0 * source.growth_constant();
            let a = golden_section_min(worst, 0.0, hi, 1e-12);
            ConstantEstimate { value: a, method: "band_minimax".into(), median: Some(median(&w)), band_diagonal: w }
        }
    };
    let a = a_estimate.value;

    let ns: Vec<i64> = (0..=order as i64).collect();
    let diag = grid.diagonal(0.0, a, &ns)?;
    let diagonal = DiagonalSequence {
        n: ns,
        values: diag.iter().map(|d| d.0).collect(),
        tail_bounds: diag.iter().map(|d| d.1).collect(),
    };

    let psi = split_identity(&grid.assemble(settings.spectral_epsilon, order)?, a);
    let mut spectral_tail: Vec<f64> = spectrum(&psi)?.into_iter().map(f64::abs).collect();
    spectral_tail.truncate(settings.spectral_count);

    let weak_limit = if settings.epsilon_schedule.is_empty() {
        None
    } else {
        Some(weak_limit_on_grid(&grid, source.label(), order, &settings.epsilon_schedule)?)
    };

    let ratio_table = RatioTable::sample(source, ratio_grid(settings.u_max, settings.ratio_points))?;
    let ratio_window = RatioTable::sample(source, window_grid(settings.u_max))?;
    let verdicts = verdicts(&diagonal, band, &ratio_window, a, settings.decay_threshold, settings.ratio_threshold);
    log::info!(
        "{experiment} {}: A = {a:.6}, band max {:.3e}, ratio deviation {:.3e}",
        source.label(),
        verdicts.diag_decay.statistic,
        verdicts.ratio_limit.statistic
    );

    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.into(),
        tool_version: TOOL_VERSION.into(),
        experiment: experiment.into(),
        source: source.label().into(),
        length: settings.length,
        order,
        u_max: settings.u_max,
        epsilon_schedule: settings.epsilon_schedule.clone(),
        band,
        a_estimate,
        diagonal,
        spectral_epsilon: settings.spectral_epsilon,
        spectral_tail,
        ratio_table,
        ratio_window,
        verdicts,
        weak_limit,
        checkpoints: Vec::new(),
        witness: None,
        config: serde_json::Value::Null,
    })
}

/// Forward direction: with `A = lim g` known, does `⟨Ψe_n, e_n⟩` decay?
/// `constant = None` takes the limit declared by `S`.
pub fn forward_experiment(
    source: &GrowthFunction,
    constant: Option<f64>,
    settings: &ExperimentSettings,
) -> Result<ExperimentReport> {
    let a = constant
        .or_else(|| source.known_limit())
        .ok_or_else(|| Error::Contract(format!("{} has no declared limit; pass A explicitly", source.label())))?;
    settings.validate()?;
    let g_top = source.ratio(settings.u_max)?;
    if (g_top - a).abs() >= 0.1 {
        return Err(Error::Contract(format!("g(u_max) = {g_top:.4} is not within 0.1 of the declared limit {a}")));
    }
    run(source, Constant::Declared(a), settings, "forward")
}

/// Converse direction: estimate `A` from the band diagonal of `W` at `ε = 0`
/// and test whether `g` approaches it.
pub fn converse_experiment(source: &GrowthFunction, settings: &ExperimentSettings) -> Result<ExperimentReport> {
    run(source, Constant::Estimate, settings, "converse")
}

/// Scans `u ∈ [u_min, u_max]` in steps of `0.01` for points with
/// `h(u) = g(u) - A ≥ threshold`. At such a point `u₀`, `S` non-decreasing
/// gives `g(u) ≥ g(u₀)e^{-(u-u₀)}`, so `h ≥ threshold/2` on `[u₀, u₀ + Δu]`
/// with `Δu = ln(g(u₀)/(A + threshold/2))`. Each run of consecutive hits is
/// one excursion; the reported window is the widest one in the first
/// excursion.
pub fn lower_bound_witness(
    source: &GrowthFunction,
    constant: f64,
    threshold: f64,
    u_min: f64,
    u_max: f64,
) -> Result<Option<Witness>> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::Domain(format!("witness threshold must be positive, got {threshold}")));
    }
    if !(u_min >= 0.0 && u_max > u_min) {
        return Err(Error::Domain(format!("scan range [{u_min}, {u_max}] is empty")));
    }
    const STEP: f64 = 0.01;
    let steps = ((u_max - u_min) / STEP).floor() as usize;
    let floor = constant + 0.5 * threshold;
    let mut first: Option<(f64, f64)> = None;
    let mut excursions = 0;
    let mut uniform = f64::INFINITY;
    let mut best_in_run: Option<(f64, f64)> = None;
    let mut close_run = |best: &mut Option<(f64, f64)>, first: &mut Option<(f64, f64)>| {
        if let Some((u, g)) = best.take() {
            excursions += 1;
            uniform = uniform.min((g / floor).ln());
            first.get_or_insert((u, g));
        }
    };
    for i in 0..=steps {
        let u = u_min + i as f64 * STEP;
        let g = source.ratio(u)?;
        if g - constant >= threshold {
            if best_in_run.is_none_or(|(_, gb)| g > gb) {
                best_in_run = Some((u, g));
            }
        } else {
            close_run(&mut best_in_run, &mut first);
        }
    }
    close_run(&mut best_in_run, &mut first);
    Ok(first.map(|(u, g)| {
        let delta_u = (g / floor).ln();
        Witness {
            threshold,
            u_start: u,
            delta_u,
            g_start: g,
            certified_bound: g * (-delta_u).exp() - constant,
            excursions,
            uniform_delta_u: uniform,
        }
    }))
}

/// The prime number theorem as a converse experiment on `π_ℙ(x)·ln x`.
/// With `settings.order == 0` the order is taken from [`order_for_range`].
pub fn pnt_pipeline(table: Arc<PrimeTable>, settings: &ExperimentSettings) -> Result<ExperimentReport> {
    let limit = table.limit();
    if (limit as f64) < settings.u_max.exp() {
        return Err(Error::TableExhausted { required: settings.u_max.exp().ceil() as u64, limit });
    }
    let mut settings = settings.clone();
    if settings.order == 0 {
        settings.order = order_for_range(settings.length, settings.u_max);
    }
    let source = GrowthFunction::weighted_primes(table.clone());
    let mut report = run(&source, Constant::Estimate, &settings, "pnt")?;
    let mut x = 1000u64;
    while (x as f64) <= settings.u_max.exp() {
        let count = table.count(x as f64)?;
        report.checkpoints.push(Checkpoint { x, count, ratio: count as f64 * (x as f64).ln() / x as f64 });
        x *= 10;
    }
    Ok(report)
}

/// The synthetic instances of the consistency battery with their settings.
pub fn battery_sources(settings: &ExperimentSettings) -> Result<Vec<(GrowthFunction, ExperimentSettings)>> {
    let slow = ExperimentSettings {
        u_max: 30.0,
        order: order_for_range(settings.length, 30.0),
        decay_threshold: 0.1,
        ratio_threshold: 0.1,
        ..settings.clone()
    };
    Ok(vec![
        (GrowthFunction::identity(), settings.clone()),
        (GrowthFunction::linear_plus_sqrt(2.0, 1.0), settings.clone()),
        (GrowthFunction::linear_plus_sqrt(1.0, 1.0), settings.clone()),
        (GrowthFunction::log_oscillation(0.5)?, settings.clone()),
        (GrowthFunction::step(StepFunction::new(vec![3.0], vec![1.0])?).with_label("bounded step"), settings.clone()),
        (GrowthFunction::slow_log(), slow),
    ])
}

/// Converse experiments over the battery; the forward experiment is run too
/// wherever `S` declares its limit.
pub fn battery(settings: &ExperimentSettings) -> Result<Vec<ExperimentReport>> {
    let mut out = Vec::new();
    for (source, s) in battery_sources(settings)? {
        if source.known_limit().is_some() {
            out.push(forward_experiment(&source, None, &s)?);
        }
        out.push(converse_experiment(&source, &s)?);
    }
    Ok(out)
}
