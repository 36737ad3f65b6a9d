use std::fmt;
use std::sync::Arc;

use super::sieve::PrimeTable;
use crate::error::{Error, Result};

/// Beyond this point the quadrature layer replaces `⌊x⌋` by its mean
/// `x - 1/2`; the sawtooth remainder then contributes `O(x⁻²)` to any
/// smooth windowed integral of `g`.
pub const INTEGER_JUMP_CUTOFF: f64 = 16384.0;

/// `S(x) = Σ_{x_j ≤ x} a_j` with strictly increasing `x_j ≥ 1` and `a_j > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    jumps: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, jumps: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != jumps.len() {
            return Err(Error::Contract(format!("{} breakpoints but {} jumps", breakpoints.len(), jumps.len())));
        }
        if breakpoints.is_empty() {
            return Err(Error::Contract("step function needs at least one jump".into()));
        }
        for (i, (&x, &a)) in breakpoints.iter().zip(&jumps).enumerate() {
            if !x.is_finite() || x < 1.0 {
                return Err(Error::Domain(format!("breakpoint {i} = {x} is not a finite value >= 1")));
            }
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::Domain(format!("jump {i} = {a} is not a finite positive value")));
            }
            if i > 0 && x <= breakpoints[i - 1] {
                return Err(Error::Domain(format!(
                    "breakpoints must increase strictly: x[{}] = {} >= x[{i}] = {x}",
                    i - 1,
                    breakpoints[i - 1]
                )));
            }
        }
        let cumulative = jumps
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a;
                Some(*acc)
            })
            .collect();
        Ok(Self { breakpoints, jumps, cumulative })
    }

    /// Parses `x, a` pairs, one per line. Blank lines and `#` comments are
    /// skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut als = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let parse = |field: Option<&str>| -> Result<f64> {
                field
                    .filter(|f| !f.is_empty())
                    .ok_or_else(|| Error::Parse(format!("line {}: expected `x, a`", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            xs.push(parse(parts.next())?);
            als.push(parse(parts.next())?);
            if parts.next().is_some() {
                return Err(Error::Parse(format!("line {}: too many fields", lineno + 1)));
            }
        }
        Self::new(xs, als)
    }

    pub fn value(&self, x: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    /// `lim_{x→∞} S(x)`.
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// `max_x S(x)/x`, attained at a breakpoint.
    pub fn max_ratio(&self) -> f64 {
        self.breakpoints.iter().zip(&self.cumulative).map(|(x, c)| c / x).fold(0.0, f64::max)
    }
}

/// How `S` is evaluated.
#[derive(Clone)]
pub enum Evaluator {
    /// `S(x) = a·x`.
    Linear {
        slope: f64,
    },
    /// `S(x) = a·x + b·√x`.
    LinearPlusSqrt {
        slope: f64,
        sqrt_coeff: f64,
    },
    /// `S(x) = x·(1 + c·sin ln x)`, non-decreasing for `c ≤ 1/√2`.
    LogOscillation {
        amplitude: f64,
    },
    /// `S(x) = x + x/(1 + ln x)`.
    SlowLog,
    /// `π_ℕ(x) = ⌊x⌋`.
    Integers,
    /// `π_ℙ(x)`.
    Primes(Arc<PrimeTable>),
    /// `π_ℙ(x)·ln x`.
    WeightedPrimes(Arc<PrimeTable>),
    Step(StepFunction),
    /// Arbitrary continuous rule. Monotonicity is the caller's promise.
    Closed(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Scaled(f64, Box<GrowthFunction>),
    Sum(Box<GrowthFunction>, Box<GrowthFunction>),
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evaluator::Linear { slope } => write!(f, "Linear({slope})"),
            Evaluator::LinearPlusSqrt { slope, sqrt_coeff } => {
                write!(f, "LinearPlusSqrt({slope}, {sqrt_coeff})")
            }
            Evaluator::LogOscillation { amplitude } => write!(f, "LogOscillation({amplitude})"),
            Evaluator::SlowLog => f.write_str("SlowLog"),
            Evaluator::Integers => f.write_str("Integers"),
            Evaluator::Primes(t) => write!(f, "Primes(limit={})", t.limit()),
            Evaluator::WeightedPrimes(t) => write!(f, "WeightedPrimes(limit={})", t.limit()),
            Evaluator::Step(s) => write!(f, "Step({} jumps)", s.breakpoints().len()),
            Evaluator::Closed(_) => f.write_str("Closed(..)"),
            Evaluator::Scaled(c, g) => write!(f, "Scaled({c}, {:?})", g.evaluator),
            Evaluator::Sum(a, b) => write!(f, "Sum({:?}, {:?})", a.evaluator, b.evaluator),
        }
    }
}

/// A non-decreasing `S ≥ 0` on `[1, ∞)` with a declared bound `S(x) ≤ C·x`.
/// `S(x) = 0` for `x < 1`.
#[derive(Debug, Clone)]
pub struct GrowthFunction {
    evaluator: Evaluator,
    growth_constant: f64,
    label: String,
}

/// `eᵘ`, snapped to the nearest integer when within a few ulps of it so that
/// `g(ln n)` sees the jump at `n`.
fn exp_snapped(u: f64) -> f64 {
    let x = u.exp();
    let r = x.round();
    if (x - r).abs() <= 8.0 * f64::EPSILON * x {
        r
    } else {
        x
    }
}

impl GrowthFunction {
    pub fn new(evaluator: Evaluator, growth_constant: f64, label: impl Into<String>) -> Result<Self> {
        if !(growth_constant.is_finite() && growth_constant > 0.0) {
            return Err(Error::Domain(format!("growth constant must be finite and positive, got {growth_constant}")));
        }
        Ok(Self { evaluator, growth_constant, label: label.into() })
    }

    /// `S(x) = x`, whose transform is `1/(s-1)`.
    pub fn identity() -> Self {
        Self::linear(1.0)
    }

    pub fn linear(slope: f64) -> Self {
        assert!(slope >= 0.0 && slope.is_finite(), "slope must be finite and >= 0");
        let label = if slope == 1.0 { "x".to_string() } else { format!("{slope}x") };
        Self { evaluator: Evaluator::Linear { slope }, growth_constant: slope.max(1e-300), label }
    }

    /// The constant-zero function.
    pub fn zero() -> Self {
        Self { evaluator: Evaluator::Linear { slope: 0.0 }, growth_constant: 1.0, label: "0".into() }
    }

    pub fn linear_plus_sqrt(slope: f64, sqrt_coeff: f64) -> Self {
        assert!(slope >= 0.0 && sqrt_coeff >= 0.0, "coefficients must be >= 0");
        let label = match (slope, sqrt_coeff) {
            (1.0, 1.0) => "x+sqrt(x)".to_string(),
            (a, 1.0) => format!("{a}x+sqrt(x)"),
            (a, b) => format!("{a}x+{b}sqrt(x)"),
        };
        Self { evaluator: Evaluator::LinearPlusSqrt { slope, sqrt_coeff }, growth_constant: slope + sqrt_coeff, label }
    }

    pub fn log_oscillation(amplitude: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::FRAC_1_SQRT_2).contains(&amplitude) {
            return Err(Error::Domain(format!(
                "x(1 + c sin ln x) is non-decreasing only for 0 <= c <= 1/sqrt(2), got {amplitude}"
            )));
        }
        Ok(Self {
            evaluator: Evaluator::LogOscillation { amplitude },
            growth_constant: 1.0 + amplitude,
            label: format!("x(1+{amplitude}sin(ln x))"),
        })
    }

    pub fn slow_log() -> Self {
        Self { evaluator: Evaluator::SlowLog, growth_constant: 2.0, label: "x+x/(1+ln x)".into() }
    }

    pub fn integers() -> Self {
        Self { evaluator: Evaluator::Integers, growth_constant: 1.0, label: "pi_N".into() }
    }

    pub fn primes(table: Arc<PrimeTable>) -> Self {
        Self { evaluator: Evaluator::Primes(table), growth_constant: 1.0, label: "pi_P".into() }
    }

    /// `π_ℙ(x)·ln x` with the certified bound `C = 1.3`.
    pub fn weighted_primes(table: Arc<PrimeTable>) -> Self {
        Self { evaluator: Evaluator::WeightedPrimes(table), growth_constant: 1.3, label: "pi_P*ln".into() }
    }

    pub fn step(step: StepFunction) -> Self {
        let c = step.max_ratio();
        Self { evaluator: Evaluator::Step(step), growth_constant: c, label: "step".into() }
    }

    pub fn closed<F>(label: impl Into<String>, growth_constant: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(Evaluator::Closed(Arc::new(f)), growth_constant, label)
    }

    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite(), "scale must be finite and positive");
        Self {
            evaluator: Evaluator::Scaled(c, Box::new(self.clone())),
            growth_constant: c * self.growth_constant,
            label: format!("{c}*({})", self.label),
        }
    }

    pub fn plus(&self, other: &GrowthFunction) -> Self {
        Self {
            evaluator: Evaluator::Sum(Box::new(self.clone()), Box::new(other.clone())),
            growth_constant: self.growth_constant + other.growth_constant,
            label: format!("{}+{}", self.label, other.label),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest `x` at which `S` can be evaluated.
    pub fn x_max(&self) -> f64 {
        match &self.evaluator {
            Evaluator::Primes(t) | Evaluator::WeightedPrimes(t) => t.limit() as f64,
            Evaluator::Scaled(_, g) => g.x_max(),
            Evaluator::Sum(a, b) => a.x_max().min(b.x_max()),
            _ => f64::INFINITY,
        }
    }

    /// Largest `u` with `eᵘ` inside the evaluable range.
    pub fn u_max(&self) -> f64 {
        self.x_max().ln()
    }

    /// `S(x)`.
    pub fn value(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("S(x) needs finite x, got {x}")));
        }
        if x < 1.0 {
            return Ok(0.0);
        }
        Ok(match &self.evaluator {
            Evaluator::Linear { slope } => slope * x,
            Evaluator::LinearPlusSqrt { slope, sqrt_coeff } => slope * x + sqrt_coeff * x.sqrt(),
            Evaluator::LogOscillation { amplitude } => x * (1.0 + amplitude * x.ln().sin()),
            Evaluator::SlowLog => x + x / (1.0 + x.ln()),
            Evaluator::Integers => x.floor(),
            Evaluator::Primes(t) => t.count(x)? as f64,
            Evaluator::WeightedPrimes(t) => t.count(x)? as f64 * x.ln(),
            Evaluator::Step(s) => s.value(x),
            Evaluator::Closed(f) => f(x),
            Evaluator::Scaled(c, g) => c * g.value(x)?,
            Evaluator::Sum(a, b) => a.value(x)? + b.value(x)?,
        })
    }

    /// `g(u) = S(eᵘ)/eᵘ` for `u ≥ 0`.
    pub fn ratio(&self, u: f64) -> Result<f64> {
        if !u.is_finite() || u < 0.0 {
            return Err(Error::Domain(format!("g(u) needs finite u >= 0, got {u}")));
        }
        Ok(match &self.evaluator {
            Evaluator::Linear { slope } => *slope,
            Evaluator::LinearPlusSqrt { slope, sqrt_coeff } => slope + sqrt_coeff * (-0.5 * u).exp(),
            Evaluator::LogOscillation { amplitude } => 1.0 + amplitude * u.sin(),
            Evaluator::SlowLog => 1.0 + 1.0 / (1.0 + u),
            Evaluator::Integers => {
                let x = exp_snapped(u);
                if x > 9.0e15 {
                    1.0
                } else {
                    x.floor() / x
                }
            }
            Evaluator::Primes(t) => {
                let x = exp_snapped(u);
                t.count(x)? as f64 / x
            }
            Evaluator::WeightedPrimes(t) => {
                let x = exp_snapped(u);
                t.count(x)? as f64 * u / x
            }
            Evaluator::Step(s) => s.value(exp_snapped(u)) * (-u).exp(),
            Evaluator::Closed(f) => {
                let x = u.exp();
                f(x) / x
            }
            Evaluator::Scaled(c, g) => c * g.ratio(u)?,
            Evaluator::Sum(a, b) => a.ratio(u)? + b.ratio(u)?,
        })
    }

    /// `lim g(u)` when it is known in closed form.
    pub fn known_limit(&self) -> Option<f64> {
        match &self.evaluator {
            Evaluator::Linear { slope } | Evaluator::LinearPlusSqrt { slope, .. } => Some(*slope),
            Evaluator::SlowLog | Evaluator::Integers => Some(1.0),
            Evaluator::Step(_) | Evaluator::Primes(_) => Some(0.0),
            Evaluator::Scaled(c, g) => g.known_limit().map(|a| c * a),
            Evaluator::Sum(a, b) => Some(a.known_limit()? + b.known_limit()?),
            Evaluator::LogOscillation { .. } | Evaluator::WeightedPrimes(_) | Evaluator::Closed(_) => None,
        }
    }

    /// Constant model `(value, deviation)` for `g` on `[u0, ∞)`, with
    /// `sup_{u ≥ u0} |g(u) - value| ≤ deviation`.
    pub fn tail_model(&self, u0: f64) -> (f64, f64) {
        let c = self.growth_constant;
        match &self.evaluator {
            Evaluator::Linear { slope } => (*slope, 0.0),
            Evaluator::LinearPlusSqrt { slope, sqrt_coeff } => (*slope, sqrt_coeff * (-0.5 * u0).exp()),
            Evaluator::LogOscillation { amplitude } => (1.0, *amplitude),
            Evaluator::SlowLog => (1.0, 1.0 / (1.0 + u0)),
            Evaluator::Integers => (1.0, (-u0).exp()),
            Evaluator::Step(s) => (0.0, (s.total() * (-u0).exp()).min(c)),
            Evaluator::Primes(_) | Evaluator::WeightedPrimes(_) | Evaluator::Closed(_) => {
                let at = u0.min(self.u_max());
                (self.ratio(at).unwrap_or(0.0), c)
            }
            Evaluator::Scaled(k, g) => {
                let (v, d) = g.tail_model(u0);
                (k * v, k * d)
            }
            Evaluator::Sum(a, b) => {
                let (va, da) = a.tail_model(u0);
                let (vb, db) = b.tail_model(u0);
                (va + vb, da + db)
            }
        }
    }

    /// `g(u)` as seen by the quadrature layer: exact except for `π_ℕ` past
    /// [`INTEGER_JUMP_CUTOFF`], where the floor is replaced by its mean.
    pub(crate) fn quadrature_ratio(&self, u: f64) -> f64 {
        match &self.evaluator {
            Evaluator::Integers if u > INTEGER_JUMP_CUTOFF.ln() => 1.0 - 0.5 * (-u).exp(),
            Evaluator::Scaled(c, g) => c * g.quadrature_ratio(u),
            Evaluator::Sum(a, b) => a.quadrature_ratio(u) + b.quadrature_ratio(u),
            _ => self.ratio(u).unwrap_or(f64::NAN),
        }
    }

    /// Appends `ln x` for every jump `x` of `S` with `eᵘᵃ < x ≤ eᵘᵇ`, in
    /// increasing order, as seen by the quadrature layer.
    pub(crate) fn jumps_in(&self, ua: f64, ub: f64, out: &mut Vec<f64>) {
        match &self.evaluator {
            Evaluator::Integers => {
                let hi = ub.exp().min(INTEGER_JUMP_CUTOFF);
                if ua.exp() >= hi {
                    return;
                }
                let mut k = ua.exp().floor() as u64 + 1;
                while (k as f64) <= hi {
                    let v = (k as f64).ln();
                    if v > ua && v <= ub {
                        out.push(v);
                    }
                    k += 1;
                }
            }
            Evaluator::Primes(t) | Evaluator::WeightedPrimes(t) => {
                let lo = ua.exp().floor() as u64;
                let hi = ub.exp().floor() as u64;
                for p in t.primes_between(lo, hi) {
                    let v = (p as f64).ln();
                    if v > ua && v <= ub {
                        out.push(v);
                    }
                }
            }
            Evaluator::Step(s) => {
                for &x in s.breakpoints() {
                    let v = x.ln();
                    if v > ua && v <= ub {
                        out.push(v);
                    }
                }
            }
            Evaluator::Scaled(_, g) => g.jumps_in(ua, ub, out),
            Evaluator::Sum(a, b) => {
                let start = out.len();
                a.jumps_in(ua, ub, out);
                b.jumps_in(ua, ub, out);
                out[start..].sort_by(f64::total_cmp);
                let mut tail = out.split_off(start);
                tail.dedup();
                out.extend(tail);
            }
            _ => {}
        }
    }
}
