//! Flat `key = value` run configuration. Defaults are overlaid by the file,
//! then by command-line flags.

use std::path::{Path, PathBuf};

use serde::Serialize;
use tauberlab::arith::{default_cache_dir, DEFAULT_HARD_CAP};
use tauberlab::{Error, EvalTolerance, ExperimentSettings, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::Parse(format!("format must be json or csv, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub cache_dir: PathBuf,
    pub prime_limit: u64,
    pub length: f64,
    /// Unset means 64, or the range-filling order for the PNT pipeline.
    pub order: Option<usize>,
    pub tolerance: EvalTolerance,
    pub format: OutputFormat,
    pub u_max: f64,
    pub epsilon_schedule: Vec<f64>,
    pub decay_threshold: f64,
    pub ratio_threshold: f64,
    pub spectral_epsilon: f64,
    pub spectral_count: usize,
    pub ratio_points: usize,
    /// Worker threads; unset uses every core.
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentSettings::default();
        Self {
            cache_dir: default_cache_dir(),
            prime_limit: 100_000_000,
            length: e.length,
            order: None,
            tolerance: EvalTolerance::default(),
            format: OutputFormat::Json,
            u_max: e.u_max,
            epsilon_schedule: e.epsilon_schedule,
            decay_threshold: e.decay_threshold,
            ratio_threshold: e.ratio_threshold,
            spectral_epsilon: e.spectral_epsilon,
            spectral_count: e.spectral_count,
            ratio_points: e.ratio_points,
            jobs: None,
        }
    }
}

/// Values given on the command line; `None` leaves the config untouched.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub cache_dir: Option<PathBuf>,
    pub prime_limit: Option<i64>,
    pub length: Option<f64>,
    pub order: Option<usize>,
    pub u_max: Option<f64>,
    pub format: Option<OutputFormat>,
    pub jobs: Option<usize>,
}

fn positive_int(key: &str, v: i64) -> Result<u64> {
    if v <= 0 {
        return Err(Error::Domain(format!("{key} must be positive, got {v}")));
    }
    Ok(v as u64)
}

fn positive_real(key: &str, v: f64) -> Result<f64> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Domain(format!("{key} must be positive, got {v}")));
    }
    Ok(v)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=DEFAULT_HARD_CAP).contains(&self.prime_limit) {
            return Err(Error::Domain(format!(
                "prime_limit must lie in [2, {DEFAULT_HARD_CAP}], got {}",
                self.prime_limit
            )));
        }
        for (key, v) in [
            ("length", self.length),
            ("u_max", self.u_max),
            ("decay_threshold", self.decay_threshold),
            ("ratio_threshold", self.ratio_threshold),
            ("spectral_epsilon", self.spectral_epsilon),
        ] {
            positive_real(key, v)?;
        }
        for (key, v) in [("order", self.order), ("jobs", self.jobs)] {
            if v == Some(0) {
                return Err(Error::Domain(format!("{key} must be positive, got 0")));
            }
        }
        if self.spectral_count == 0 {
            return Err(Error::Domain("spectral_count must be positive, got 0".into()));
        }
        if self.ratio_points < 2 {
            return Err(Error::Domain(format!("ratio_points must be at least 2, got {}", self.ratio_points)));
        }
        let s = &self.epsilon_schedule;
        if s.iter().any(|e| !(e.is_finite() && *e > 0.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Domain(format!("epsilon_schedule must be positive and strictly decreasing, got {s:?}")));
        }
        self.tolerance.validate()
    }

    /// Sets one key from its textual value.
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let int = || value.parse::<i64>().map_err(|_| Error::Parse(format!("{key}: invalid integer {value:?}")));
        let real = || value.parse::<f64>().map_err(|_| Error::Parse(format!("{key}: invalid number {value:?}")));
        match key {
            "cache_dir" => self.cache_dir = PathBuf::from(value),
            "prime_limit" => self.prime_limit = positive_int(key, int()?)?,
            "length" => self.length = positive_real(key, real()?)?,
            "order" => self.order = Some(positive_int(key, int()?)? as usize),
            "abs_tol" => self.tolerance.abs_tol = positive_real(key, real()?)?,
            "max_terms" => self.tolerance.max_terms = positive_int(key, int()?)? as usize,
            "format" => self.format = value.parse()?,
            "u_max" => self.u_max = positive_real(key, real()?)?,
            "epsilon_schedule" => {
                self.epsilon_schedule = value
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("{key}: invalid number {v:?}"))))
                    .collect::<Result<_>>()?
            }
            "decay_threshold" => self.decay_threshold = positive_real(key, real()?)?,
            "ratio_threshold" => self.ratio_threshold = positive_real(key, real()?)?,
            "spectral_epsilon" => self.spectral_epsilon = positive_real(key, real()?)?,
            "spectral_count" => self.spectral_count = positive_int(key, int()?)? as usize,
            "ratio_points" => self.ratio_points = positive_int(key, int()?)? as usize,
            "jobs" => self.jobs = Some(positive_int(key, int()?)? as usize),
            _ => return Err(Error::Parse(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a config file body on top of `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| match e {
                Error::Parse(m) => Error::Parse(format!("line {}: {m}", i + 1)),
                Error::Domain(m) => Error::Domain(format!("line {}: {m}", i + 1)),
                other => other,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`, got {raw:?}", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(Error::Parse(format!("line {}: expected `key = value`, got {raw:?}", i + 1)));
            }
            self.set(key, value).map_err(at)?;
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(dir) = &o.cache_dir {
            self.cache_dir = dir.clone();
        }
        if let Some(v) = o.prime_limit {
            self.prime_limit = positive_int("prime_limit", v)?;
        }
        if let Some(v) = o.length {
            self.length = positive_real("length", v)?;
        }
        if let Some(v) = o.order {
            self.order = Some(v);
        }
        if let Some(v) = o.u_max {
            self.u_max = positive_real("u_max", v)?;
        }
        if let Some(v) = o.format {
            self.format = v;
        }
        if let Some(v) = o.jobs {
            self.jobs = Some(v);
        }
        self.validate()
    }

    pub fn settings(&self, order: usize) -> ExperimentSettings {
        ExperimentSettings {
            length: self.length,
            order,
            u_max: self.u_max,
            epsilon_schedule: self.epsilon_schedule.clone(),
            decay_threshold: self.decay_threshold,
            ratio_threshold: self.ratio_threshold,
            spectral_epsilon: self.spectral_epsilon,
            spectral_count: self.spectral_count,
            ratio_points: self.ratio_points,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// Defaults, overlaid by the file at `path` if one is given.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        config.merge_text(&text)?;
    }
    config.validate()?;
    Ok(config)
}
