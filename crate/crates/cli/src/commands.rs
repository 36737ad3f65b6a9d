//! Subcommand bodies. Each returns the text for standard output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use serde_json::json;
use tauberlab::arith::{CacheStatus, PrimeTable, StepFunction};
use tauberlab::operator::{
    assemble_frequency_route, assemble_kernel_route, default_cutoff, spectrum, split_identity, FrequencySettings,
    MultiplierGrid,
};
use tauberlab::special::{prime_zeta, prime_zeta_deriv, psi_entire, psi_prime_part, zeta, zeta_deriv};
use tauberlab::tauber::{battery, converse_experiment, forward_experiment, pnt_pipeline, write_atomic};
use tauberlab::transform::DEFAULT_TRUNCATION;
use tauberlab::{
    ComplexPoint, Error, Evaluation, ExperimentReport, GrowthFunction, IntervalSpec, Result, Route, TransformSpec,
};

use crate::config::{OutputFormat, RunConfig};

const DEFAULT_ORDER: usize = 64;

/// Tables up to this limit are sieved in memory without touching the cache.
const IN_MEMORY_LIMIT: u64 = 1 << 24;

pub fn load_table(config: &RunConfig, limit: u64) -> Result<Arc<PrimeTable>> {
    if limit <= IN_MEMORY_LIMIT {
        return Ok(Arc::new(PrimeTable::build(limit)?));
    }
    let (table, status) = PrimeTable::load_or_build(limit, &config.cache_dir)?;
    match status {
        CacheStatus::Loaded => info!("loaded primes to {limit} from {}", config.cache_dir.display()),
        _ => info!("sieved primes to {limit} into {}", config.cache_dir.display()),
    }
    Ok(Arc::new(table))
}

/// Source selection shared by `transform`, `operator` and `experiment`.
#[derive(Debug, Clone, Default)]
pub struct SourceArgs {
    pub name: String,
    pub file: Option<PathBuf>,
    pub amplitude: f64,
}

pub const SOURCES: &[&str] =
    &["integers", "primes", "wprimes", "x", "2x+sqrt", "x+sqrt", "oscillating", "slowlog", "step", "file"];

pub fn growth_function(config: &RunConfig, args: &SourceArgs) -> Result<GrowthFunction> {
    Ok(match args.name.as_str() {
        "integers" => GrowthFunction::integers(),
        "primes" => GrowthFunction::primes(load_table(config, config.prime_limit)?),
        "wprimes" => GrowthFunction::weighted_primes(load_table(config, config.prime_limit)?),
        "x" => GrowthFunction::identity(),
        "2x+sqrt" => GrowthFunction::linear_plus_sqrt(2.0, 1.0),
        "x+sqrt" => GrowthFunction::linear_plus_sqrt(1.0, 1.0),
        "oscillating" => GrowthFunction::log_oscillation(args.amplitude)?,
        "slowlog" => GrowthFunction::slow_log(),
        "step" => GrowthFunction::step(StepFunction::new(vec![3.0], vec![1.0])?).with_label("bounded step"),
        "file" => {
            let path = args.file.as_ref().ok_or_else(|| Error::Contract("--source file needs --file".into()))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
            GrowthFunction::step(StepFunction::from_csv(&text)?)
        }
        other => return Err(Error::Parse(format!("unknown source {other:?}; expected one of {}", SOURCES.join(", ")))),
    })
}

pub fn primes(config: &RunConfig, count: u64) -> Result<String> {
    let table = load_table(config, count.max(2))?;
    Ok(format!("{}\n", table.count(count as f64)?))
}

fn evaluation_json(e: &Evaluation) -> serde_json::Value {
    json!({ "re": e.value.re, "im": e.value.im, "est_error": e.est_error })
}

pub fn special_eval(config: &RunConfig, function: &str, s: ComplexPoint) -> Result<String> {
    let tol = &config.tolerance;
    let e = match function {
        "zeta" => zeta(s, tol)?,
        "zetad" => zeta_deriv(s, tol)?,
        "pzeta" => prime_zeta(s, tol)?,
        "pzetad" => prime_zeta_deriv(s, tol)?,
        "psi" => psi_entire(s, tol)?,
        "psip" => psi_prime_part(s, tol)?,
        other => return Err(Error::Parse(format!("unknown function {other:?}"))),
    };
    Ok(format!("{}\n", evaluation_json(&e)))
}

pub fn transform_eval(
    config: &RunConfig,
    source: &SourceArgs,
    s: ComplexPoint,
    oracle: bool,
    truncation: Option<f64>,
) -> Result<String> {
    let g = growth_function(config, source)?;
    let spec = TransformSpec::new(g.clone());
    let value = spec.evaluate(s, &config.tolerance)?;
    let mut out = evaluation_json(&value);
    out["kind"] = json!(spec.kind());
    if oracle {
        let u = truncation.unwrap_or(DEFAULT_TRUNCATION.min(g.u_max()));
        let quad = TransformSpec::quadrature(g, u, None)?.evaluate(s, &config.tolerance)?;
        let mut q = evaluation_json(&quad);
        q["truncation"] = json!(u);
        q["difference"] = json!((quad.value - value.value).norm());
        out["oracle"] = q;
    }
    Ok(format!("{out}\n"))
}

pub struct OperatorArgs {
    pub source: SourceArgs,
    pub epsilon: f64,
    pub route: Route,
    pub constant: Option<f64>,
    pub count: Option<usize>,
}

fn order_of(config: &RunConfig) -> usize {
    config.order.unwrap_or(DEFAULT_ORDER)
}

pub fn operator_assemble(config: &RunConfig, args: &OperatorArgs) -> Result<String> {
    let g = growth_function(config, &args.source)?;
    let interval = IntervalSpec::new(config.length)?;
    let order = order_of(config);
    let w = match args.route {
        Route::KernelQuadrature => assemble_kernel_route(&g, interval, args.epsilon, order)?,
        Route::FrequencyFormula => {
            assemble_frequency_route(&g, interval, args.epsilon, order, FrequencySettings::default())?
        }
    };
    let m = match args.constant {
        Some(a) => split_identity(&w, a),
        None => w,
    };
    Ok(match config.format {
        OutputFormat::Csv => m.to_csv(),
        OutputFormat::Json => {
            let rows: Vec<Vec<f64>> =
                (0..m.side()).map(|r| (0..m.side()).map(|c| m.entries()[(r, c)]).collect()).collect();
            let v = json!({
                "length": config.length,
                "epsilon": m.epsilon(),
                "order": m.order(),
                "source": m.source(),
                "route": m.route().as_str(),
                "constant": m.constant(),
                "tail_bound": m.tail_bound(),
                "max_imag": m.max_imag(),
                "asymmetry": m.asymmetry(),
                "entries": rows,
            });
            format!("{v}\n")
        }
    })
}

/// `⟨Ψe_n, e_n⟩` for `n = 0..N` on the frequency side.
pub fn operator_diag(config: &RunConfig, args: &OperatorArgs) -> Result<String> {
    let g = growth_function(config, &args.source)?;
    let interval = IntervalSpec::new(config.length)?;
    let order = order_of(config);
    let a = args.constant.or(g.known_limit()).unwrap_or(0.0);
    let grid = MultiplierGrid::new(&g, interval, default_cutoff(&g, interval, order))?;
    let ns: Vec<i64> = (0..=order as i64).collect();
    let diag = grid.diagonal(args.epsilon, a, &ns)?;
    Ok(match config.format {
        OutputFormat::Csv => {
            let mut out = String::from("n,psi_diag,tail_bound\n");
            for (n, (v, b)) in ns.iter().zip(&diag) {
                let _ = writeln!(out, "{n},{v:e},{b:e}");
            }
            out
        }
        OutputFormat::Json => {
            let v = json!({
                "source": g.label(),
                "length": config.length,
                "epsilon": args.epsilon,
                "constant": a,
                "n": ns,
                "values": diag.iter().map(|d| d.0).collect::<Vec<_>>(),
                "tail_bounds": diag.iter().map(|d| d.1).collect::<Vec<_>>(),
            });
            format!("{v}\n")
        }
    })
}

pub fn operator_spectrum(config: &RunConfig, args: &OperatorArgs) -> Result<String> {
    let g = growth_function(config, &args.source)?;
    let interval = IntervalSpec::new(config.length)?;
    let order = order_of(config);
    let w = match args.route {
        Route::KernelQuadrature => assemble_kernel_route(&g, interval, args.epsilon, order)?,
        Route::FrequencyFormula => {
            assemble_frequency_route(&g, interval, args.epsilon, order, FrequencySettings::default())?
        }
    };
    let a = args.constant.unwrap_or(0.0);
    let mut values = spectrum(&split_identity(&w, a))?;
    values.truncate(args.count.unwrap_or(config.spectral_count));
    Ok(match config.format {
        OutputFormat::Csv => {
            let mut out = String::from("k,lambda\n");
            for (k, v) in values.iter().enumerate() {
                let _ = writeln!(out, "{k},{v:e}");
            }
            out
        }
        OutputFormat::Json => format!(
            "{}\n",
            json!({ "source": g.label(), "epsilon": args.epsilon, "constant": a, "eigenvalues": values })
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Forward,
    Converse,
    Pnt,
    Battery,
}

pub struct ExperimentArgs {
    pub kind: Experiment,
    pub source: SourceArgs,
    pub constant: Option<f64>,
    pub report: Option<PathBuf>,
}

/// `out.json` becomes `out.<tag>.csv`.
fn companion(report: &Path, tag: &str) -> PathBuf {
    report.with_extension(format!("{tag}.csv"))
}

fn summary(r: &ExperimentReport) -> serde_json::Value {
    json!({
        "experiment": r.experiment,
        "source": r.source,
        "a_estimate": r.a_estimate.value,
        "diag_decay": r.verdicts.diag_decay.value,
        "band_max": r.verdicts.diag_decay.statistic,
        "ratio_limit": r.verdicts.ratio_limit.value,
        "consistent": r.verdicts.consistent,
    })
}

pub fn experiment(config: &RunConfig, args: &ExperimentArgs) -> Result<String> {
    let mut reports = match args.kind {
        Experiment::Forward => {
            let g = growth_function(config, &args.source)?;
            vec![forward_experiment(&g, args.constant, &config.settings(order_of(config)))?]
        }
        Experiment::Converse => {
            let g = growth_function(config, &args.source)?;
            vec![converse_experiment(&g, &config.settings(order_of(config)))?]
        }
        Experiment::Pnt => {
            let needed = config.u_max.exp();
            if (config.prime_limit as f64) < needed {
                return Err(Error::TableExhausted { required: needed.ceil() as u64, limit: config.prime_limit });
            }
            let table = load_table(config, config.prime_limit)?;
            vec![pnt_pipeline(table, &config.settings(config.order.unwrap_or(0)))?]
        }
        Experiment::Battery => battery(&config.settings(order_of(config)))?,
    };
    for r in &mut reports {
        r.config = config.to_json();
    }

    let Some(path) = &args.report else {
        return match (config.format, reports.as_slice()) {
            (OutputFormat::Csv, [r]) => Ok(r.diagonal_csv()),
            (OutputFormat::Csv, _) => {
                Ok(reports.iter().map(|r| format!("# {} {}\n{}", r.experiment, r.source, r.diagonal_csv())).collect())
            }
            (OutputFormat::Json, [r]) => Ok(r.to_json()? + "\n"),
            (OutputFormat::Json, _) => Ok(to_pretty(&reports)? + "\n"),
        };
    };

    if let [r] = reports.as_slice() {
        r.write_atomic(path)?;
        write_atomic(&companion(path, "ratios"), r.ratio_table.to_csv().as_bytes())?;
        write_atomic(&companion(path, "diagonal"), r.diagonal_csv().as_bytes())?;
    } else {
        write_atomic(path, to_pretty(&reports)?.as_bytes())?;
        for (i, r) in reports.iter().enumerate() {
            write_atomic(&companion(path, &format!("{i}.ratios")), r.ratio_table.to_csv().as_bytes())?;
            write_atomic(&companion(path, &format!("{i}.diagonal")), r.diagonal_csv().as_bytes())?;
        }
    }
    let lines: Vec<String> = reports.iter().map(|r| summary(r).to_string()).collect();
    Ok(lines.join("\n") + "\n")
}

fn to_pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Numeric(format!("report serialisation: {e}")))
}
