//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{rngs::StdRng, Rng, SeedableRng};
use tauberlab::arith::{CacheStatus, PrimeTable, StepFunction, CACHE_DIR_ENV};
use tauberlab::operator::{
    assemble_frequency_route, assemble_kernel_route, spectrum, weak_limit_diagnostic, FrequencySettings, SYMMETRY_TOL,
};
use tauberlab::special::{prime_zeta, psi_entire, zeta};
use tauberlab::tauber::{battery_sources, converse_experiment, forward_experiment, lower_bound_witness, pnt_pipeline};
use tauberlab::{Complex64, ComplexPoint, EvalTolerance, ExperimentSettings, GrowthFunction, IntervalSpec};

type Check = Result<(bool, String), String>;

/// Byte outputs of criteria 3 to 7, compared across two runs.
type Artifacts = Vec<(String, String)>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn interval(length: f64) -> IntervalSpec {
    IntervalSpec::new(length).expect("positive length")
}

/// `ψ(s) = ζ(s)/s - 1/(s-1)` from Euler-Maclaurin at `N = 50` with the pole
/// removed by hand: `ψ = (Σ_{n<N} n^{-s} + N^{-s}/2 + R)/s + (N^{1-s} - 1)/(s(s-1)) - 1/s`.
fn psi_oracle(s: Complex64) -> Complex64 {
    const N: f64 = 50.0;
    const B: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    let mut head: Complex64 = (1..50).rev().map(|n| (-s * (n as f64).ln()).exp()).sum();
    head += 0.5 * (-s * N.ln()).exp();
    let mut rising = s;
    let mut fact = 2.0;
    for (k, b) in B.iter().enumerate() {
        let j = 2 * k + 2;
        head += b / fact * rising * (-(s + (j - 1) as f64) * N.ln()).exp();
        rising *= (s + j as f64 - 1.0) * (s + j as f64);
        fact *= ((j + 1) * (j + 2)) as f64;
    }
    let w = s - 1.0;
    head / s + ((-w * N.ln()).exp() - 1.0) / (s * w) - 1.0 / s
}

fn c1() -> Check {
    let tol = EvalTolerance::default();
    let (mut identity, mut oracle) = (0.0f64, 0.0f64);
    for eps in [0.01, 0.1] {
        for j in 0..10 {
            let t = -10.0 + 20.0 * j as f64 / 9.0;
            let p = ComplexPoint::new(1.0 + eps, t);
            let s = p.to_complex();
            let z = zeta(p, &tol).map_err(err)?.value;
            let psi = psi_entire(p, &tol).map_err(err)?.value;
            identity = identity.max((z / s - 1.0 / (s - 1.0) - psi).norm());
            oracle = oracle.max((psi - psi_oracle(s)).norm());
        }
    }
    Ok((
        identity < 1e-8 && oracle < 1e-8,
        format!("max |zeta/s - 1/(s-1) - psi| = {identity:.2e}, max |psi - oracle| = {oracle:.2e} over 20 points"),
    ))
}

fn c2() -> Check {
    let tol = EvalTolerance::default();
    let mut rng = StdRng::seed_from_u64(0x7a657461);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let sigma = rng.gen_range(1.5..=3.0);
        let t = rng.gen_range(-30.0..=30.0);
        let log_zeta = zeta(ComplexPoint::new(sigma, t), &tol).map_err(err)?.value.ln();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut k = 1;
        while 2f64.powf(-(k as f64) * sigma) > 1e-20 {
            let p = ComplexPoint::new(k as f64 * sigma, k as f64 * t);
            sum += prime_zeta(p, &tol).map_err(err)?.value / k as f64;
            k += 1;
        }
        worst = worst.max((log_zeta - sum).norm());
    }
    Ok((worst < 1e-8, format!("max |log zeta - sum P(ks)/k| = {worst:.2e} over 20 random points")))
}

fn c3(out: &mut Artifacts) -> Check {
    let source = GrowthFunction::integers();
    let i = interval(2.0 * PI);
    let k = assemble_kernel_route(&source, i, 0.1, 8).map_err(err)?;
    let f = assemble_frequency_route(&source, i, 0.1, 8, FrequencySettings::default()).map_err(err)?;
    let diff = k.max_difference(&f).map_err(err)?;
    out.push(("c3 kernel".into(), k.to_csv()));
    out.push(("c3 frequency".into(), f.to_csv()));
    Ok((diff < 1e-5, format!("max entry difference {diff:.2e} (frequency tail bound {:.1e})", f.tail_bound())))
}

fn c4(out: &mut Artifacts) -> Check {
    let mut worst = 0.0f64;
    for length in [2.0 * PI, 8.0 * PI] {
        let w = assemble_frequency_route(
            &GrowthFunction::identity(),
            interval(length),
            0.0,
            64,
            FrequencySettings::default(),
        )
        .map_err(err)?;
        worst = worst.max(w.diagonal().iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max));
        out.push((format!("c4 L={length}"), w.to_csv()));
    }
    Ok((worst < 1e-8, format!("max |diag - 1| = {worst:.2e} for |n| <= 64, L = 2pi and 8pi")))
}

fn c5(out: &mut Artifacts) -> Check {
    let settings = ExperimentSettings::default();
    let sources = [
        GrowthFunction::identity(),
        GrowthFunction::linear_plus_sqrt(2.0, 1.0),
        GrowthFunction::linear_plus_sqrt(1.0, 1.0),
        GrowthFunction::step(StepFunction::new(vec![3.0], vec![1.0]).map_err(err)?).with_label("bounded step"),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for source in &sources {
        let r = forward_experiment(source, None, &settings).map_err(err)?;
        let v = r.verdicts.diag_decay;
        pass &= v.value && v.statistic < 0.02;
        detail.push(format!("{} {:.4}", source.label(), v.statistic));
        out.push((format!("c5 {}", source.label()), r.diagonal_csv() + &r.ratio_table.to_csv()));
    }
    Ok((pass, format!("band max: {}", detail.join(", "))))
}

fn c6(out: &mut Artifacts) -> Check {
    let settings = ExperimentSettings { epsilon_schedule: Vec::new(), ..ExperimentSettings::default() };
    let source = GrowthFunction::log_oscillation(0.5).map_err(err)?;
    let r = converse_experiment(&source, &settings).map_err(err)?;
    let band = r.verdicts.diag_decay.statistic;
    let witness = lower_bound_witness(&source, 1.0, 0.25, 0.0, settings.u_max).map_err(err)?;
    out.push(("c6 diagonal".into(), r.diagonal_csv()));
    let (found, wdesc) = match witness {
        Some(w) => {
            out.push(("c6 witness".into(), format!("{:e},{:e},{:e}\n", w.u_start, w.delta_u, w.certified_bound)));
            (
                w.delta_u > 0.0 && w.certified_bound >= 0.125,
                format!("window [{:.2}, {:.2}] with h >= {:.3}", w.u_start, w.u_start + w.delta_u, w.certified_bound),
            )
        }
        None => (false, "no window".into()),
    };
    Ok((band >= 0.05 && found, format!("band max {band:.4} (A* = {:.4}), {wdesc}", r.a_estimate.value)))
}

fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")))
}

fn c7(table: &Arc<PrimeTable>, out: &mut Artifacts) -> Check {
    let settings = ExperimentSettings { order: 0, epsilon_schedule: Vec::new(), ..ExperimentSettings::default() };
    let r = pnt_pipeline(table.clone(), &settings).map_err(err)?;
    let oracle = [(10_000u64, 1229u64, 1.1320), (1_000_000, 78_498, 1.0845), (10_000_000, 664_579, 1.0712)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (x, count, quoted) in oracle {
        let exact = count as f64 * (x as f64).ln() / x as f64;
        let Some(cp) = r.checkpoints.iter().find(|c| c.x == x) else {
            return Ok((false, format!("no checkpoint at {x}")));
        };
        pass &= cp.count == count && (cp.ratio - exact).abs() < 2e-4 && (cp.ratio - quoted).abs() < 2e-4;
        detail.push(format!("g(ln {x}) = {:.4}", cp.ratio));
    }
    let decreasing = r.checkpoints.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let a = r.a_estimate.value;
    pass &= decreasing && (0.9..=1.1).contains(&a);
    out.push(("c7 diagonal".into(), r.diagonal_csv()));
    out.push(("c7 ratios".into(), r.ratio_table.to_csv()));
    Ok((pass, format!("{}, decreasing {decreasing}, A* = {a:.4} (N = {})", detail.join(", "), r.order)))
}

fn c8() -> Check {
    let settings = ExperimentSettings::default();
    let mut count = 0;
    let (mut asym, mut imag, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for (source, s) in battery_sources(&settings).map_err(err)? {
        let i = interval(s.length);
        for &eps in &s.epsilon_schedule {
            let mats = [
                assemble_kernel_route(&source, i, eps, s.order).map_err(err)?,
                assemble_frequency_route(&source, i, eps, s.order, FrequencySettings::default()).map_err(err)?,
            ];
            for m in &mats {
                asym = asym.max(m.asymmetry());
                imag = imag.max(m.max_imag());
                let spec = spectrum(m).map_err(err)?;
                min_eig = min_eig.min(spec.iter().copied().fold(f64::INFINITY, f64::min));
                count += 1;
            }
        }
    }
    let pass = asym <= SYMMETRY_TOL && imag <= SYMMETRY_TOL && min_eig >= -1e-8;
    Ok((pass, format!("{count} truncations: asymmetry {asym:.1e}, imag {imag:.1e}, min eigenvalue {min_eig:.2e}")))
}

fn c9() -> Check {
    let r = weak_limit_diagnostic(&GrowthFunction::integers(), interval(8.0 * PI), 4, &[0.4, 0.2, 0.1, 0.05])
        .map_err(err)?;
    let monotone = r.deltas.windows(2).all(|d| d[1] < d[0]);
    let ratios: Vec<String> = r.ratios.iter().map(|x| format!("{x:.3}")).collect();
    Ok((
        r.cauchy && monotone,
        format!("L = 8pi, N = 4: differences {:.2e}, ratios [{}]", r.deltas[0], ratios.join(", ")),
    ))
}

fn artifacts(table: &Arc<PrimeTable>) -> Result<Artifacts, String> {
    let mut out = Vec::new();
    c3(&mut out)?;
    c4(&mut out)?;
    c5(&mut out)?;
    c6(&mut out)?;
    c7(table, &mut out)?;
    Ok(out)
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let (pass, detail) = match result {
            Ok((pass, detail)) => (pass && took <= budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {detail} [{:.2} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
}

fn main() {
    let secs = Duration::from_secs;
    let mut suite = Suite { failures: 0 };
    let mut first = Artifacts::new();
    let mut table: Option<Arc<PrimeTable>> = None;

    suite.run(1, "central identity", secs(1), c1);
    suite.run(2, "Euler product log", secs(5), c2);
    suite.run(3, "route equivalence", secs(60), || c3(&mut first));
    suite.run(4, "Plancherel normalisation", secs(10), || c4(&mut first));
    suite.run(5, "forward battery", secs(120), || c5(&mut first));
    suite.run(6, "oscillating counterexample", secs(60), || c6(&mut first));
    suite.run(7, "PNT pipeline", secs(300), || {
        let (t, status) = PrimeTable::load_or_build(100_000_000, &cache_dir()).map_err(err)?;
        let t = Arc::new(t);
        table = Some(t.clone());
        let (pass, detail) = c7(&t, &mut first)?;
        let how = if status == CacheStatus::Loaded { "table loaded" } else { "table sieved" };
        Ok((pass, format!("{how}, {detail}")))
    });
    suite.run(8, "positivity and symmetry", secs(120), c8);
    suite.run(9, "weak limit", secs(120), c9);
    suite.run(10, "determinism", secs(600), || {
        let table = table.as_ref().ok_or("prime table unavailable")?;
        let second = artifacts(table)?;
        if first.len() != second.len() {
            return Ok((false, format!("{} outputs, then {}", first.len(), second.len())));
        }
        let differing: Vec<&str> =
            first.iter().zip(&second).filter(|(a, b)| a != b).map(|(a, _)| a.0.as_str()).collect();
        let bytes: usize = first.iter().map(|(_, s)| s.len()).sum();
        if differing.is_empty() {
            Ok((true, format!("{} outputs, {bytes} bytes identical", first.len())))
        } else {
            Ok((false, format!("outputs differ: {}", differing.join(", "))))
        }
    });

    if suite.failures > 0 {
        println!("{} criteria failed", suite.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
