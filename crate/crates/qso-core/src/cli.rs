//! Command-line front end: one verb per pipeline stage, machine-readable
//! output (JSON reports, CSV grids/traces), deterministic given flags and
//! seed.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::atomic;
use crate::bounds;
use crate::cdf::{CdfMeasure, DensityOrbit};
use crate::convergence::{self, InitialMeasure, Metric};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::output;
use crate::particle;
use crate::verify::{self, Status};

/// Environment variable naming a directory for default-named output files
/// when `--output` is omitted.
pub const OUTPUT_DIR_ENV: &str = "QSO_OUTPUT_DIR";

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err("p must lie in [0,1]".to_string());
    }
    Ok(v)
}

fn parse_tolerance(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() || v <= 0.0 {
        return Err("tol must be positive".to_string());
    }
    Ok(v)
}

fn parse_grid(s: &str) -> std::result::Result<u32, String> {
    let v: u32 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if v < 2 {
        return Err("grid must have at least 2 points".to_string());
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    W1,
    TailMass,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::W1 => Metric::W1,
            MetricArg::TailMass => Metric::TailMass,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qso",
    version,
    about = "Volterra-type quadratic stochastic operator dynamics on measures over [0,1)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for particle stepping (default 1 for reproducibility)
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Output file; stdout when omitted (QSO_OUTPUT_DIR supplies a default
    /// directory for default-named files)
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,

    /// Which artifact goes to stdout when a command produces both CSV and
    /// JSON
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate an atomic measure and emit the weight trajectory as JSON
    IterateAtoms {
        #[arg(long, value_parser = parse_probability)]
        p: f64,
        /// `atoms a1:w1,a2:w2,...`
        #[arg(long)]
        initial: String,
        #[arg(long, default_value_t = 20)]
        steps: u32,
    },
    /// Evaluate the CDF/density orbit on a grid and emit CSV (x,g_n,f_n,log_f_n)
    Density {
        #[arg(long, value_parser = parse_probability)]
        p: f64,
        /// `uniform` | `pow:<k>` | `grid:<path>`
        #[arg(long)]
        initial: String,
        /// Orbit step n (g_n pairs with f_n)
        #[arg(long, default_value_t = 20)]
        steps: u32,
        #[arg(long, value_parser = parse_grid, default_value_t = 1001)]
        grid: u32,
    },
    /// One-step image of an interval: a single JSON number
    PushInterval {
        #[arg(long, value_parser = parse_probability)]
        p: f64,
        #[arg(long)]
        initial: String,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
    /// Certificate constants and grid verification as JSON
    Bounds {
        #[arg(long, value_parser = parse_probability)]
        p: f64,
        /// Certificate step count; defaults to the smallest valid n
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, default_value = "uniform")]
        initial: String,
        #[arg(long, value_parser = parse_grid, default_value_t = 1001)]
        grid: u32,
    },
    /// Run to the predicted Dirac limit; JSON report plus CSV distance trace
    Converge {
        #[arg(long, value_parser = parse_probability)]
        p: f64,
        #[arg(long)]
        initial: String,
        /// Maximum number of steps
        #[arg(long, default_value_t = 20)]
        steps: u32,
        #[arg(long, value_parser = parse_tolerance, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = MetricArg::W1)]
        metric: MetricArg,
    },
    /// Sample and step a particle ensemble; ensemble CSV plus JSON summary
    Particles {
        #[arg(long, value_parser = parse_probability)]
        p: f64,
        #[arg(long)]
        initial: String,
        #[arg(long, default_value_t = 20)]
        steps: u32,
        /// Ensemble size
        #[arg(long, default_value_t = 100_000)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Run the full invariant suite; nonzero exit on any failure
    Verify,
}

/// Parses the `--initial` measure descriptor.
pub fn parse_initial(s: &str) -> Result<InitialMeasure> {
    let bad = |reason: &str| Error::BadInitialMeasure {
        input: s.to_string(),
        reason: reason.to_string(),
    };
    if s == "uniform" {
        return Ok(InitialMeasure::Cdf(CdfMeasure::uniform()));
    }
    if let Some(k) = s.strip_prefix("pow:") {
        let k: f64 = k
            .parse()
            .map_err(|_| bad("exponent after `pow:` is not a number"))?;
        return Ok(InitialMeasure::Cdf(CdfMeasure::power(k)?));
    }
    if let Some(path) = s.strip_prefix("grid:") {
        let nodes = output::read_grid_csv(path)?;
        return Ok(InitialMeasure::Cdf(CdfMeasure::from_grid(nodes)?));
    }
    if let Some(list) = s.strip_prefix("atoms ") {
        let mut pairs = Vec::new();
        for item in list.split(',') {
            let (a, w) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| bad("expected `position:weight` pairs"))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| bad("atom position is not a number"))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| bad("atom weight is not a number"))?;
            if !(0.0..1.0).contains(&a) {
                return Err(Error::PointOutOfDomain(a));
            }
            if w <= 0.0 {
                return Err(bad("atom weights must be positive"));
            }
            pairs.push((a, w));
        }
        if pairs.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(bad("atoms must be strictly increasing"));
        }
        let sum: f64 = pairs.iter().map(|p| p.1).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::WeightSumMismatch { sum, tol: 1e-9 });
        }
        for p in &mut pairs {
            p.1 /= sum;
        }
        return Ok(InitialMeasure::Atomic(atomic::AtomicMeasure::new(pairs)?));
    }
    Err(bad(
        "expected `uniform`, `pow:<k>`, `atoms <a:w,...>`, or `grid:<path>`",
    ))
}

fn cdf_of(initial: &InitialMeasure, flag_value: &str) -> Result<CdfMeasure> {
    match initial {
        InitialMeasure::Cdf(c) => Ok(c.clone()),
        InitialMeasure::Atomic(_) => Err(Error::BadInitialMeasure {
            input: flag_value.to_string(),
            reason: "this command needs a continuous initial measure".to_string(),
        }),
    }
}

fn atomic_of(initial: &InitialMeasure, flag_value: &str) -> Result<atomic::AtomicMeasure> {
    match initial {
        InitialMeasure::Atomic(m) => Ok(m.clone()),
        InitialMeasure::Cdf(_) => Err(Error::BadInitialMeasure {
            input: flag_value.to_string(),
            reason: "this command needs an atomic initial measure (`atoms a:w,...`)".to_string(),
        }),
    }
}

/// Where a command's primary artifact goes: the explicit path, a
/// default-named file under QSO_OUTPUT_DIR, or stdout.
fn resolve_output(explicit: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.clone());
    }
    std::env::var_os(OUTPUT_DIR_ENV).map(|dir| Path::new(&dir).join(default_name))
}

fn write_to(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        action: "create",
        path: path.display().to_string(),
        source,
    })?;
    body(&mut file)
}

fn emit(path: Option<PathBuf>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => write_to(&p, body),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)
        }
    }
}

#[derive(Serialize)]
struct ParticleComparison {
    kind: &'static str,
    value: f64,
}

#[derive(Serialize)]
struct ParticleSummary {
    p: f64,
    initial: String,
    count: usize,
    steps: u32,
    seed: u64,
    threads: usize,
    mean: f64,
    comparison: ParticleComparison,
}

#[derive(Serialize)]
struct InvalidCertificateReport {
    certificate: bounds::BoundCertificate,
    warning: String,
}

/// Executes a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> Result<i32> {
    let threads = cli.threads.max(1);
    match cli.command {
        Command::IterateAtoms { p, initial, steps } => {
            let k = KernelParams::new(p)?;
            let m = atomic_of(&parse_initial(&initial)?, &initial)?;
            let trajectory = atomic::iterate(k, &m, steps as usize);
            emit(resolve_output(&cli.output, "iterate-atoms.json"), |w| {
                output::write_json(w, &trajectory)
            })?;
            Ok(0)
        }
        Command::Density {
            p,
            initial,
            steps,
            grid,
        } => {
            let k = KernelParams::new(p)?;
            let base = cdf_of(&parse_initial(&initial)?, &initial)?;
            let orbit = DensityOrbit::new(k, base, steps.max(1))?;
            emit(resolve_output(&cli.output, "density.csv"), |w| {
                output::write_density_csv(w, &orbit, grid)
            })?;
            Ok(0)
        }
        Command::PushInterval { p, initial, a, b } => {
            let k = KernelParams::new(p)?;
            let base = cdf_of(&parse_initial(&initial)?, &initial)?;
            let value = crate::cdf::pushforward_interval(k, &base, a, b)?;
            emit(resolve_output(&cli.output, "push-interval.json"), |w| {
                w.write_all(
                    format!("{}\n", serde_json::to_string(&value).expect("number")).as_bytes(),
                )
                .map_err(|source| Error::Io {
                    action: "write",
                    path: "<stream>".to_string(),
                    source,
                })
            })?;
            Ok(0)
        }
        Command::Bounds {
            p,
            n,
            initial,
            grid,
        } => {
            let k = KernelParams::new(p)?;
            let n = match n {
                Some(n) => n,
                None => bounds::min_valid_n(k)?,
            };
            let cert = bounds::certificate(k, n)?;
            let dest = resolve_output(&cli.output, "bounds.json");
            if !cert.valid {
                eprintln!(
                    "warning: certificate at n={n} is invalid (beta_n={} below threshold); skipping grid verification",
                    cert.beta_n
                );
                emit(dest, |w| {
                    output::write_json(
                        w,
                        &InvalidCertificateReport {
                            certificate: cert,
                            warning: "certificate invalid at this n; no checks run".to_string(),
                        },
                    )
                })?;
                return Ok(0);
            }
            let base = cdf_of(&parse_initial(&initial)?, &initial)?;
            let report = bounds::verify_bounds(k, &base, n, grid)?;
            emit(dest, |w| output::write_json(w, &report))?;
            Ok(if report.all_pass { 0 } else { 1 })
        }
        Command::Converge {
            p,
            initial,
            steps,
            tol,
            metric,
        } => {
            let k = KernelParams::new(p)?;
            let init = parse_initial(&initial)?;
            let report = convergence::run_to_convergence(k, &init, metric.into(), tol, steps)?;
            match resolve_output(&cli.output, "converge.json") {
                Some(path) => {
                    write_to(&path, |w| output::write_json(w, &report))?;
                    let trace = path.with_extension("trace.csv");
                    write_to(&trace, |w| output::write_trace_csv(w, &report.distances))?;
                }
                None => match cli.format {
                    OutputFormat::Json => emit(None, |w| output::write_json(w, &report))?,
                    OutputFormat::Csv => {
                        emit(None, |w| output::write_trace_csv(w, &report.distances))?
                    }
                },
            }
            Ok(0)
        }
        Command::Particles {
            p,
            initial,
            steps,
            count,
            seed,
        } => {
            let k = KernelParams::new(p)?;
            let init = parse_initial(&initial)?;
            let ensemble = particle::run(k, &init, count, steps, seed, threads)?;
            let comparison = match &init {
                InitialMeasure::Cdf(base) => {
                    let orbit = particle::analytic_cdf_orbit(k, base, steps)?;
                    let ks = ensemble.kolmogorov_distance(|x| orbit.cdf_at(x).unwrap_or(f64::NAN));
                    ParticleComparison {
                        kind: "kolmogorov_vs_analytic_cdf",
                        value: ks,
                    }
                }
                InitialMeasure::Atomic(m) => {
                    let exact = atomic::iterate(k, m, steps as usize);
                    let last = exact.weights_per_step.last().expect("rows");
                    let emp = particle::empirical_weights(&ensemble, &exact.atoms);
                    let worst = emp
                        .iter()
                        .zip(last)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    ParticleComparison {
                        kind: "max_atom_weight_error",
                        value: worst,
                    }
                }
            };
            let summary = ParticleSummary {
                p,
                initial: init.describe(),
                count,
                steps,
                seed,
                threads,
                mean: ensemble.mean(),
                comparison,
            };
            match resolve_output(&cli.output, "particles.csv") {
                Some(path) => {
                    write_to(&path, |w| output::write_ensemble_csv(w, ensemble.points()))?;
                    let summary_path = path.with_extension("summary.json");
                    write_to(&summary_path, |w| output::write_json(w, &summary))?;
                }
                None => match cli.format {
                    OutputFormat::Csv => {
                        emit(None, |w| output::write_ensemble_csv(w, ensemble.points()))?
                    }
                    OutputFormat::Json => emit(None, |w| output::write_json(w, &summary))?,
                },
            }
            Ok(0)
        }
        Command::Verify => {
            let outcomes = verify::run_all();
            match cli.format {
                OutputFormat::Json => emit(None, |w| output::write_json(w, &outcomes))?,
                OutputFormat::Csv => {
                    let stdout = std::io::stdout();
                    let mut w = stdout.lock();
                    for c in &outcomes {
                        let tag = match c.status {
                            Status::Pass => "PASS",
                            Status::Fail => "FAIL",
                            Status::Info => "INFO",
                        };
                        writeln!(w, "{tag} {}/{}: {}", c.module, c.name, c.detail).map_err(
                            |source| Error::Io {
                                action: "write",
                                path: "<stdout>".to_string(),
                                source,
                            },
                        )?;
                    }
                }
            }
            Ok(if verify::all_passed(&outcomes) { 0 } else { 1 })
        }
    }
}
