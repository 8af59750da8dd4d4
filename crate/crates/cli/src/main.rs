//! `diastatic`: diastasis, calibration constant and entropies of radial
//! Kähler metrics on the unit ball.
//!
//! Results go to stdout (or `--out`) as a JSON [`RunReport`]; a short human
//! summary goes to stderr unless `--quiet`.
//!
//! Exit codes: 0 success, 1 a check or verdict failed, 2 invalid spec or
//! arguments, 3 numerical failure.

use std::fmt;
use std::fs;
use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use diastatic_core::calibration::{calibration_constant, grad_norm};
use diastatic_core::diastasis::{diastasis_eval, distance_bound, polarize_radial};
use diastatic_core::entropy::{
    basepoint_sandwich_check, diastatic_entropy_detailed, volume_entropy_growth,
    volume_entropy_integral_detailed, EntropyEstimate, EntropyOptions, Method,
};
use diastatic_core::model::{ensure_valid, metric_tensor, MetricSpec};
use diastatic_core::num_complex::Complex64;
use diastatic_core::report::{PointEvaluation, ResultItem, RunReport, TableRow};
use diastatic_core::rigidity::{
    bcg_proxy_scan, lower_bound_check, minimality_scan, scaling_law_check, Verdict,
};
use diastatic_core::verify::{run_battery, BatteryConfig, Mutation};
use diastatic_core::Error;

#[derive(Debug, Parser)]
#[command(name = "diastatic", version, about = "Diastatic and volume entropy of radial Kähler metrics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON spec file, or `hyperbolic:N` for the built-in ball of dimension N.
    #[arg(long, global = true)]
    spec: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write tabular data (fit samples, scan rows, table rows) as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Tolerance for checks and the growth fit.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Radial fit window `r_lo,r_hi`.
    #[arg(long, global = true, value_parser = parse_window)]
    window: Option<(f64, f64)>,
    #[arg(long, global = true)]
    quiet: bool,
    /// Omit the timestamp so reports are byte-reproducible.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Diastasis, metric determinant, distance and gradient norm at `z`, `w`.
    Eval {
        /// Components as `re` or `re:im`, comma separated; missing ones are 0.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        w: String,
    },
    /// Calibration constant `sup ‖grad D‖`.
    Calibration,
    Entropy {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, value_enum, default_value_t = MethodArg::Asymptotic)]
        method: MethodArg,
    },
    Check {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, default_value_t = 4.0)]
        lambda: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0])]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        w1: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0.3")]
        w2: String,
        #[arg(long, default_value_t = 1.5)]
        c: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.9, 0.99, 0.999])]
        radii: Vec<f64>,
    },
    /// Entropies across the family `−log(1 − t) + a t^k`, volume-normalized.
    Scan {
        /// Values of `a`, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        family: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        coeff: usize,
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
    },
    /// Per-dimension table for the hyperbolic ball.
    Table {
        #[arg(long, required = true)]
        hyperbolic: bool,
        #[arg(long, value_parser = parse_range, default_value = "1..3")]
        n_range: (usize, usize),
    },
    /// Invariant battery; exits 1 if any check fails.
    Verify {
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Skip the entropy cross-checks.
        #[arg(long)]
        fast: bool,
        #[arg(long, hide = true, default_value = "none")]
        mutate: Mutation,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Diastatic,
    Volume,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Asymptotic,
    Cutoff,
    Growth,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    LowerBound,
    Scaling,
    Basepoint,
    BcgProxy,
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) => e.exit_code() as u8,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "InvalidArgument: {m}"),
            Failure::Io(m) => write!(f, "IoError: {m}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `r_lo,r_hi`")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(0.0 < a && a < b && b < 1.0) {
        return Err("need 0 < r_lo < r_hi < 1".into());
    }
    Ok((a, b))
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or("expected `A..B`")?;
    let a: usize = a.parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.parse().map_err(|e| format!("{e}"))?;
    if a == 0 || a > b {
        return Err("need 1 <= A <= B".into());
    }
    Ok((a, b))
}

fn parse_complex(s: &str) -> CliResult<Complex64> {
    let bad = |_| Failure::Usage(format!("bad complex number `{s}`"));
    match s.split_once(':') {
        Some((re, im)) => Ok(Complex64::new(
            re.trim().parse().map_err(bad)?,
            im.trim().parse().map_err(bad)?,
        )),
        None => Ok(Complex64::new(s.trim().parse().map_err(bad)?, 0.0)),
    }
}

fn parse_point(s: &str, dim: usize) -> CliResult<Vec<Complex64>> {
    let mut out = s
        .split(',')
        .map(parse_complex)
        .collect::<CliResult<Vec<_>>>()?;
    if out.len() > dim {
        return Err(Failure::Usage(format!(
            "point `{s}` has {} components, spec has dim {dim}",
            out.len()
        )));
    }
    out.resize(dim, Complex64::new(0.0, 0.0));
    Ok(out)
}

fn load_spec(arg: Option<&str>) -> CliResult<MetricSpec> {
    let arg = arg.ok_or_else(|| Failure::Usage("--spec is required".into()))?;
    if let Some(n) = arg.strip_prefix("hyperbolic:") {
        let dim: usize = n
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad dimension in `{arg}`")))?;
        let spec = MetricSpec::hyperbolic(dim);
        spec.check_well_formed()?;
        return Ok(spec);
    }
    let text = fs::read_to_string(arg).map_err(|e| Failure::Io(format!("{arg}: {e}")))?;
    Ok(MetricSpec::from_json(&text)?)
}

fn options(global: &Global) -> EntropyOptions {
    let mut opts = EntropyOptions::default();
    if let Some((lo, hi)) = global.window {
        opts.window.r_lo = lo;
        opts.window.r_hi = hi;
    }
    if let Some(tol) = global.tol {
        opts.growth.tolerance = tol;
    }
    opts
}

struct Outcome {
    report: RunReport,
    csv: Option<String>,
    summary: Vec<String>,
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    let g = &cli.global;
    let opts = options(g);
    let mut csv = None;
    let mut summary = Vec::new();
    let report = match &cli.command {
        Command::Eval { z, w } => {
            let spec = load_spec(g.spec.as_deref())?;
            ensure_valid(&spec, false)?;
            let z = parse_point(z, spec.dim)?;
            let w = parse_point(w, spec.dim)?;
            let kernel = polarize_radial(&spec);
            let eval = PointEvaluation {
                diastasis: diastasis_eval(&kernel, &z, &w)?,
                distance: distance_bound(&spec, &z, &w)?,
                metric_det: metric_tensor(&spec, &z)?.det,
                grad_norm: grad_norm(&spec, &kernel, &z, &w)?,
                z,
                w,
            };
            summary.push(format!(
                "diastasis {:.10}  distance {:.10}  det g {:.10}  |grad| {:.10}",
                eval.diastasis, eval.distance, eval.metric_det, eval.grad_norm
            ));
            let mut r = RunReport::new("eval", Some(spec));
            r.results.push(ResultItem::Eval(eval));
            r
        }
        Command::Calibration => {
            let spec = load_spec(g.spec.as_deref())?;
            ensure_valid(&spec, true)?;
            let est = calibration_constant(&spec, &polarize_radial(&spec), &opts.search)?;
            summary.push(format!(
                "calibration {:.10} (residual {:e}, boundary limit {})",
                est.value, est.extrapolation_residual, est.attained_at.boundary_limit
            ));
            let mut r = RunReport::new("calibration", Some(spec));
            r.results.push(ResultItem::Calibration(est));
            r
        }
        Command::Entropy { kind, method } => {
            let spec = load_spec(g.spec.as_deref())?;
            ensure_valid(&spec, true)?;
            let mut r = RunReport::new("entropy", Some(spec.clone()));
            match (kind, method) {
                (Kind::Diastatic, MethodArg::Growth) => {
                    return Err(Failure::Usage(
                        "the growth method applies to the volume entropy only".into(),
                    ))
                }
                (Kind::Diastatic, m) => {
                    let d = diastatic_entropy_detailed(&spec, &opts)?;
                    let est = match m {
                        MethodArg::Cutoff => {
                            let x = &d.calibration;
                            let c = &d.exponent_cutoff;
                            EntropyEstimate {
                                value: x.value * c.value,
                                error: ((x.value * c.error).powi(2)
                                    + (c.value * x.error()).powi(2))
                                .sqrt(),
                                method: Method::CutoffBisection,
                                ..d.estimate.clone()
                            }
                        }
                        _ => d.estimate.clone(),
                    };
                    summary.push(format!("Ent_d {:.10} ± {:.2e}", est.value, est.error));
                    csv = Some(d.fit.to_csv());
                    r.results.push(ResultItem::Entropy(est));
                    r.results.push(ResultItem::Calibration(d.calibration));
                    r.results.push(ResultItem::Entropy(d.exponent));
                    r.results.push(ResultItem::Entropy(d.exponent_cutoff));
                    r.diagnostics.push(d.fit);
                }
                (Kind::Volume, MethodArg::Growth) => {
                    let gr = volume_entropy_growth(&spec, &opts.growth)?;
                    summary.push(format!(
                        "Ent_v {:.10} ± {:.2e} (growth; quotients in [{:.6}, {:.6}])",
                        gr.estimate.value, gr.estimate.error, gr.liminf, gr.limsup
                    ));
                    if !gr.sandwich_holds {
                        r.status = 1;
                    }
                    r.results.push(ResultItem::Growth(gr));
                }
                (Kind::Volume, m) => {
                    let v = volume_entropy_integral_detailed(&spec, &opts)?;
                    let est = match m {
                        MethodArg::Cutoff => v.cutoff.clone(),
                        _ => v.estimate.clone(),
                    };
                    summary.push(format!("Ent_v {:.10} ± {:.2e}", est.value, est.error));
                    csv = Some(v.fit.to_csv());
                    r.results.push(ResultItem::Entropy(est));
                    r.diagnostics.push(v.fit);
                }
            }
            r
        }
        Command::Check {
            which,
            lambda,
            lambdas,
            r0,
            w1,
            w2,
            c,
            radii,
        } => {
            let spec = load_spec(g.spec.as_deref())?;
            ensure_valid(&spec, true)?;
            let mut r = RunReport::new("check", Some(spec.clone()));
            let passed = match which {
                Which::LowerBound => {
                    let cmp = lower_bound_check(&spec, &opts)?;
                    summary.push(format!(
                        "Ent_d {:.8} >= Ent_v {:.8}: {} (margin {:.3e})",
                        cmp.ent_d.value,
                        cmp.ent_v.value,
                        cmp.verdict.as_str(),
                        cmp.margin
                    ));
                    let ok = cmp.verdict == Verdict::Holds;
                    r.results.push(ResultItem::Comparison(cmp));
                    ok
                }
                Which::Scaling => {
                    let rep = scaling_law_check(&spec, *lambda, &opts, g.tol.unwrap_or(0.02))?;
                    summary.push(format!(
                        "lambda {}: entropy ratios {:.6}/{:.6} (expected {:.6}), calibration ratio {:.6}",
                        rep.lambda,
                        rep.ent_d_ratio,
                        rep.ent_v_ratio,
                        rep.expected_entropy_ratio,
                        rep.calibration_ratio
                    ));
                    let ok = rep.passed;
                    r.results.push(ResultItem::Scaling(rep));
                    ok
                }
                Which::Basepoint => {
                    let rep = basepoint_sandwich_check(
                        &spec,
                        &polarize_radial(&spec),
                        parse_complex(w1)?,
                        parse_complex(w2)?,
                        *c,
                        radii,
                    )?;
                    summary.push(format!(
                        "base-point sandwich over {} radii: {}",
                        rep.rows.len(),
                        if rep.passed { "passed" } else { "failed" }
                    ));
                    let ok = rep.passed;
                    r.results.push(ResultItem::Sandwich(rep));
                    ok
                }
                Which::BcgProxy => {
                    let rep = bcg_proxy_scan(&spec, lambdas, *r0, &opts, g.tol.unwrap_or(0.03))?;
                    summary.push(format!("proxy functional spread {:.3e}", rep.spread));
                    let ok = rep.passed;
                    r.results.push(ResultItem::BcgProxy(rep));
                    ok
                }
            };
            if !passed {
                r.status = 1;
            }
            r
        }
        Command::Scan {
            family,
            n,
            coeff,
            r0,
        } => {
            let table = minimality_scan(family, *n, *coeff, *r0, &opts)?;
            csv = Some(table.to_csv());
            let mut r = RunReport::new("scan", None);
            for row in &table.rows {
                summary.push(format!(
                    "a = {:>8}: Ent_d {:.6}  Ent_v {:.6}  {}",
                    row.param,
                    row.ent_d,
                    row.ent_v,
                    row.verdict.as_str()
                ));
            }
            if table.rows.iter().any(|row| row.verdict == Verdict::Violated) {
                r.status = 1;
            }
            r.results.push(ResultItem::Scan(table));
            r
        }
        Command::Table { n_range, .. } => {
            let mut r = RunReport::new("table", None);
            let mut text = String::from(
                "n,calibration,exponent,exponent_cutoff,ent_d,ent_d_err,ent_v,ent_v_err,ent_v_growth\n",
            );
            summary.push(format!(
                "{:>2} {:>12} {:>12} {:>12} {:>12}",
                "n", "calibration", "c*", "Ent_d", "Ent_v"
            ));
            for n in n_range.0..=n_range.1 {
                let spec = MetricSpec::hyperbolic(n);
                let d = diastatic_entropy_detailed(&spec, &opts)?;
                let v = volume_entropy_integral_detailed(&spec, &opts)?;
                let gr = volume_entropy_growth(&spec, &opts.growth)?;
                let row = TableRow {
                    n,
                    calibration: d.calibration.value,
                    exponent: d.exponent.value,
                    exponent_cutoff: d.exponent_cutoff.value,
                    ent_d: d.estimate.value,
                    ent_d_err: d.estimate.error,
                    ent_v: v.estimate.value,
                    ent_v_err: v.estimate.error,
                    ent_v_growth: gr.estimate.value,
                };
                summary.push(format!(
                    "{:>2} {:>12.8} {:>12.8} {:>12.8} {:>12.8}",
                    n, row.calibration, row.exponent, row.ent_d, row.ent_v
                ));
                text.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    n,
                    row.calibration,
                    row.exponent,
                    row.exponent_cutoff,
                    row.ent_d,
                    row.ent_d_err,
                    row.ent_v,
                    row.ent_v_err,
                    row.ent_v_growth
                ));
                r.results.push(ResultItem::Table(row));
                r.diagnostics.push(d.fit);
                r.diagnostics.push(v.fit);
            }
            csv = Some(text);
            r
        }
        Command::Verify {
            samples,
            fast,
            mutate,
        } => {
            let spec = load_spec(g.spec.as_deref())?;
            ensure_valid(&spec, false)?;
            let config = BatteryConfig {
                seed: g.seed,
                samples: *samples,
                mutation: *mutate,
                entropy: !fast,
                options: opts,
            };
            let checks = run_battery(&spec, &config)?;
            let mut r = RunReport::new("verify", Some(spec));
            for check in checks {
                summary.push(format!(
                    "{:<28} {}  worst {:.3e}  tol {:.1e}",
                    check.name,
                    if check.passed { "pass" } else { "FAIL" },
                    check.worst,
                    check.tolerance
                ));
                if !check.passed {
                    r.status = 1;
                }
                r.results.push(ResultItem::Check(check));
            }
            r
        }
    };
    Ok(Outcome {
        report,
        csv,
        summary,
    })
}

fn emit(cli: &Cli, mut outcome: Outcome) -> CliResult<u8> {
    let g = &cli.global;
    if !g.no_timestamp {
        outcome.report.timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    let json = outcome.report.to_json();
    match &g.out {
        Some(path) => fs::write(path, format!("{json}\n"))
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        None => println!("{json}"),
    }
    if let Some(path) = &g.csv {
        match &outcome.csv {
            Some(text) => fs::write(path, text)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
            None => {
                return Err(Failure::Usage(
                    "this command produces no tabular data for --csv".into(),
                ))
            }
        }
    }
    if !g.quiet {
        for line in &outcome.summary {
            eprintln!("{line}");
        }
    }
    Ok(outcome.report.status as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = panic::catch_unwind(|| run(&cli).and_then(|o| emit(&cli, o)));
    match result {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(failure)) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
        Err(_) => {
            eprintln!("error: InternalPanic: numerical routine aborted");
            ExitCode::from(3)
        }
    }
}
