use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use kawahara::functionals::{EnergyKind, EnergyTrace, Observability};
use kawahara::model::{cdelay, length_below_critical, CoefficientProfile};
use kawahara::scalar::fmt17;
use kawahara::scenario::{CheckKind, Scenario, ScenarioOutcome};
use kawahara::spectral::{assemble, spectrum, SpectralVariant, MAX_AUGMENTED};
use kawahara::stepper::VariantTag;
use kawahara::theory::{fit_decay, floor_limited_end, ProofParameters, Selection, TheoryConstants};
use kawahara::Params;

const BUNDLED: &str = include_str!("../../../scenarios/mu_decay.cfg");

/// Numerical lab for the damped, time-delayed Kawahara equation.
#[derive(Parser)]
#[command(name = "kawahara", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its traces and check reports.
    Simulate {
        config: PathBuf,
        /// Output directory (default: the scenario's `output`, else `out/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the closed-form constants for a parameter set.
    CheckTheory(TheoryArgs),
    /// Eigenvalues of the delay-augmented generator of a scenario.
    Spectrum {
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "m-rho", default_value_t = 16)]
        m_rho: usize,
        /// Write all eigenvalues to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit an exponential rate to one energy column of a trace.csv.
    FitDecay {
        trace: PathBuf,
        #[arg(long, default_value = "mu")]
        which: String,
        /// Fit window `lo hi`; default from 20% of the horizon to the round-off floor.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<f64>>,
    },
    /// Observability ratio of a scenario run.
    Observability {
        config: PathBuf,
        /// Observation time (default: the scenario horizon).
        #[arg(long = "T")]
        t_obs: Option<f64>,
    },
    /// Run a scenario over a parameter grid in parallel and merge the results.
    Sweep {
        /// Base scenario (default: the bundled mu_decay scenario).
        #[arg(long)]
        config: Option<PathBuf>,
        /// `name:lo:hi:count`, repeatable; the grid is the Cartesian product.
        #[arg(long, required = true)]
        vary: Vec<String>,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long = "L")]
    length: f64,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    mu1: f64,
    #[arg(long)]
    mu2: f64,
    #[arg(long)]
    xi: f64,
    /// `‖a‖∞`.
    #[arg(long = "a-sup", default_value_t = 1.0)]
    a_sup: f64,
    /// `‖b‖∞`.
    #[arg(long = "b-sup", default_value_t = 0.0)]
    b_sup: f64,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    s: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// `Ok(false)` when a requested check failed.
fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Simulate { config, out } => simulate(&config, out),
        Command::CheckTheory(args) => {
            check_theory(&args)?;
            Ok(true)
        }
        Command::Spectrum { config, n, m_rho, out } => {
            spectrum_cmd(&config, n, m_rho, out.as_deref())?;
            Ok(true)
        }
        Command::FitDecay { trace, which, window } => {
            fit_decay_cmd(&trace, &which, window)?;
            Ok(true)
        }
        Command::Observability { config, t_obs } => observability(&config, t_obs),
        Command::Sweep { config, vary, out } => {
            sweep(config.as_deref(), &vary, out.as_deref())?;
            Ok(true)
        }
    }
}

fn load(path: &Path) -> Result<Scenario> {
    let scenario = Scenario::load(path).with_context(|| format!("reading scenario {}", path.display()))?;
    for w in &scenario.warnings {
        eprintln!("warning: {w}");
    }
    Ok(scenario)
}

/// Prints the check lines and any warnings after the first `seen`.
fn report(outcome: &ScenarioOutcome, seen: usize) {
    for w in outcome.warnings.iter().skip(seen) {
        eprintln!("warning: {w}");
    }
    for r in &outcome.reports {
        println!(
            "{:<16} {}  worst {:.6e} at t = {:.4}  (slack {:.3e})",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.worst_violation,
            r.time_of_worst,
            r.slack
        );
    }
}

fn simulate(config: &Path, out: Option<PathBuf>) -> Result<bool> {
    let scenario = load(config)?;
    let outcome = scenario.run()?;
    let dir = out
        .or_else(|| scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));
    outcome.write(&dir).with_context(|| format!("writing {}", dir.display()))?;
    report(&outcome, scenario.warnings.len());
    println!("artifacts in {}", dir.display());
    Ok(!outcome.failed)
}

fn check_theory(a: &TheoryArgs) -> Result<()> {
    let mut params = Params::new(a.length, 40);
    params.h = a.h;
    params.mu1 = a.mu1;
    params.mu2 = a.mu2;
    params.xi = a.xi;
    params.a = CoefficientProfile::constant(a.a_sup);
    params.b = CoefficientProfile::constant(a.b_sup);
    let proof = ProofParameters {
        eta: a.eta,
        eps: a.eps,
        s: a.s,
    };
    let consts = TheoryConstants::compute(&params, proof, Selection::default())?;
    if !cdelay(a.h, a.mu1, a.mu2, a.xi) {
        eprintln!("warning: h mu2 < xi < h (2 mu1 - mu2) fails");
    }
    if !length_below_critical(a.length) {
        eprintln!("warning: L >= pi sqrt(3)");
    }
    print!("{}", consts.table());
    Ok(())
}

fn spectrum_cmd(config: &Path, n: Option<usize>, m_rho: usize, out: Option<&Path>) -> Result<()> {
    let scenario = load(config)?;
    let variant = match scenario.variant.tag {
        VariantTag::Perturbed | VariantTag::AuxiliaryLinear => SpectralVariant::Aux,
        VariantTag::Fd1 => bail!("the fd1 variant has no augmented operator"),
        _ => SpectralVariant::Mu,
    };
    let n = n.unwrap_or(scenario.params.n);
    if n * m_rho > MAX_AUGMENTED {
        bail!("n * m_rho = {} exceeds {MAX_AUGMENTED}", n * m_rho);
    }
    let op = assemble(&scenario.params, variant, n, m_rho)?;
    let spec = spectrum(&op)?;
    println!("abscissa = {}", fmt17(spec.abscissa()));
    for z in spec.rightmost(3) {
        println!("eigenvalue = {} {:+}i", fmt17(z.re), z.im);
    }
    if let Some(path) = out {
        fs::write(path, spec.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn fit_decay_cmd(path: &Path, which: &str, window: Option<Vec<f64>>) -> Result<()> {
    let which = EnergyKind::parse(which)?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let trace = EnergyTrace::<f64>::from_csv(&text, VariantTag::Mu)?;
    let t_end = trace.points.last().map_or(0.0, |p| p.t);
    let window = match window.as_deref() {
        Some(&[lo, hi]) => (lo, hi),
        _ => {
            let lo = 0.2 * t_end;
            (lo, floor_limited_end(&trace, which, lo, 1e-20).unwrap_or(t_end))
        }
    };
    let fit = fit_decay(&trace, which, window)?;
    println!(
        "gamma_emp = {}  kappa_emp = {}  window = [{}, {}]  samples = {}  residual = {:.3e}",
        fmt17(fit.gamma_emp),
        fmt17(fit.kappa_emp),
        fit.window.0,
        fit.window.1,
        fit.samples,
        fit.residual
    );
    Ok(())
}

fn observability(config: &Path, t_obs: Option<f64>) -> Result<bool> {
    let mut scenario = load(config)?;
    scenario.checks.run = vec![CheckKind::Observability];
    if t_obs.is_some() {
        scenario.checks.observability_time = t_obs;
    }
    let outcome = scenario.run()?;
    match outcome.observability {
        Some(Observability::Ratio(r)) => {
            println!("observability_ratio = {}", fmt17(r));
            Ok(true)
        }
        Some(Observability::Unobservable) => {
            println!("observability_ratio = unobservable");
            Ok(false)
        }
        _ => {
            println!("observability_ratio = degenerate");
            Ok(false)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Axis {
    key: String,
    values: Vec<f64>,
}

fn parse_axis(spec: &str) -> Result<Axis> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [key, lo, hi, count] = parts.as_slice() else {
        bail!("--vary expects name:lo:hi:count, got '{spec}'");
    };
    let lo: f64 = lo.parse().with_context(|| format!("lower bound in '{spec}'"))?;
    let hi: f64 = hi.parse().with_context(|| format!("upper bound in '{spec}'"))?;
    let count: usize = count.parse().with_context(|| format!("count in '{spec}'"))?;
    if count == 0 {
        bail!("count must be positive in '{spec}'");
    }
    let values = if count == 1 {
        vec![lo]
    } else {
        (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect()
    };
    Ok(Axis {
        key: key.to_string(),
        values,
    })
}

fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

const SWEEP_COLUMNS: &str = "cdelay,length_ok,C0,gamma_theory,gamma_emp,energy_ratio,checks_passed,status";

fn sweep_row(base: &Scenario, axes: &[Axis], point: &[f64]) -> String {
    let mut s = base.clone();
    let mut cells: Vec<String> = point.iter().map(|&v| fmt17(v)).collect();
    let set = axes.iter().zip(point).try_for_each(|(a, &v)| s.set(&a.key, v));
    let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), fmt17);
    let p = &s.params;
    cells.push(cdelay(p.h, p.mu1, p.mu2, p.xi).to_string());
    cells.push(length_below_critical(p.length).to_string());
    let outcome = set.and_then(|_| {
        let mut p = s.params.clone();
        p.align_dt();
        s.params = p;
        s.params.check()?;
        s.run()
    });
    match outcome {
        Ok(o) => {
            let pts = &o.run.trace.points;
            let ratio = match (pts.first(), pts.last()) {
                (Some(a), Some(b)) if a.energy(o.which) > 0.0 => Some(b.energy(o.which) / a.energy(o.which)),
                _ => None,
            };
            cells.push(opt(o.constants.c0));
            cells.push(opt(o.constants.p6j.map(|k| k.gamma)));
            cells.push(opt(o.fit.map(|f| f.gamma_emp)));
            cells.push(opt(ratio));
            cells.push(format!("{}/{}", o.reports.iter().filter(|r| r.passed).count(), o.reports.len()));
            cells.push("ok".into());
        }
        Err(e) => {
            cells.extend(std::iter::repeat("nan".to_string()).take(4));
            cells.push("0/0".into());
            let status = match e {
                kawahara::Error::BlowUp { .. } => "blow-up".to_string(),
                other => format!("error: {}", other.to_string().replace(',', ";")),
            };
            cells.push(status);
        }
    }
    cells.join(",")
}

fn sweep(config: Option<&Path>, vary: &[String], out: Option<&Path>) -> Result<()> {
    let base = match config {
        Some(p) => load(p)?,
        None => Scenario::parse(BUNDLED)?,
    };
    let axes = vary.iter().map(|v| parse_axis(v)).collect::<Result<Vec<_>>>()?;
    for a in &axes {
        base.clone().set(&a.key, a.values[0])?;
    }
    let points = grid_points(&axes);
    let rows: Vec<String> = points.par_iter().map(|pt| sweep_row(&base, &axes, pt)).collect();
    let mut csv = axes.iter().map(|a| a.key.as_str()).collect::<Vec<_>>().join(",");
    csv.push(',');
    csv.push_str(SWEEP_COLUMNS);
    csv.push('\n');
    for r in rows {
        csv.push_str(&r);
        csv.push('\n');
    }
    match out {
        Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}
