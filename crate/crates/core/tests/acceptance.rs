//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kawahara::delay::DelayHistory;
use kawahara::functionals::{
    bilinear_estimate_check, decay_envelope_ratio, dissipation_check, energy_identity_check, h_norm,
    lyapunov_decay_check, observability_ratio, EnergyKind, LyapunovFamily, Observability, Sampled,
};
use kawahara::model::CoefficientProfile;
use kawahara::spectral::{assemble, dissipativity_margin, spectral_abscissa, SpectralVariant};
use kawahara::stepper::{simulate, simulate_with, Stepper, SystemVariant, VariantTag};
use kawahara::theory::{
    c0, delta_bound, fit_decay, floor_limited_end, nu_from_eta, nu_from_observability, p6j_constants,
    p6j_kappa, p7j_constants, t0_tmin,
};
use kawahara::{Grid, Params};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn sin_mode(l: f64) -> impl Fn(f64, f64) -> f64 + Clone {
    move |x, _| {
        let s = x / l;
        (PI * s).sin() * s * (1.0 - s).powi(2)
    }
}

/// `L = 3`, `h = 1`, `μ₁ = 2`, `μ₂ = 1`, `ξ = 1.5`, `a = 1` on `(0, L/2)`.
fn mu_params(n: usize, t_final: f64) -> Params {
    let mut p = Params {
        h: 1.0,
        mu1: 2.0,
        mu2: 1.0,
        xi: 1.5,
        a: CoefficientProfile::indicator(1.0, 0.0, 1.5),
        t_final,
        ..Params::new(3.0, n)
    };
    p.align_dt();
    p
}

fn identity_undamped() -> Verdict {
    let start = Instant::now();
    let mut p = Params::new(2.0, 200);
    p.t_final = 5.0;
    let run = match simulate(&p, SystemVariant::new(VariantTag::UndampedLinear), sin_mode(2.0)) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let r = energy_identity_check(&run.trace);
    let e0 = 0.5 * run.trace.points[0].l2_sq;
    let tol = 1e-2 * e0.max(1.0);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        r.full <= tol && secs < 10.0,
        format!(
            "max |dE/dt + uxx0^2| = {:.3e} (tol {tol:.1e}), half-form {:.3e}, {secs:.2} s",
            r.full, r.half
        ),
    )
}

fn dissipation_mu() -> Verdict {
    let c = c0(1.0, 2.0, 1.0, 1.5);
    let p = mu_params(40, 10.0);
    let run = match simulate(&p, SystemVariant::new(VariantTag::LinearMu), sin_mode(3.0)) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let slack = 1e-3 * run.trace.points[0].e_mu;
    match dissipation_check(&run.trace, &p, EnergyKind::Mu, Some(slack)) {
        Ok(rep) => verdict(
            rep.passed && c == Some(0.25),
            format!("C0 = {c:?}, worst violation {:.3e} (slack {slack:.2e})", rep.worst_violation),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

/// Nonlinear mu run from `‖(u₀, z₀)‖_H = r_max / 2`.
fn small_data_run(
    n: usize,
    t_final: f64,
    tag: VariantTag,
    steps_per_delay: Option<usize>,
) -> kawahara::Result<(Params, kawahara::Run)> {
    let mut p = mu_params(n, t_final);
    if let Some(m) = steps_per_delay {
        p.dt = p.h / m as f64;
    }
    p.startup_smoothing = 1;
    let k = p6j_constants(p.length, p.h, p.mu1, p.mu2, p.xi).expect("admissible parameters");
    let grid = p.grid()?;
    let shape = sin_mode(p.length);
    let unit = DelayHistory::init(shape.clone(), &grid, p.h, p.delay_steps()?)?;
    let scale = 0.5 * k.r_max / h_norm(&unit, &p)?;
    let run = simulate(&p, SystemVariant::new(tag), move |x, t| scale * shape(x, t))?;
    Ok((p, run))
}

fn lyapunov_decay() -> Verdict {
    let (p, run) = match small_data_run(40, 10.0, VariantTag::Mu, None) {
        Ok(v) => v,
        Err(e) => return verdict(false, e.to_string()),
    };
    let k = p6j_constants(p.length, p.h, p.mu1, p.mu2, p.xi).unwrap();
    let rep = match lyapunov_decay_check(&run.trace, &p, k.alpha, k.beta, k.gamma, LyapunovFamily::Mu, None) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let envelope = decay_envelope_ratio(&run.trace, EnergyKind::Mu, k.kappa, k.gamma);
    verdict(
        rep.passed && envelope <= 1.05,
        format!(
            "alpha {:.4}, beta {:.3}, gamma {:.5}: worst V'+2gV {:.3e} (slack {:.2e}), max E/(kE0e^-2gt) {envelope:.3}",
            k.alpha, k.beta, k.gamma, rep.worst_violation, rep.slack
        ),
    )
}

fn fit_window(trace: &kawahara::Trace) -> (f64, f64) {
    let end = floor_limited_end(trace, EnergyKind::Mu, 2.0, 1e-20).unwrap_or(6.0);
    (2.0, end.min(6.0))
}

fn decay_ordering() -> Verdict {
    let gamma = p6j_constants(3.0, 1.0, 2.0, 1.0, 1.5).unwrap().gamma;
    let (_, nonlinear) = match small_data_run(40, 8.0, VariantTag::Mu, None) {
        Ok(v) => v,
        Err(e) => return verdict(false, e.to_string()),
    };
    let (p, linear) = match small_data_run(40, 8.0, VariantTag::LinearMu, Some(112)) {
        Ok(v) => v,
        Err(e) => return verdict(false, e.to_string()),
    };
    let fit_nl = fit_decay(&nonlinear.trace, EnergyKind::Mu, fit_window(&nonlinear.trace));
    let fit_lin = fit_decay(&linear.trace, EnergyKind::Mu, fit_window(&linear.trace));
    let abscissa = assemble(&p, SpectralVariant::Mu, p.n, 16).and_then(|op| spectral_abscissa(&op));
    match (fit_nl, fit_lin, abscissa) {
        (Ok(nl), Ok(lin), Ok((s, _))) => {
            let rel = (lin.gamma_emp + s).abs() / (-s);
            verdict(
                nl.gamma_emp >= gamma && -s >= gamma && rel <= 0.1,
                format!(
                    "gamma_theory {gamma:.4}, gamma_emp nonlinear {:.4}, linear {:.4}, -abscissa {:.4} (rel. gap {rel:.3})",
                    nl.gamma_emp, lin.gamma_emp, -s
                ),
            )
        }
        (a, b, c) => verdict(false, format!("{:?} {:?} {:?}", a.err(), b.err(), c.err())),
    }
}

fn rel_eq(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-12 * want.abs().max(f64::MIN_POSITIVE)
}

fn constant_formulas() -> Verdict {
    let mut failures = Vec::new();
    let mut count = 0;
    let mut check = |name: &str, got: Option<f64>, want: f64| {
        count += 1;
        match got {
            Some(g) if rel_eq(g, want) => {}
            other => failures.push(format!("{name}: {other:?} vs {want}")),
        }
    };

    check("c0 a", c0(1.0, 2.0, 1.0, 1.5), 0.25);
    check("c0 b", c0(2.0, 1.0, 0.5, 1.5), 0.125);
    check("c0 c", c0(1.0, 3.0, 1.0, 2.0), 0.5);

    let r1 = (9.0 * PI * PI - 3.0) / (2.0 * PI * PI);
    let k1 = p6j_constants(1.0, 1.0, 2.0, 1.0, 1.5);
    check("p6j r_max L=1", k1.map(|k| k.r_max), r1);
    check("p6j beta_max", k1.map(|k| k.beta_max), 1.0);
    check("p6j alpha_max L=1", k1.map(|k| k.alpha_max), 0.075);
    check("p6j gamma L=1", k1.map(|k| k.gamma), 1.0 / 6.0);
    check("p6j kappa L=1", k1.map(|k| k.kappa), 1.5);
    let k3 = p6j_constants(3.0, 1.0, 2.0, 1.0, 1.5);
    check("p6j alpha_max L=3", k3.map(|k| k.alpha_max), 0.025);
    let r3 = (9.0 * PI * PI - 27.0) / (2.0 * 3f64.powf(1.5) * PI * PI);
    check("p6j r_max L=3", k3.map(|k| k.r_max), r3);
    let g3 = (9.0 * PI * PI - 27.0 - 2.0 * 3f64.powf(1.5) * (r3 / 2.0) * PI * PI) * 0.0125 / (27.0 * (1.0 + 6.0 * 0.0125));
    check("p6j gamma L=3", k3.map(|k| k.gamma), g3);
    check("p6j kappa formula", Some(p6j_kappa(2.0, 0.01, 0.1)), 1.1);

    let q = p7j_constants(1.0, 1.0, 2.0);
    check("p7j alpha_max", q.map(|k| k.alpha_max), 0.1);
    check("p7j beta_max", q.map(|k| k.beta_max), 0.5);
    check("p7j gamma", q.map(|k| k.gamma), 1.0 / 18.0);
    check("p7j kappa", q.map(|k| k.kappa), 1.125);
    let q2 = p7j_constants(2.0, 0.5, 3.0);
    let a2 = 2.0 / (4.0 * 7.0);
    check("p7j alpha_max L=2", q2.map(|k| k.alpha_max), a2);
    check("p7j beta_max L=2", q2.map(|k| k.beta_max), 2.0 - 2.0 * (a2 / 2.0) * 2.0 * 7.0);

    let tt = |g, k, xi, eta, nu, b, s| t0_tmin(g, k, xi, eta, nu, b, s).ok();
    check("T0 a", tt(0.1, 1.1, 2.0, 0.5, 0.3, 0.0, 0.0).map(|v| v.0), 5.0 * 8.8f64.ln() + 1.0);
    check("T0 b", tt(0.25, 1.5, 3.0, 0.2, 0.3, 0.0, 0.0).map(|v| v.0), 2.0 * 45.0f64.ln() + 1.0);
    check("Tmin s=0", tt(0.1, 1.1, 2.0, 0.5, 0.3, 0.0, 0.0).map(|v| v.1), -(0.25f64.ln()) / 0.3);
    check(
        "Tmin s=1",
        tt(0.1, 1.1, 2.0, 0.5, 0.3, 0.2, 1.0).map(|v| v.1),
        -(0.25f64.ln()) / 0.3 + (0.4 / 0.3 + 1.0),
    );

    check("nu 1/e", nu_from_eta(1.0, 0.25, (-1.0f64).exp() - 0.25).ok(), 1.0);
    check("nu 0.5", nu_from_eta(2.0, 0.3, 0.2).ok(), 2f64.ln() / 2.0);
    check("nu 0.2", nu_from_eta(3.0, 0.1, 0.1).ok(), 5f64.ln() / 3.0);

    let obs = |t, c, c0| nu_from_observability(t, c, c0).ok();
    check("obs gamma a", obs(1.0, 3.0, 1.0).map(|v| v.0), 0.75);
    check("obs nu a", obs(1.0, 3.0, 1.0).map(|v| v.1), (4.0f64 / 3.0).ln());
    check("obs nu b", obs(2.0, 2.0, 2.0).map(|v| v.1), 2f64.ln() / 2.0);
    check("obs gamma c", obs(0.5, 1.0, 4.0).map(|v| v.0), 0.2);
    check("obs nu c", obs(0.5, 1.0, 4.0).map(|v| v.1), 2.0 * 5f64.ln());

    let db = |xi: f64, kappa: f64, gamma: f64, eta: f64, eps: f64| {
        let expo = (3.0 * xi + 1.0) / 2.0 * ((2.0 * xi * kappa / eta).ln() / (2.0 * gamma) + 2.0);
        (eps.sqrt() / (xi.powi(3).sqrt() * kappa.sqrt() * expo.exp())).min(1.0)
    };
    check("delta a", delta_bound(2.0, 1.1, 0.1, 0.5, 0.25).ok(), db(2.0, 1.1, 0.1, 0.5, 0.25));
    check(
        "delta a by hand",
        delta_bound(2.0, 1.1, 0.1, 0.5, 0.25).ok(),
        0.5 / (8f64.sqrt() * 1.1f64.sqrt() * (3.5 * (5.0 * 8.8f64.ln() + 2.0)).exp()),
    );
    check("delta b", delta_bound(1.5, 1.2, 2.0, 0.4, 0.3).ok(), db(1.5, 1.2, 2.0, 0.4, 0.3));
    check("delta c", delta_bound(3.0, 1.0, 0.5, 0.3, 0.5).ok(), db(3.0, 1.0, 0.5, 0.3, 0.5));

    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{count} oracle values reproduced to 1e-12")
        } else {
            failures.join("; ")
        },
    )
}

fn bilinear() -> Verdict {
    let grid: Grid = kawahara::discretization::build_grid(1.0, 100).unwrap();
    let dt = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let sample = |rng: &mut ChaCha8Rng| {
        let c: Vec<[f64; 3]> = (0..4)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let values = (0..=100)
            .map(|k| {
                let t = k as f64 * dt;
                grid.sample(|x| {
                    c.iter()
                        .enumerate()
                        .map(|(j, w)| {
                            let s = x;
                            (w[0] + w[1] * t + w[2] * (PI * t).sin())
                                * ((j + 1) as f64 * PI * s).sin()
                                * s
                                * (1.0 - s).powi(2)
                        })
                        .sum()
                })
            })
            .collect();
        Sampled { dt, values }
    };
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = sample(&mut rng);
        let v = sample(&mut rng);
        match bilinear_estimate_check(&grid, &u, &v) {
            Ok(o) => {
                worst = worst.max(o.lhs / o.rhs);
                if !o.holds() {
                    violations += 1;
                }
            }
            Err(_) => violations += 1,
        }
    }
    verdict(violations == 0, format!("{violations} violations in 100 pairs, max lhs/rhs {worst:.3}"))
}

/// Polynomial coefficients, lowest degree first.
fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `ψ(x) = c x² (L − x)³ e^{x/L}` and its first five derivatives as `P_k(x) e^{x/L}`.
fn manufactured_profile(l: f64) -> Vec<Vec<f64>> {
    let c = 4.0 / l.powi(5);
    let lx = [l, -1.0];
    let mut p = vec![0.0, 0.0, c];
    for _ in 0..3 {
        p = poly_mul(&p, &lx);
    }
    let mut derivs = vec![p];
    for _ in 0..5 {
        let prev = derivs.last().unwrap();
        let mut next: Vec<f64> = prev.iter().map(|v| v / l).collect();
        for (k, v) in prev.iter().enumerate().skip(1) {
            next[k - 1] += k as f64 * v;
        }
        derivs.push(next);
    }
    derivs
}

struct Manufactured {
    l: f64,
    h: f64,
    mu1: f64,
    mu2: f64,
    psi: Vec<Vec<f64>>,
}

impl Manufactured {
    fn new() -> Self {
        Self {
            l: 3.0,
            h: 1.0,
            mu1: 2.0,
            mu2: 1.0,
            psi: manufactured_profile(3.0),
        }
    }

    fn g(t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            t.sin().powi(3)
        }
    }

    fn dg(t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            3.0 * t.sin().powi(2) * t.cos()
        }
    }

    fn a(x: f64) -> f64 {
        1.0 + 0.5 * x.sin()
    }

    fn d(&self, k: usize, x: f64) -> f64 {
        poly_eval(&self.psi[k], x) * (x / self.l).exp()
    }

    fn exact(&self, x: f64, t: f64) -> f64 {
        Self::g(t) * self.d(0, x)
    }

    fn source(&self, x: f64, t: f64) -> f64 {
        let (g, gd) = (Self::g(t), Self::dg(t));
        let p = self.d(0, x);
        let lin = self.d(1, x) + self.d(3, x) - self.d(5, x);
        gd * p + g * lin + g * g * p * self.d(1, x) + Self::a(x) * (self.mu1 * g + self.mu2 * Self::g(t - self.h)) * p
    }

    fn params(&self, n: usize, dt: f64) -> Params {
        let grid: Grid = kawahara::discretization::build_grid(self.l, n).unwrap();
        Params {
            h: self.h,
            mu1: self.mu1,
            mu2: self.mu2,
            xi: 1.5,
            a: CoefficientProfile::tabulated(grid.sample(Self::a)),
            dt,
            t_final: 1.0,
            snapshot_stride: 1_000_000,
            ..Params::new(self.l, n)
        }
    }

    fn solve(&self, n: usize, dt: f64) -> kawahara::Result<(Vec<f64>, Grid)> {
        let p = self.params(n, dt);
        let me = Manufactured::new();
        let stepper = Stepper::new(&p, SystemVariant::new(VariantTag::Mu))?.with_source(move |x, t| me.source(x, t));
        let exact = |x, t| self.exact(x, t);
        let run = simulate_with(&p, stepper, exact)?;
        Ok((run.final_state().values, run.grid))
    }
}

fn l2_diff(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    grid.l2_sq(&d).sqrt()
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn convergence() -> Verdict {
    let start = Instant::now();
    let mms = Manufactured::new();
    let mut spatial = Vec::new();
    for n in [39, 79, 159] {
        match mms.solve(n, 1.0 / 1280.0) {
            Ok((u, grid)) => {
                let exact = grid.sample(|x| mms.exact(x, 1.0));
                spatial.push(l2_diff(&grid, &u, &exact));
            }
            Err(e) => return verdict(false, e.to_string()),
        }
    }
    let (reference, grid) = match mms.solve(79, 1.0 / 1280.0) {
        Ok(v) => v,
        Err(e) => return verdict(false, e.to_string()),
    };
    let mut temporal = Vec::new();
    for m in [20, 40, 80] {
        match mms.solve(79, 1.0 / m as f64) {
            Ok((u, _)) => temporal.push(l2_diff(&grid, &u, &reference)),
            Err(e) => return verdict(false, e.to_string()),
        }
    }
    let ratios = |e: &[f64]| e.windows(2).map(|w| w[0] / w[1]).collect::<Vec<_>>();
    let (rs, rt) = (ratios(&spatial), ratios(&temporal));
    let ok = |r: &[f64]| r.iter().all(|v| (3.5..=4.5).contains(v));
    let secs = start.elapsed().as_secs_f64();
    verdict(
        ok(&rs) && ok(&rt) && secs < 60.0,
        format!(
            "spatial errors {} ratios {rs:.2?}; temporal errors {} ratios {rt:.2?}; {secs:.1} s",
            sci(&spatial),
            sci(&temporal)
        ),
    )
}

fn observability_refinement() -> Verdict {
    let ratio = |n: usize| -> Result<f64, String> {
        let p = mu_params(n, 2.0);
        let run = simulate(&p, SystemVariant::new(VariantTag::LinearMu), sin_mode(3.0)).map_err(|e| e.to_string())?;
        match observability_ratio(&run.trace, 2.0).map_err(|e| e.to_string())? {
            Observability::Ratio(r) => Ok(r),
            other => Err(format!("{other:?}")),
        }
    };
    match (ratio(40), ratio(80)) {
        (Ok(a), Ok(b)) => {
            let change = (b - a).abs() / a;
            verdict(change < 0.15, format!("ratio n=40 {a:.4}, n=80 {b:.4}, change {:.2}%", 100.0 * change))
        }
        (a, b) => verdict(false, format!("{:?} {:?}", a.err(), b.err())),
    }
}

fn dissipativity() -> Verdict {
    let lambda = 1.5 * 1.0 / (2.0 * 1.0);
    let mut margins = Vec::new();
    let mut within = true;
    for n in [20, 40, 80] {
        let p = mu_params(n, 1.0);
        match assemble(&p, SpectralVariant::Mu, n, 16).and_then(|op| {
            let m = dissipativity_margin(&op, lambda, 500, 42)?;
            Ok((m, op.grid.dx()))
        }) {
            Ok((m, dx)) => {
                within &= m <= 0.05 * lambda + 5.0 * dx;
                margins.push(m);
            }
            Err(e) => return verdict(false, e.to_string()),
        }
    }
    let positive: Vec<f64> = margins.iter().map(|m| m.max(0.0)).collect();
    let decreasing = positive.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        within && decreasing,
        format!("margins n=20/40/80 at lambda {lambda}: {margins:.3?}"),
    )
}

/// Dense `D₁, D₃, D₅` from the extended-array stencils and the ghost rules.
fn dense_derivatives(n: usize, dx: f64) -> [DMatrix<f64>; 3] {
    // rows: extended indices -2 ..= n+3, columns: interior unknowns u_1..u_n
    let mut ext = DMatrix::<f64>::zeros(n + 6, n);
    let row = |j: isize| (j + 2) as usize;
    for i in 1..=n {
        ext[(row(i as isize), i - 1)] = 1.0;
    }
    ext[(row(-1), 0)] = 3.0;
    ext[(row(-1), 1)] = -0.5;
    ext[(row(-2), 0)] = 16.0;
    ext[(row(-2), 1)] = -3.0;
    let ni = n as isize;
    ext[(row(ni + 2), n - 1)] = -3.0;
    ext[(row(ni + 2), n - 2)] = 0.25;
    ext[(row(ni + 3), n - 1)] = -32.0;
    ext[(row(ni + 3), n - 2)] = 3.0;
    let stencil = |coeffs: &[(isize, f64)], scale: f64| {
        let mut s = DMatrix::<f64>::zeros(n, n + 6);
        for i in 1..=ni {
            for &(off, c) in coeffs {
                s[((i - 1) as usize, row(i + off))] += c * scale;
            }
        }
        &s * &ext
    };
    [
        stencil(&[(1, 1.0), (-1, -1.0)], 1.0 / (2.0 * dx)),
        stencil(&[(2, 1.0), (1, -2.0), (-1, 2.0), (-2, -1.0)], 1.0 / (2.0 * dx.powi(3))),
        stencil(
            &[(3, 1.0), (2, -4.0), (1, 5.0), (-1, -5.0), (-2, 4.0), (-3, -1.0)],
            1.0 / (2.0 * dx.powi(5)),
        ),
    ]
}

fn dense_step_oracle() -> Verdict {
    let n = 12;
    let p = mu_params(n, 1.0);
    let grid = p.grid().unwrap();
    let dx = grid.dx();
    let dt = p.dt;
    let m = p.delay_steps().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let l = p.length;
    let z0 = move |x: f64, t: f64| {
        let s = x / l;
        s * s * (1.0 - s).powi(3) * (c[0] + c[1] * t + (c[2] + c[3] * t * t) * (PI * s).sin() + c[4] * (c[5] * 5.0 * s).cos())
    };
    let forcing = |x: f64, t: f64| (x * t).sin() + 0.5 * x;

    let mut hist = DelayHistory::init(z0, &grid, p.h, m).unwrap();
    let mut stepper = Stepper::new(&p, SystemVariant::new(VariantTag::Mu)).unwrap().with_source(forcing);
    let s0 = hist.current();
    let lag_m0 = DVector::from_column_slice(hist.lag(m));
    let lag_m10 = DVector::from_column_slice(hist.lag(m - 1));
    let s1 = stepper.step(&s0, &mut hist).unwrap();
    let lag_m1 = DVector::from_column_slice(hist.lag(m));
    let lag_m11 = DVector::from_column_slice(hist.lag(m - 1));
    let s2 = stepper.step(&s1, &mut hist).unwrap();

    let [d1, d3, d5] = dense_derivatives(n, dx);
    let a = DVector::from_iterator(n, grid.points().iter().map(|&x| if x <= 1.5 { 1.0 } else { 0.0 }));
    let lin = &d1 + &d3 - &d5 + DMatrix::from_diagonal(&(a.clone() * p.mu1));
    let id = DMatrix::<f64>::identity(n, n);
    let lhs = (&id + &lin * (0.5 * dt)).lu();
    let rhs = &id - &lin * (0.5 * dt);
    let nl = |u: &DVector<f64>| (u.component_mul(&(&d1 * u)) + &d1 * u.component_mul(u)) / 3.0;
    let f_at = |t: f64| DVector::from_iterator(n, grid.points().iter().map(|&x| forcing(x, t)));
    let delayed = |old: &DVector<f64>, new: &DVector<f64>| a.component_mul(&((old + new) * 0.5)) * p.mu2;

    let u0 = DVector::from_column_slice(&s0.values);
    let n0 = nl(&u0);
    let r1 = &rhs * &u0 - (&n0 + delayed(&lag_m0, &lag_m10) - (f_at(0.0) + f_at(dt)) * 0.5) * dt;
    let u1 = lhs.solve(&r1).unwrap();
    let n1 = nl(&u1);
    let r2 = &rhs * &u1 - (&n1 * 1.5 - &n0 * 0.5 + delayed(&lag_m1, &lag_m11) - (f_at(dt) + f_at(2.0 * dt)) * 0.5) * dt;
    let u2 = lhs.solve(&r2).unwrap();

    let err = |got: &[f64], want: &DVector<f64>| {
        let scale = want.amax().max(1.0);
        got.iter().zip(want.iter()).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max) / scale
    };
    let (e1, e2) = (err(&s1.values, &u1), err(&s2.values, &u2));
    verdict(
        e1 <= 1e-12 && e2 <= 1e-12,
        format!("n = 12: first step (Euler N) rel. diff {e1:.2e}, second step (AB2) {e2:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("energy identity, undamped", identity_undamped),
        ("dissipation inequality, mu feedback", dissipation_mu),
        ("Lyapunov decay and envelope", lyapunov_decay),
        ("decay-rate ordering", decay_ordering),
        ("closed-form constants", constant_formulas),
        ("bilinear estimate", bilinear),
        ("manufactured-solution convergence", convergence),
        ("observability under refinement", observability_refinement),
        ("dissipativity margin", dissipativity),
        ("dense single-step oracle", dense_step_oracle),
    ];
    let results: Vec<Verdict> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| verdict(false, "panicked")))
            .collect()
    });
    let mut all = true;
    for (i, ((name, _), v)) in criteria.iter().zip(&results).enumerate() {
        all &= v.pass;
        println!(
            "criterion {:>2} {}: {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
