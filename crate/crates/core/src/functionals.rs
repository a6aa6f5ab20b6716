//! Energies, Lyapunov functionals and the discrete checks of their laws.

use crate::delay::{DelayHistory, Kernel};
use crate::discretization::{boundary_trace_uxx0, derivative_operator, second_difference, SpatialGrid, State};
use crate::error::{check_len, config, Result};
use crate::model::{cdelay, length_below_critical, HistoryMeasure, SimParams};
use crate::scalar::{fmt17, Scalar};
use crate::stepper::VariantTag;
use crate::theory;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyKind {
    /// `½∫u² + (h/2)∫∫ b u²(t − ρh)`.
    Fd1,
    /// `½∫u² + (ξ/2)∫∫ a u²(t − ρh)`.
    Mu,
    /// `½∫u² + (ξh/2)∫∫ b u²(t − ρh)`.
    Xi,
}

impl EnergyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fd1" => Ok(Self::Fd1),
            "mu" => Ok(Self::Mu),
            "xi" => Ok(Self::Xi),
            other => Err(config(format!("unknown energy '{other}' (fd1, mu, xi)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Fd1 => "fd1",
            Self::Mu => "mu",
            Self::Xi => "xi",
        }
    }

    fn matches(self, tag: VariantTag) -> bool {
        match self {
            Self::Fd1 => matches!(tag, VariantTag::Fd1 | VariantTag::UndampedLinear),
            Self::Mu => matches!(tag, VariantTag::Mu | VariantTag::LinearMu | VariantTag::UndampedLinear),
            Self::Xi => matches!(
                tag,
                VariantTag::Perturbed | VariantTag::AuxiliaryLinear | VariantTag::UndampedLinear
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LyapunovFamily {
    Mu,
    Aux,
}

/// Functionals sampled at one time level.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyPoint<T> {
    pub t: T,
    pub e_fd1: T,
    pub e_mu: T,
    pub e_xi: T,
    pub v1: T,
    pub v2_mu: T,
    pub v2_aux: T,
    pub uxx0_sq: T,
    pub damp_a: T,
    pub damp_b: T,
    pub damp_a_delay: T,
    pub damp_b_delay: T,
    pub l2_sq: T,
}

impl<T: Scalar> EnergyPoint<T> {
    pub fn energy(&self, which: EnergyKind) -> T {
        match which {
            EnergyKind::Fd1 => self.e_fd1,
            EnergyKind::Mu => self.e_mu,
            EnergyKind::Xi => self.e_xi,
        }
    }

    pub fn lyapunov(&self, alpha: T, beta: T, family: LyapunovFamily) -> T {
        match family {
            LyapunovFamily::Mu => self.e_mu + alpha * self.v1 + beta * self.v2_mu,
            LyapunovFamily::Aux => self.e_xi + alpha * self.v1 + beta * self.v2_aux,
        }
    }
}

/// Dissipation channels over one step `[t0, t1]`, evaluated at the midpoint
/// state `(uⁿ + uⁿ⁺¹)/2` and the matching average of the delayed state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyInterval<T> {
    pub t0: T,
    pub t1: T,
    pub uxx0_sq: T,
    pub damp_a: T,
    pub damp_b: T,
    pub damp_a_delay: T,
    pub damp_b_delay: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTrace<T> {
    pub tag: VariantTag,
    pub points: Vec<EnergyPoint<T>>,
    pub intervals: Vec<EnergyInterval<T>>,
}

pub const TRACE_HEADER: &str = "t,E_fd1,E_mu,E_xi,V1,V2_mu,V2_aux,uxx0_sq,damp_a,damp_b,damp_a_delay,damp_b_delay,l2_sq";

impl<T: Scalar> EnergyTrace<T> {
    pub fn new(tag: VariantTag) -> Self {
        Self {
            tag,
            points: Vec::new(),
            intervals: Vec::new(),
        }
    }

    pub fn times(&self) -> Vec<T> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn series(&self, which: EnergyKind) -> Vec<T> {
        self.points.iter().map(|p| p.energy(which)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for p in &self.points {
            let row = [
                p.t, p.e_fd1, p.e_mu, p.e_xi, p.v1, p.v2_mu, p.v2_aux, p.uxx0_sq, p.damp_a, p.damp_b,
                p.damp_a_delay, p.damp_b_delay, p.l2_sq,
            ];
            out.push_str(&row.iter().map(|&v| fmt17(v)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// Reads the point records back from [`Self::to_csv`] output.
    pub fn from_csv(text: &str, tag: VariantTag) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or(crate::Error::Parse { line: 1, msg: "empty trace".into() })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let expected: Vec<&str> = TRACE_HEADER.split(',').collect();
        if cols != expected {
            return Err(crate::Error::Parse {
                line: 1,
                msg: format!("unexpected trace header '{header}'"),
            });
        }
        let mut trace = Self::new(tag);
        for (i, line) in lines {
            let vals = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map(T::lit).map_err(|e| crate::Error::Parse {
                        line: i + 1,
                        msg: format!("'{s}': {e}"),
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            if vals.len() != expected.len() {
                return Err(crate::Error::Parse {
                    line: i + 1,
                    msg: format!("expected {} columns, got {}", expected.len(), vals.len()),
                });
            }
            trace.points.push(EnergyPoint {
                t: vals[0],
                e_fd1: vals[1],
                e_mu: vals[2],
                e_xi: vals[3],
                v1: vals[4],
                v2_mu: vals[5],
                v2_aux: vals[6],
                uxx0_sq: vals[7],
                damp_a: vals[8],
                damp_b: vals[9],
                damp_a_delay: vals[10],
                damp_b_delay: vals[11],
                l2_sq: vals[12],
            });
        }
        Ok(trace)
    }
}

/// Grid, coefficients and weights needed to evaluate every functional.
#[derive(Clone, Debug)]
pub struct EnergyContext<T> {
    pub grid: SpatialGrid<T>,
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub h: T,
    pub xi: T,
    pub measure: HistoryMeasure,
    ones: Vec<T>,
    x: Vec<T>,
}

impl<T: Scalar> EnergyContext<T> {
    pub fn new(params: &SimParams<T>) -> Result<Self> {
        let grid = params.grid()?;
        let a = params.a_values(&grid)?;
        let b = params.b_values(&grid)?;
        let ones = vec![T::one(); grid.n()];
        let x = grid.points().to_vec();
        Ok(Self {
            grid,
            a,
            b,
            h: params.h,
            xi: params.xi,
            measure: params.history_measure,
            ones,
            x,
        })
    }

    fn delay_kernel(&self) -> Kernel {
        match self.measure {
            HistoryMeasure::DRho => Kernel::Uniform,
            HistoryMeasure::RhoDx => Kernel::Rho,
        }
    }

    pub fn energy(&self, u: &[T], hist: &DelayHistory<T>, which: EnergyKind) -> Result<T> {
        check_len(self.grid.n(), u.len())?;
        let half = T::lit(0.5);
        let (w, coef) = match which {
            EnergyKind::Fd1 => (half * self.h, &self.b),
            EnergyKind::Mu => (half * self.xi, &self.a),
            EnergyKind::Xi => (half * self.xi * self.h, &self.b),
        };
        let delayed = if w == T::zero() {
            T::zero()
        } else {
            hist.rho_integral(coef, self.delay_kernel())?
        };
        Ok(half * self.grid.l2_sq(u) + w * delayed)
    }

    /// Records every functional for the newest state of `hist`.
    pub fn point(&self, hist: &DelayHistory<T>) -> Result<EnergyPoint<T>> {
        let u = hist.lag(0);
        let g = &self.grid;
        let half = T::lit(0.5);
        let delayed = hist.lag(hist.m());
        let uxx0 = boundary_trace_uxx0(u, g);
        let l2 = g.l2_sq(u);
        Ok(EnergyPoint {
            t: hist.newest_time(),
            e_fd1: self.energy(u, hist, EnergyKind::Fd1)?,
            e_mu: self.energy(u, hist, EnergyKind::Mu)?,
            e_xi: self.energy(u, hist, EnergyKind::Xi)?,
            v1: g.weighted_sq(&self.x, u),
            v2_mu: half * self.xi * hist.rho_integral(&self.a, Kernel::OneMinusRho)?,
            v2_aux: half * self.h * hist.rho_integral(&self.b, Kernel::OneMinusRho)?,
            uxx0_sq: uxx0 * uxx0,
            damp_a: g.weighted_sq(&self.a, u),
            damp_b: g.weighted_sq(&self.b, u),
            damp_a_delay: g.weighted_sq(&self.a, delayed),
            damp_b_delay: g.weighted_sq(&self.b, delayed),
            l2_sq: l2,
        })
    }

    /// Midpoint channels for the step `u0 → u1` starting at `t0`; `lag_m`
    /// and `lag_m1` are the delayed states at the start and end of the step.
    pub fn interval(&self, u0: &[T], u1: &[T], lag_m: &[T], lag_m1: &[T], t0: T, dt: T) -> EnergyInterval<T> {
        let half = T::lit(0.5);
        let avg = |p: &[T], q: &[T]| p.iter().zip(q).map(|(&x, &y)| half * (x + y)).collect::<Vec<T>>();
        let mid = avg(u0, u1);
        let dmid = avg(lag_m, lag_m1);
        let g = &self.grid;
        let uxx0 = boundary_trace_uxx0(&mid, g);
        EnergyInterval {
            t0,
            t1: t0 + dt,
            uxx0_sq: uxx0 * uxx0,
            damp_a: g.weighted_sq(&self.a, &mid),
            damp_b: g.weighted_sq(&self.b, &mid),
            damp_a_delay: g.weighted_sq(&self.a, &dmid),
            damp_b_delay: g.weighted_sq(&self.b, &dmid),
        }
    }

    pub fn ones(&self) -> &[T] {
        &self.ones
    }
}

pub fn energy<T: Scalar>(
    state: &State<T>,
    hist: &DelayHistory<T>,
    params: &SimParams<T>,
    which: EnergyKind,
) -> Result<T> {
    EnergyContext::new(params)?.energy(&state.values, hist, which)
}

pub fn lyapunov<T: Scalar>(
    state: &State<T>,
    hist: &DelayHistory<T>,
    params: &SimParams<T>,
    alpha: T,
    beta: T,
    family: LyapunovFamily,
) -> Result<T> {
    if alpha < T::zero() || beta < T::zero() {
        return Err(config(format!("alpha and beta must be >= 0, got {alpha}, {beta}")));
    }
    let ctx = EnergyContext::new(params)?;
    let u = &state.values;
    let half = T::lit(0.5);
    let v1 = ctx.grid.weighted_sq(&ctx.x, u);
    Ok(match family {
        LyapunovFamily::Mu => {
            let v2 = half * params.xi * hist.rho_integral(&ctx.a, Kernel::OneMinusRho)?;
            ctx.energy(u, hist, EnergyKind::Mu)? + alpha * v1 + beta * v2
        }
        LyapunovFamily::Aux => {
            let v2 = half * params.h * hist.rho_integral(&ctx.b, Kernel::OneMinusRho)?;
            ctx.energy(u, hist, EnergyKind::Xi)? + alpha * v1 + beta * v2
        }
    })
}

/// `(‖u‖² + ξ‖a‖∞ ∫∫ z² dρ dx)^{1/2}` for the newest state of `hist`.
pub fn h_norm<T: Scalar>(hist: &DelayHistory<T>, params: &SimParams<T>) -> Result<T> {
    let ctx = EnergyContext::new(params)?;
    let z = hist.rho_integral(&ctx.ones, Kernel::Uniform)?;
    Ok((ctx.grid.l2_sq(hist.lag(0)) + params.xi * params.a.sup_norm() * z).sqrt())
}

/// One row of `checks.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub worst_violation: f64,
    pub time_of_worst: f64,
    pub slack: f64,
    pub passed: bool,
}

pub const CHECK_HEADER: &str = "name,worst_violation,time_of_worst,slack,passed";

impl CheckReport {
    fn from_worst<T: Scalar>(name: impl Into<String>, worst: Option<(T, T)>, slack: T) -> Self {
        let (v, t) = worst.unwrap_or((T::neg_infinity(), T::zero()));
        Self {
            name: name.into(),
            worst_violation: v.to_f64_lossy(),
            time_of_worst: t.to_f64_lossy(),
            slack: slack.to_f64_lossy(),
            passed: v <= slack,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.name,
            fmt17(self.worst_violation),
            fmt17(self.time_of_worst),
            fmt17(self.slack),
            if self.passed { "pass" } else { "fail" }
        )
    }
}

pub fn checks_csv(reports: &[CheckReport]) -> String {
    let mut out = String::from(CHECK_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// `max(1e-8, 1e-3 dt E(0))`.
pub fn default_slack<T: Scalar>(trace: &EnergyTrace<T>, which: EnergyKind, dt: T) -> T {
    let e0 = trace.points.first().map_or(T::zero(), |p| p.energy(which));
    T::lit(1e-8).max(T::lit(1e-3) * dt * e0)
}

fn step_pairs<T: Scalar>(
    trace: &EnergyTrace<T>,
) -> impl Iterator<Item = (&EnergyPoint<T>, &EnergyPoint<T>, &EnergyInterval<T>)> {
    trace
        .points
        .windows(2)
        .zip(&trace.intervals)
        .map(|(w, iv)| (&w[0], &w[1], iv))
}

fn worst_of<T: Scalar>(acc: Option<(T, T)>, v: T, t: T) -> Option<(T, T)> {
    match acc {
        Some((w, _)) if w >= v => acc,
        _ => Some((v, t)),
    }
}

/// Discrete `dE/dt` against the dissipation bound of the chosen energy:
///
/// * `mu`: `−C₀ [u_xx(0)² + ∫a u² + ∫a u²(t − h)]`;
/// * `fd1`: `−½u_xx(0)² − ∫a u² + ∫b u²`;
/// * `xi`: `−½u_xx(0)² − ∫a u² − ½(ξ − 1)[∫b u² + ∫b u²(t − h)]`.
///
/// `dE/dt` is the forward difference over each step, paired with the
/// channels evaluated at the step midpoint.
pub fn dissipation_check<T: Scalar>(
    trace: &EnergyTrace<T>,
    params: &SimParams<T>,
    which: EnergyKind,
    slack: Option<T>,
) -> Result<CheckReport> {
    if !which.matches(trace.tag) {
        return Err(config(format!(
            "energy '{}' does not belong to variant '{}'",
            which.name(),
            trace.tag.name()
        )));
    }
    let half = T::lit(0.5);
    let c0 = match which {
        EnergyKind::Mu if trace.tag != VariantTag::UndampedLinear => {
            Some(theory::c0(params.h, params.mu1, params.mu2, params.xi).ok_or_else(|| {
                config("C0 unavailable: delay window condition violated")
            })?)
        }
        _ => None,
    };
    let slack = slack.unwrap_or_else(|| default_slack(trace, which, params.dt));
    let mut worst = None;
    for (p0, p1, iv) in step_pairs(trace) {
        let dedt = (p1.energy(which) - p0.energy(which)) / (iv.t1 - iv.t0);
        let bound = match (which, c0) {
            (EnergyKind::Mu, Some(c0)) => -c0 * (iv.uxx0_sq + iv.damp_a + iv.damp_a_delay),
            (EnergyKind::Mu, None) => -half * iv.uxx0_sq,
            (EnergyKind::Fd1, _) => -half * iv.uxx0_sq - iv.damp_a + iv.damp_b,
            (EnergyKind::Xi, _) => {
                -half * iv.uxx0_sq
                    - iv.damp_a
                    - half * (params.xi - T::one()) * (iv.damp_b + iv.damp_b_delay)
            }
        };
        worst = worst_of(worst, dedt - bound, iv.t1);
    }
    Ok(CheckReport::from_worst(
        format!("dissipation_{}", which.name()),
        worst,
        slack,
    ))
}

/// Residuals of the boundary-dissipation identity for the undamped linear
/// system, `d/dt ‖u‖² = −u_xx(0)²` (`full`) and its half-energy form
/// `d/dt ½‖u‖² = −½u_xx(0)²` (`half`), together with the largest positive
/// `d/dt ½‖u‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityResidual<T> {
    pub full: T,
    pub half: T,
    pub max_growth: T,
    pub time_of_worst: T,
}

pub fn energy_identity_check<T: Scalar>(trace: &EnergyTrace<T>) -> IdentityResidual<T> {
    let half = T::lit(0.5);
    let mut out = IdentityResidual {
        full: T::zero(),
        half: T::zero(),
        max_growth: T::neg_infinity(),
        time_of_worst: T::zero(),
    };
    for (p0, p1, iv) in step_pairs(trace) {
        let d = (p1.l2_sq - p0.l2_sq) / (iv.t1 - iv.t0);
        let r = (d + iv.uxx0_sq).abs();
        if r > out.full {
            out.full = r;
            out.time_of_worst = iv.t1;
        }
        out.half = out.half.max((half * d + half * iv.uxx0_sq).abs());
        out.max_growth = out.max_growth.max(half * d);
    }
    out
}

/// Bounds on the Lyapunov multipliers for a family.
pub fn check_lyapunov_constants<T: Scalar>(
    params: &SimParams<T>,
    alpha: T,
    beta: T,
    gamma: T,
    family: LyapunovFamily,
) -> Result<()> {
    if !(alpha > T::zero() && beta > T::zero() && gamma > T::zero()) {
        return Err(config("alpha, beta and gamma must be positive"));
    }
    if !length_below_critical(params.length) {
        return Err(config("L must be below pi*sqrt(3)"));
    }
    let (a_max, b_max) = match family {
        LyapunovFamily::Mu => {
            if !cdelay(params.h, params.mu1, params.mu2, params.xi) {
                return Err(config("delay window condition violated"));
            }
            let b_max = theory::p6j_beta_max(params.h, params.mu1, params.mu2, params.xi);
            let a_max = theory::p6j_alpha_max(params.length, params.h, params.mu1, params.mu2, params.xi, beta);
            (a_max, b_max)
        }
        LyapunovFamily::Aux => {
            if params.xi <= T::one() {
                return Err(config("xi must exceed 1"));
            }
            let a_max = theory::p7j_alpha_max(params.length, params.xi);
            let b_max = theory::p7j_beta_max(params.length, params.xi, alpha);
            (a_max, b_max)
        }
    };
    if alpha >= a_max || beta >= b_max {
        return Err(config(format!(
            "inadmissible multipliers: need alpha < {a_max}, beta < {b_max}"
        )));
    }
    Ok(())
}

/// Discrete `V' + 2γV ≤ slack` with `V' ` the forward difference and `V` the
/// step average.
pub fn lyapunov_decay_check<T: Scalar>(
    trace: &EnergyTrace<T>,
    params: &SimParams<T>,
    alpha: T,
    beta: T,
    gamma: T,
    family: LyapunovFamily,
    slack: Option<T>,
) -> Result<CheckReport> {
    check_lyapunov_constants(params, alpha, beta, gamma, family)?;
    let which = match family {
        LyapunovFamily::Mu => EnergyKind::Mu,
        LyapunovFamily::Aux => EnergyKind::Xi,
    };
    let slack = slack.unwrap_or_else(|| default_slack(trace, which, params.dt));
    let two = T::lit(2.0);
    let mut worst = None;
    for w in trace.points.windows(2) {
        let (v0, v1) = (
            w[0].lyapunov(alpha, beta, family),
            w[1].lyapunov(alpha, beta, family),
        );
        let lhs = (v1 - v0) / (w[1].t - w[0].t) + two * gamma * T::lit(0.5) * (v0 + v1);
        worst = worst_of(worst, lhs, w[1].t);
    }
    Ok(CheckReport::from_worst("lyapunov_decay", worst, slack))
}

/// Worst ratio `E(t) / (κ E(0) e^{−2γt})` along the trace.
pub fn decay_envelope_ratio<T: Scalar>(trace: &EnergyTrace<T>, which: EnergyKind, kappa: T, gamma: T) -> T {
    let e0 = match trace.points.first() {
        Some(p) => p.energy(which),
        None => return T::zero(),
    };
    if e0 == T::zero() {
        return T::zero();
    }
    trace
        .points
        .iter()
        .map(|p| p.energy(which) / (kappa * e0 * (-T::lit(2.0) * gamma * p.t).exp()))
        .fold(T::zero(), T::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observability<T> {
    Ratio(T),
    /// Nonzero initial energy but no observed dissipation.
    Unobservable,
    /// Zero initial energy.
    Degenerate,
}

/// `E(0) / [∫₀ᵀ u_xx(0)² + ∫₀ᵀ∫a u² + ∫₀ᵀ∫a u²(t − h)]` with the mu energy.
pub fn observability_ratio<T: Scalar>(trace: &EnergyTrace<T>, t_obs: T) -> Result<Observability<T>> {
    let last = trace.points.last().map_or(T::zero(), |p| p.t);
    let tol = T::lit(1e-9) * t_obs.max(T::one());
    if t_obs > last + tol {
        return Err(config(format!("observation time {t_obs} beyond trace end {last}")));
    }
    let e0 = trace.points.first().map_or(T::zero(), |p| p.e_mu);
    let denom: T = trace
        .intervals
        .iter()
        .filter(|iv| iv.t1 <= t_obs + tol)
        .map(|iv| (iv.t1 - iv.t0) * (iv.uxx0_sq + iv.damp_a + iv.damp_a_delay))
        .sum();
    Ok(if e0 == T::zero() {
        Observability::Degenerate
    } else if denom == T::zero() {
        Observability::Unobservable
    } else {
        Observability::Ratio(e0 / denom)
    })
}

/// Samples `y(·, t_k)`, `t_k = k dt`, of a trajectory on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled<T> {
    pub dt: T,
    pub values: Vec<Vec<T>>,
}

fn trapezoid<T: Scalar>(dt: T, f: &[T]) -> T {
    if f.len() < 2 {
        return T::zero();
    }
    let inner: T = f[1..f.len() - 1].iter().copied().sum();
    dt * (inner + T::lit(0.5) * (f[0] + f[f.len() - 1]))
}

/// `max_t ‖y‖ + (∫ ‖y‖²_{H²} dt)^{1/2}` with `‖y‖²_{H²} = ‖y‖² + ‖y_x‖² + ‖y_xx‖²`.
pub fn norm_b<T: Scalar>(grid: &SpatialGrid<T>, y: &Sampled<T>) -> Result<T> {
    let d1 = derivative_operator(grid, 1)?;
    let d2 = second_difference(grid);
    let mut max_l2 = T::zero();
    let mut h2 = Vec::with_capacity(y.values.len());
    for v in &y.values {
        check_len(grid.n(), v.len())?;
        let l2 = grid.l2_sq(v);
        max_l2 = max_l2.max(l2.sqrt());
        h2.push(l2 + grid.l2_sq(&d1.apply(v)?) + grid.l2_sq(&d2.apply(v)?));
    }
    Ok(max_l2 + trapezoid(y.dt, &h2).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearOutcome<T> {
    pub lhs: T,
    pub rhs: T,
}

impl<T: Scalar> BilinearOutcome<T> {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// `∫₀ᵀ ‖u u_x − v v_x‖ dt` against `√2 T^{1/4} (‖u‖_B + ‖v‖_B) ‖u − v‖_B`.
pub fn bilinear_estimate_check<T: Scalar>(
    grid: &SpatialGrid<T>,
    u: &Sampled<T>,
    v: &Sampled<T>,
) -> Result<BilinearOutcome<T>> {
    check_len(u.values.len(), v.values.len())?;
    if (u.dt - v.dt).abs() > T::epsilon() * u.dt {
        return Err(config("trajectories use different time steps"));
    }
    let d1 = derivative_operator(grid, 1)?;
    let mut integrand = Vec::with_capacity(u.values.len());
    for (a, b) in u.values.iter().zip(&v.values) {
        check_len(grid.n(), a.len())?;
        check_len(grid.n(), b.len())?;
        let (ax, bx) = (d1.apply(a)?, d1.apply(b)?);
        let diff: Vec<T> = (0..grid.n()).map(|i| a[i] * ax[i] - b[i] * bx[i]).collect();
        integrand.push(grid.l2_sq(&diff).sqrt());
    }
    let lhs = trapezoid(u.dt, &integrand);
    let t_final = u.dt * T::from_usize_lossy(u.values.len().saturating_sub(1));
    let diff = Sampled {
        dt: u.dt,
        values: u
            .values
            .iter()
            .zip(&v.values)
            .map(|(a, b)| a.iter().zip(b).map(|(&p, &q)| p - q).collect())
            .collect(),
    };
    let rhs = T::lit(2.0).sqrt()
        * t_final.powf(T::lit(0.25))
        * (norm_b(grid, u)? + norm_b(grid, v)?)
        * norm_b(grid, &diff)?;
    Ok(BilinearOutcome { lhs, rhs })
}
