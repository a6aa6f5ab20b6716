//! IMEX time stepping: Crank–Nicolson for the linear part, Adams–Bashforth
//! for `u u_x`, trapezoid on the exactly stored delayed states.

use crate::delay::DelayHistory;
use crate::discretization::{BandedLu, BandedOperator, DerivativeSet, SpatialGrid, State};
use crate::error::{config, check_len, Error, Result};
use crate::functionals::{EnergyContext, EnergyTrace};
use crate::model::SimParams;
use crate::scalar::{fmt17, max_abs, Scalar};

pub const BLOW_UP_THRESHOLD: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VariantTag {
    /// `a u + b u(t − h)`.
    Fd1,
    /// `a (μ₁ u + μ₂ u(t − h))`.
    Mu,
    /// `a u + b u(t − h) + ξ b u`.
    Perturbed,
    /// Perturbed system without `u u_x`.
    AuxiliaryLinear,
    /// Mu system without `u u_x`.
    LinearMu,
    /// `a = b = 0`, no `u u_x`.
    UndampedLinear,
}

impl VariantTag {
    pub const ALL: [VariantTag; 6] = [
        Self::Fd1,
        Self::Mu,
        Self::Perturbed,
        Self::AuxiliaryLinear,
        Self::LinearMu,
        Self::UndampedLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fd1 => "fd1",
            Self::Mu => "mu",
            Self::Perturbed => "perturbed",
            Self::AuxiliaryLinear => "auxiliary-linear",
            Self::LinearMu => "linear-mu",
            Self::UndampedLinear => "undamped-linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| config(format!("unknown variant '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemVariant {
    pub tag: VariantTag,
    pub nonlinearity_on: bool,
}

impl SystemVariant {
    /// The nonlinearity defaults to on exactly for the nonlinear systems.
    pub fn new(tag: VariantTag) -> Self {
        let nonlinearity_on = matches!(tag, VariantTag::Fd1 | VariantTag::Mu | VariantTag::Perturbed);
        Self { tag, nonlinearity_on }
    }

    pub fn linear(tag: VariantTag) -> Self {
        Self {
            tag,
            nonlinearity_on: false,
        }
    }
}

/// Zeroth-order coefficients: `damping ⊙ u(t)` and `delayed ⊙ u(t − h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients<T> {
    pub damping: Vec<T>,
    pub delayed: Vec<T>,
}

impl<T: Scalar> Coefficients<T> {
    pub fn new(params: &SimParams<T>, tag: VariantTag, grid: &SpatialGrid<T>) -> Result<Self> {
        let a = params.a_values(grid)?;
        let b = params.b_values(grid)?;
        let zip = |f: &dyn Fn(T, T) -> T| a.iter().zip(&b).map(|(&x, &y)| f(x, y)).collect::<Vec<T>>();
        let (damping, delayed) = match tag {
            VariantTag::Fd1 => (a.clone(), b.clone()),
            VariantTag::Mu | VariantTag::LinearMu => (
                a.iter().map(|&v| params.mu1 * v).collect(),
                a.iter().map(|&v| params.mu2 * v).collect(),
            ),
            VariantTag::Perturbed | VariantTag::AuxiliaryLinear => {
                (zip(&|x, y| x + params.xi * y), b.clone())
            }
            VariantTag::UndampedLinear => (vec![T::zero(); grid.n()], vec![T::zero(); grid.n()]),
        };
        Ok(Self { damping, delayed })
    }
}

/// `N(u) = (u ⊙ D₁u + D₁(u²)) / 3`, so that `⟨N(u), u⟩ = 0` exactly.
pub fn nonlinear_term<T: Scalar>(u: &[T], d1: &BandedOperator<T>) -> Result<Vec<T>> {
    let du = d1.apply(u)?;
    let sq: Vec<T> = u.iter().map(|&v| v * v).collect();
    let dsq = d1.apply(&sq)?;
    let third = T::one() / T::lit(3.0);
    Ok(u.iter()
        .zip(&du)
        .zip(&dsq)
        .map(|((&v, &dv), &ds)| third * (v * dv + ds))
        .collect())
}

/// `(I + dt/2 L, I − dt/2 L)` with `L = D₁ + D₃ − D₅ + diag(damping)`.
pub fn build_imex_matrices<T: Scalar>(
    dt: T,
    ops: &DerivativeSet<T>,
    coeffs: &Coefficients<T>,
) -> Result<(BandedOperator<T>, BandedOperator<T>)> {
    let lin = linear_operator(ops, coeffs)?;
    let id = BandedOperator::identity(lin.rows());
    let h = dt * T::lit(0.5);
    let lhs = BandedOperator::combine(&[(T::one(), &id), (h, &lin)], "cn-lhs")?;
    let rhs = BandedOperator::combine(&[(T::one(), &id), (-h, &lin)], "cn-rhs")?;
    Ok((lhs, rhs))
}

pub fn linear_operator<T: Scalar>(ops: &DerivativeSet<T>, coeffs: &Coefficients<T>) -> Result<BandedOperator<T>> {
    let damp = BandedOperator::from_diagonal(&coeffs.damping, "damping");
    BandedOperator::combine(
        &[
            (T::one(), &ops.d1),
            (T::one(), &ops.d3),
            (-T::one(), &ops.d5),
            (T::one(), &damp),
        ],
        "linear",
    )
}

pub type Source<T> = Box<dyn Fn(T, T) -> T + Send + Sync>;

pub struct Stepper<T: Scalar> {
    grid: SpatialGrid<T>,
    variant: SystemVariant,
    ops: DerivativeSet<T>,
    coeffs: Coefficients<T>,
    dt: T,
    rhs: BandedOperator<T>,
    lu: BandedLu<T>,
    source: Option<Source<T>>,
    startup: usize,
    prev_nonlinear: Option<Vec<T>>,
    taken: usize,
    origin: Option<T>,
}

impl<T: Scalar> Stepper<T> {
    pub fn new(params: &SimParams<T>, variant: SystemVariant) -> Result<Self> {
        params.check()?;
        let grid = params.grid()?;
        let ops = DerivativeSet::new(&grid)?;
        let coeffs = Coefficients::new(params, variant.tag, &grid)?;
        let (lhs, rhs) = build_imex_matrices(params.dt, &ops, &coeffs)?;
        let lu = lhs.factorize()?;
        Ok(Self {
            grid,
            variant,
            ops,
            coeffs,
            dt: params.dt,
            rhs,
            lu,
            source: None,
            startup: params.startup_smoothing,
            prev_nonlinear: None,
            taken: 0,
            origin: None,
        })
    }

    /// Adds a forcing `f(x, t)` to the right-hand side.
    pub fn with_source(mut self, f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        self.source = Some(Box::new(f));
        self
    }

    pub fn grid(&self) -> &SpatialGrid<T> {
        &self.grid
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn operators(&self) -> &DerivativeSet<T> {
        &self.ops
    }

    pub fn coefficients(&self) -> &Coefficients<T> {
        &self.coeffs
    }

    fn nonlinear(&self, u: &[T]) -> Result<Vec<T>> {
        if self.variant.nonlinearity_on {
            nonlinear_term(u, &self.ops.d1)
        } else {
            Ok(vec![T::zero(); u.len()])
        }
    }

    fn source_at(&self, t: T) -> Option<Vec<T>> {
        self.source.as_ref().map(|f| self.grid.sample(|x| f(x, t)))
    }

    /// Advances `state` (the newest slot of `hist`) by one step and pushes the result.
    pub fn step(&mut self, state: &State<T>, hist: &mut DelayHistory<T>) -> Result<State<T>> {
        check_len(self.grid.n(), state.values.len())?;
        if hist.lag(0) != &state.values[..] {
            return Err(Error::Sequencing("state is not the newest history slot".into()));
        }
        let origin = *self.origin.get_or_insert(state.time);
        let t0 = state.time;
        let t1 = origin + T::from_usize_lossy(self.taken + 1) * self.dt;
        let m = hist.m();
        let half = T::lit(0.5);
        let dt = self.dt;
        let u = &state.values;
        let d = &self.coeffs.delayed;
        let (old, new) = (hist.lag(m), hist.lag(m - 1));
        let n_now = self.nonlinear(u)?;

        let next = if self.taken < self.startup {
            // two backward-Euler half steps share the CN matrix I + dt/2 L
            let th = t0 + half * dt;
            let f_half = self.source_at(th);
            let mut v: Vec<T> = (0..u.len())
                .map(|i| {
                    let delay = d[i] * half * (old[i] + new[i]);
                    let f = f_half.as_ref().map_or(T::zero(), |f| f[i]);
                    u[i] - half * dt * (n_now[i] + delay - f)
                })
                .collect();
            self.lu.solve_in_place(&mut v)?;
            let n_mid = self.nonlinear(&v)?;
            let f_end = self.source_at(t1);
            let mut w: Vec<T> = (0..u.len())
                .map(|i| {
                    let f = f_end.as_ref().map_or(T::zero(), |f| f[i]);
                    v[i] - half * dt * (n_mid[i] + d[i] * new[i] - f)
                })
                .collect();
            self.lu.solve_in_place(&mut w)?;
            w
        } else {
            let mut r = self.rhs.apply(u)?;
            let f0 = self.source_at(t0);
            let f1 = self.source_at(t1);
            let three_halves = T::lit(1.5);
            for i in 0..r.len() {
                let nl = match &self.prev_nonlinear {
                    Some(p) => three_halves * n_now[i] - half * p[i],
                    None => n_now[i],
                };
                let delay = d[i] * half * (old[i] + new[i]);
                let f = match (&f0, &f1) {
                    (Some(a), Some(b)) => half * (a[i] + b[i]),
                    _ => T::zero(),
                };
                r[i] -= dt * (nl + delay - f);
            }
            self.lu.solve_in_place(&mut r)?;
            r
        };
        self.prev_nonlinear = Some(n_now);
        self.taken += 1;

        let peak = max_abs(&next);
        if !peak.is_finite() || next.iter().any(|v| !v.is_finite()) || peak > T::lit(BLOW_UP_THRESHOLD) {
            return Err(Error::BlowUp {
                t: t1.to_f64_lossy(),
                max_abs: if peak.is_finite() { peak.to_f64_lossy() } else { f64::INFINITY },
            });
        }
        let out = State::new(next, t1);
        hist.push(out.clone())?;
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub snapshot_times: Vec<T>,
    pub snapshots: Vec<State<T>>,
    pub history: DelayHistory<T>,
    pub trace: EnergyTrace<T>,
    pub grid: SpatialGrid<T>,
}

impl<T: Scalar> Trajectory<T> {
    /// Long-format CSV with columns `t,x,u`.
    pub fn snapshots_csv(&self) -> String {
        let mut out = String::from("t,x,u\n");
        for s in &self.snapshots {
            for (x, u) in self.grid.points().iter().zip(&s.values) {
                out.push_str(&format!("{},{},{}\n", fmt17(s.time), fmt17(*x), fmt17(*u)));
            }
        }
        out
    }

    pub fn final_state(&self) -> State<T> {
        self.history.current()
    }
}

/// Runs from `t = 0` to `t_final` with history `z0(x, t)`, `t ∈ [−h, 0]`.
pub fn simulate<T: Scalar>(
    params: &SimParams<T>,
    variant: SystemVariant,
    z0: impl Fn(T, T) -> T,
) -> Result<Trajectory<T>> {
    let stepper = Stepper::new(params, variant)?;
    simulate_with(params, stepper, z0)
}

/// [`simulate`] with a prepared stepper, e.g. one carrying a source term.
pub fn simulate_with<T: Scalar>(
    params: &SimParams<T>,
    mut stepper: Stepper<T>,
    z0: impl Fn(T, T) -> T,
) -> Result<Trajectory<T>> {
    let grid = stepper.grid().clone();
    let m = params.delay_steps()?;
    let mut hist = DelayHistory::init(z0, &grid, params.h, m)?;
    let ctx = EnergyContext::new(params)?;
    let mut trace = EnergyTrace::new(stepper.variant.tag);
    let mut state = hist.current();
    state.ensure_finite()?;
    trace.points.push(ctx.point(&hist)?);
    let mut snapshot_times = vec![state.time];
    let mut snapshots = vec![state.clone()];
    let steps = params.step_count();
    for k in 1..=steps {
        let (lag_m, lag_m1) = (hist.lag(m).to_vec(), hist.lag(m - 1).to_vec());
        let next = stepper.step(&state, &mut hist)?;
        trace.intervals.push(ctx.interval(
            &state.values,
            &next.values,
            &lag_m,
            &lag_m1,
            state.time,
            next.time - state.time,
        ));
        trace.points.push(ctx.point(&hist)?);
        if k % params.snapshot_stride == 0 {
            snapshot_times.push(next.time);
            snapshots.push(next.clone());
        }
        state = next;
    }
    Ok(Trajectory {
        snapshot_times,
        snapshots,
        history: hist,
        trace,
        grid,
    })
}
