//! Physical and numerical parameters, coefficient profiles and the standing
//! assumptions of the stabilization theory.

use std::f64::consts::PI;

use crate::discretization::{build_grid, SpatialGrid};
use crate::error::{config, Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileKind {
    Constant,
    Indicator,
    SmoothedIndicator,
    Tabulated,
}

/// A nonnegative coefficient `a(x)` or `b(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientProfile<T> {
    pub kind: ProfileKind,
    pub amplitude: T,
    /// `[x_lo, x_hi]`, used by the indicator kinds.
    pub support: (T, T),
    /// Ramp width of the smoothed indicator, in grid cells.
    pub transition_cells: T,
    pub table: Option<Vec<T>>,
}

/// Quintic smoothstep `6s^5 - 15s^4 + 10s^3`, clamped to `[0, 1]`; C² at both ends.
pub fn smootherstep<T: Scalar>(s: T) -> T {
    let s = s.max(T::zero()).min(T::one());
    s * s * s * (s * (s * T::lit(6.0) - T::lit(15.0)) + T::lit(10.0))
}

impl<T: Scalar> CoefficientProfile<T> {
    pub fn constant(amplitude: T) -> Self {
        Self {
            kind: ProfileKind::Constant,
            amplitude,
            support: (T::zero(), T::zero()),
            transition_cells: T::lit(2.0),
            table: None,
        }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    pub fn indicator(amplitude: T, lo: T, hi: T) -> Self {
        Self {
            kind: ProfileKind::Indicator,
            support: (lo, hi),
            ..Self::constant(amplitude)
        }
    }

    pub fn smoothed_indicator(amplitude: T, lo: T, hi: T, transition_cells: T) -> Self {
        Self {
            kind: ProfileKind::SmoothedIndicator,
            support: (lo, hi),
            transition_cells,
            ..Self::constant(amplitude)
        }
    }

    pub fn tabulated(values: Vec<T>) -> Self {
        let amplitude = values.iter().fold(T::zero(), |m, &v| m.max(v));
        Self {
            kind: ProfileKind::Tabulated,
            table: Some(values),
            ..Self::constant(amplitude)
        }
    }

    /// `‖·‖∞` of the profile.
    pub fn sup_norm(&self) -> T {
        match &self.table {
            Some(t) => t.iter().fold(T::zero(), |m, &v| m.max(v.abs())),
            None => self.amplitude.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm() == T::zero()
    }

    pub(crate) fn check(&self, length: T) -> Result<()> {
        if !self.amplitude.is_finite() || self.amplitude < T::zero() {
            return Err(config(format!("profile amplitude must be >= 0, got {}", self.amplitude)));
        }
        match self.kind {
            ProfileKind::Constant => Ok(()),
            ProfileKind::Indicator | ProfileKind::SmoothedIndicator => {
                let (lo, hi) = self.support;
                if !(lo >= T::zero() && hi <= length && lo < hi) {
                    return Err(Error::Domain(format!(
                        "support [{lo}, {hi}] is not a nonempty subinterval of [0, {length}]"
                    )));
                }
                if self.amplitude <= T::zero() {
                    return Err(config("indicator profiles need a positive amplitude"));
                }
                if self.kind == ProfileKind::SmoothedIndicator && !(self.transition_cells >= T::zero()) {
                    return Err(config("transition width must be >= 0"));
                }
                Ok(())
            }
            ProfileKind::Tabulated => match &self.table {
                Some(t) if t.iter().all(|v| v.is_finite() && *v >= T::zero()) => Ok(()),
                Some(_) => Err(config("tabulated profile has negative or non-finite entries")),
                None => Err(config("tabulated profile without a table")),
            },
        }
    }
}

pub fn evaluate_profile<T: Scalar>(p: &CoefficientProfile<T>, grid: &SpatialGrid<T>) -> Result<Vec<T>> {
    p.check(grid.length())?;
    let (lo, hi) = p.support;
    Ok(match p.kind {
        ProfileKind::Constant => vec![p.amplitude; grid.n()],
        ProfileKind::Indicator => grid.sample(|x| {
            if x >= lo && x <= hi {
                p.amplitude
            } else {
                T::zero()
            }
        }),
        ProfileKind::SmoothedIndicator => {
            // Ramps sit inside the support and only at edges interior to (0, L).
            let mut w = p.transition_cells * grid.dx();
            let left = lo > T::zero();
            let right = hi < grid.length();
            let edges = T::from_usize_lossy(left as usize + right as usize);
            if edges > T::zero() {
                w = w.min((hi - lo) / edges);
            }
            grid.sample(|x| {
                if x < lo || x > hi {
                    return T::zero();
                }
                let mut v = p.amplitude;
                if left && w > T::zero() {
                    v *= smootherstep((x - lo) / w);
                }
                if right && w > T::zero() {
                    v *= smootherstep((hi - x) / w);
                }
                v
            })
        }
        ProfileKind::Tabulated => {
            let t = p.table.as_ref().expect("checked above");
            crate::error::check_len(grid.n(), t.len())?;
            t.clone()
        }
    })
}

/// Reading of the measure in the delayed part of the energies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HistoryMeasure {
    /// `∫∫ coef u²(x, t - ρh) dρ dx`.
    #[default]
    DRho,
    /// Literal `ρ dx` weight, i.e. `∫∫ ρ coef u² dρ dx`.
    RhoDx,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimParams<T> {
    pub length: T,
    pub h: T,
    pub mu1: T,
    pub mu2: T,
    pub xi: T,
    pub a: CoefficientProfile<T>,
    pub b: CoefficientProfile<T>,
    pub n: usize,
    pub dt: T,
    pub t_final: T,
    pub snapshot_stride: usize,
    /// Number of leading steps replaced by two backward-Euler half steps.
    pub startup_smoothing: usize,
    pub history_measure: HistoryMeasure,
}

impl<T: Scalar> SimParams<T> {
    /// Defaults: `h = 1`, no feedback, `ξ = 1`, `dt` the largest divisor of `h`
    /// not above `dx / 2`, horizon 1.
    pub fn new(length: T, n: usize) -> Self {
        let h = T::one();
        let dx = length / T::from_usize_lossy(n + 1);
        let m = (h / (dx * T::lit(0.5))).ceil().max(T::one());
        Self {
            length,
            h,
            mu1: T::zero(),
            mu2: T::zero(),
            xi: T::one(),
            a: CoefficientProfile::zero(),
            b: CoefficientProfile::zero(),
            n,
            dt: h / m,
            t_final: T::one(),
            snapshot_stride: 10,
            startup_smoothing: 0,
            history_measure: HistoryMeasure::DRho,
        }
    }

    pub fn grid(&self) -> Result<SpatialGrid<T>> {
        build_grid(self.length, self.n)
    }

    pub fn a_values(&self, grid: &SpatialGrid<T>) -> Result<Vec<T>> {
        evaluate_profile(&self.a, grid)
    }

    pub fn b_values(&self, grid: &SpatialGrid<T>) -> Result<Vec<T>> {
        evaluate_profile(&self.b, grid)
    }

    /// Structural checks; theory conditions are left to [`validate`].
    pub fn check(&self) -> Result<()> {
        let pos = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(config(format!("{name} must be positive, got {v}")))
            }
        };
        pos("L", self.length)?;
        pos("h", self.h)?;
        pos("dt", self.dt)?;
        pos("xi", self.xi)?;
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.t_final >= T::zero() && self.t_final.is_finite()) {
            return Err(config(format!("t_final must be >= 0, got {}", self.t_final)));
        }
        if self.snapshot_stride == 0 {
            return Err(config("snapshot stride must be >= 1"));
        }
        self.grid()?;
        self.a.check(self.length)?;
        self.b.check(self.length)?;
        self.delay_steps().map(|_| ())
    }

    /// `m = h / dt`; fails unless `h` is an integer multiple of `dt`.
    pub fn delay_steps(&self) -> Result<usize> {
        let ratio = self.h / self.dt;
        let m = ratio.round();
        let tol = T::epsilon().sqrt() * m.max(T::one());
        if m < T::one() || (ratio - m).abs() > tol {
            return Err(config(format!(
                "h = {} is not an integer multiple of dt = {}",
                self.h, self.dt
            )));
        }
        m.to_usize()
            .ok_or_else(|| config("delay step count does not fit in usize"))
    }

    /// Shrinks `dt` to the nearest `h / m`, `m` integer; returns a note when `dt` changed.
    pub fn align_dt(&mut self) -> Option<String> {
        if self.delay_steps().is_ok() {
            return None;
        }
        let m = (self.h / self.dt).ceil().max(T::one());
        let old = self.dt;
        self.dt = self.h / m;
        Some(format!(
            "dt adjusted from {old} to {} so that h = {} dt",
            self.dt,
            m.to_f64_lossy()
        ))
    }

    /// Number of steps covering `[0, t_final]`.
    pub fn step_count(&self) -> usize {
        (self.t_final / self.dt).round().to_usize().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuppCondition {
    BInA,
    BNotInA,
    NoB,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub cdelay_ok: bool,
    pub length_ok: bool,
    pub supp_condition: SuppCondition,
    pub messages: Vec<String>,
}

/// `hμ₂ < ξ < h(2μ₁ − μ₂)`.
pub fn cdelay<T: Scalar>(h: T, mu1: T, mu2: T, xi: T) -> bool {
    h * mu2 < xi && xi < h * (T::lit(2.0) * mu1 - mu2)
}

/// `L < π√3`.
pub fn length_below_critical<T: Scalar>(length: T) -> bool {
    length.to_f64_lossy() < PI * 3f64.sqrt()
}

pub fn validate<T: Scalar>(params: &SimParams<T>) -> ValidationReport {
    let mut messages = Vec::new();
    let cdelay_ok = cdelay(params.h, params.mu1, params.mu2, params.xi);
    if !cdelay_ok {
        messages.push(format!(
            "delay window violated: need {} < xi = {} < {}",
            params.h * params.mu2,
            params.xi,
            params.h * (T::lit(2.0) * params.mu1 - params.mu2)
        ));
    }
    let length_ok = length_below_critical(params.length);
    if !length_ok {
        messages.push(format!(
            "L = {} is not below pi*sqrt(3); Lyapunov constants unavailable",
            params.length
        ));
    }
    let supp_condition = match params.grid() {
        Ok(grid) => match (params.a_values(&grid), params.b_values(&grid)) {
            (Ok(a), Ok(b)) => {
                if b.iter().all(|&v| v == T::zero()) {
                    SuppCondition::NoB
                } else if b.iter().zip(&a).all(|(&bv, &av)| bv == T::zero() || av > T::zero()) {
                    SuppCondition::BInA
                } else {
                    messages.push("supp b is not contained in supp a".into());
                    SuppCondition::BNotInA
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                messages.push(format!("profile: {e}"));
                SuppCondition::NoB
            }
        },
        Err(e) => {
            messages.push(format!("grid: {e}"));
            SuppCondition::NoB
        }
    };
    if let Ok(grid) = params.grid() {
        if params.dt > grid.dx() {
            messages.push(format!(
                "dt = {} exceeds dx = {}; expect advective inaccuracy",
                params.dt,
                grid.dx()
            ));
        }
    }
    ValidationReport {
        cdelay_ok,
        length_ok,
        supp_condition,
        messages,
    }
}
