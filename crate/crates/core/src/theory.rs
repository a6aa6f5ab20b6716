//! Closed-form stability constants and empirical decay fits.

use std::f64::consts::PI;

use crate::error::{config, Error, Result};
use crate::functionals::{EnergyKind, EnergyTrace};
use crate::model::{cdelay, length_below_critical, SimParams};
use crate::scalar::Scalar;

fn pi<T: Scalar>() -> T {
    T::lit(PI)
}

fn positive<T: Scalar>(v: T) -> Option<T> {
    (v > T::zero() && v.is_finite()).then_some(v)
}

/// `C₀ = min{½, μ₁ − ξ/(2h) − μ₂/2, ξ/(2h) − μ₂/2}`; `None` outside the delay window.
pub fn c0<T: Scalar>(h: T, mu1: T, mu2: T, xi: T) -> Option<T> {
    let half = T::lit(0.5);
    let q = xi / (T::lit(2.0) * h);
    let v = half.min(mu1 - q - half * mu2).min(q - half * mu2);
    if cdelay(h, mu1, mu2, xi) {
        positive(v)
    } else {
        None
    }
}

pub fn p6j_beta_max<T: Scalar>(h: T, mu1: T, mu2: T, xi: T) -> T {
    T::lit(2.0) * h / xi * (mu1 - xi / (T::lit(2.0) * h) - mu2 / T::lit(2.0))
}

/// Upper bound on α at a given β. The second branch is void when `μ₂ = 0`.
pub fn p6j_alpha_max<T: Scalar>(length: T, h: T, mu1: T, mu2: T, xi: T, beta: T) -> T {
    let two = T::lit(2.0);
    let q = xi / (two * h);
    let first = (mu1 - q - mu2 / two - beta * q) / (two * length * mu1 + length * mu2);
    if mu2 > T::zero() {
        first.min((q - mu2 / two) / (length * mu2))
    } else {
        first
    }
}

/// `(9π² − 3L²) / (2 L^{3/2} π²)`.
pub fn p6j_r_max<T: Scalar>(length: T) -> T {
    let p2 = pi::<T>() * pi::<T>();
    (T::lit(9.0) * p2 - T::lit(3.0) * length * length) / (T::lit(2.0) * length.powf(T::lit(1.5)) * p2)
}

pub fn p6j_gamma<T: Scalar>(length: T, h: T, xi: T, alpha: T, beta: T, r: T) -> T {
    let p2 = pi::<T>() * pi::<T>();
    let l2 = length * length;
    let two = T::lit(2.0);
    let first = (T::lit(9.0) * p2 - T::lit(3.0) * l2 - two * length.powf(T::lit(1.5)) * r * p2) * alpha
        / (T::lit(3.0) * l2 * (T::one() + two * length * alpha));
    let second = beta * xi / (two * h * (xi * beta + xi));
    first.min(second)
}

pub fn p6j_kappa<T: Scalar>(length: T, alpha: T, beta: T) -> T {
    T::one() + (T::lit(2.0) * alpha * length).max(beta)
}

/// Fractions of the admissible ranges at which α, β and r are taken.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection<T> {
    pub alpha: T,
    pub beta: T,
    pub r: T,
}

impl<T: Scalar> Default for Selection<T> {
    fn default() -> Self {
        let half = T::lit(0.5);
        Self {
            alpha: half,
            beta: half,
            r: half,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct P6jConstants<T> {
    pub alpha_max: T,
    pub beta_max: T,
    pub alpha: T,
    pub beta: T,
    pub r_max: T,
    pub r: T,
    pub gamma: T,
    pub kappa: T,
}

pub fn p6j_constants<T: Scalar>(length: T, h: T, mu1: T, mu2: T, xi: T) -> Option<P6jConstants<T>> {
    p6j_constants_with(length, h, mu1, mu2, xi, Selection::default())
}

pub fn p6j_constants_with<T: Scalar>(
    length: T,
    h: T,
    mu1: T,
    mu2: T,
    xi: T,
    sel: Selection<T>,
) -> Option<P6jConstants<T>> {
    if !length_below_critical(length) || !cdelay(h, mu1, mu2, xi) {
        return None;
    }
    let beta_max = positive(p6j_beta_max(h, mu1, mu2, xi))?;
    let beta = sel.beta * beta_max;
    let alpha_max = positive(p6j_alpha_max(length, h, mu1, mu2, xi, beta))?;
    let alpha = sel.alpha * alpha_max;
    let r_max = positive(p6j_r_max(length))?;
    let r = sel.r * r_max;
    let gamma = positive(p6j_gamma(length, h, xi, alpha, beta, r))?;
    Some(P6jConstants {
        alpha_max,
        beta_max,
        alpha,
        beta,
        r_max,
        r,
        gamma,
        kappa: p6j_kappa(length, alpha, beta),
    })
}

pub fn p7j_alpha_max<T: Scalar>(length: T, xi: T) -> T {
    (xi - T::one()) / (T::lit(2.0) * length * (T::one() + T::lit(2.0) * xi))
}

pub fn p7j_beta_max<T: Scalar>(length: T, xi: T, alpha: T) -> T {
    xi - T::one() - T::lit(2.0) * alpha * length * (T::one() + T::lit(2.0) * xi)
}

pub fn p7j_gamma<T: Scalar>(length: T, h: T, xi: T, alpha: T, beta: T) -> T {
    let p2 = pi::<T>() * pi::<T>();
    let l2 = length * length;
    let first = (T::lit(3.0) * p2 - l2) * alpha / (l2 * (T::one() + T::lit(2.0) * alpha * length));
    let second = beta / (T::lit(2.0) * h * (xi + beta));
    first.min(second)
}

pub fn p7j_kappa<T: Scalar>(length: T, xi: T, alpha: T, beta: T) -> T {
    T::one() + (T::lit(2.0) * alpha * length).max(beta / xi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct P7jConstants<T> {
    pub alpha_max: T,
    pub beta_max: T,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub kappa: T,
}

pub fn p7j_constants<T: Scalar>(length: T, h: T, xi: T) -> Option<P7jConstants<T>> {
    p7j_constants_with(length, h, xi, Selection::default())
}

pub fn p7j_constants_with<T: Scalar>(length: T, h: T, xi: T, sel: Selection<T>) -> Option<P7jConstants<T>> {
    if !length_below_critical(length) || xi <= T::one() {
        return None;
    }
    let alpha_max = positive(p7j_alpha_max(length, xi))?;
    let alpha = sel.alpha * alpha_max;
    let beta_max = positive(p7j_beta_max(length, xi, alpha))?;
    let beta = sel.beta * beta_max;
    let gamma = positive(p7j_gamma(length, h, xi, alpha, beta))?;
    Some(P7jConstants {
        alpha_max,
        beta_max,
        alpha,
        beta,
        gamma,
        kappa: p7j_kappa(length, xi, alpha, beta),
    })
}

fn check_eta<T: Scalar>(eta: T) -> Result<()> {
    if eta > T::zero() && eta < T::one() {
        Ok(())
    } else {
        Err(config(format!("eta must lie in (0, 1), got {eta}")))
    }
}

/// `T₀ = ln(2ξκ/η)/(2γ) + 1`.
pub fn t0<T: Scalar>(gamma: T, kappa: T, xi: T, eta: T) -> Result<T> {
    check_eta(eta)?;
    Ok((T::lit(2.0) * xi * kappa / eta).ln() / (T::lit(2.0) * gamma) + T::one())
}

/// `(T₀, T_min)` with `T_min = −ln(η/2)/ν + (2‖b‖∞/ν + 1) s`.
pub fn t0_tmin<T: Scalar>(gamma: T, kappa: T, xi: T, eta: T, nu: T, b_norm: T, s: T) -> Result<(T, T)> {
    let t0 = t0(gamma, kappa, xi, eta)?;
    if !(nu > T::zero()) {
        return Err(config(format!("nu must be positive, got {nu}")));
    }
    if s < T::zero() || s >= t0 {
        return Err(config(format!("s must lie in [0, T0 = {t0}), got {s}")));
    }
    let two = T::lit(2.0);
    let tmin = -(eta / two).ln() / nu + (two * b_norm / nu + T::one()) * s;
    Ok((t0, tmin))
}

/// `ν = ln(1/(η + ε)) / T₀`.
pub fn nu_from_eta<T: Scalar>(t0: T, eta: T, eps: T) -> Result<T> {
    if !(eta + eps < T::one()) || eta <= T::zero() || eps < T::zero() {
        return Err(config(format!("need 0 < eta and eta + eps < 1, got {eta} + {eps}")));
    }
    Ok((T::one() / (eta + eps)).ln() / t0)
}

/// `(γ, ν)` with `γ = (C/C₀)/(1 + C/C₀)` and `ν = ln(1 + C₀/C)/T`.
pub fn nu_from_observability<T: Scalar>(t: T, c: T, c0: T) -> Result<(T, T)> {
    if !(t > T::zero() && c > T::zero() && c0 > T::zero()) {
        return Err(config("T, C and C0 must be positive"));
    }
    let q = c / c0;
    Ok((q / (T::one() + q), (T::one() + c0 / c).ln() / t))
}

/// `min{√ε / (ξ^{3/2} κ^{1/2} e^{((3ξ+1)/2)(ln(2ξκ/η)/(2γ) + 2)}), 1}`.
pub fn delta_bound<T: Scalar>(xi: T, kappa: T, gamma: T, eta: T, eps: T) -> Result<T> {
    if xi <= T::one() {
        return Err(config(format!("xi must exceed 1, got {xi}")));
    }
    check_eta(eta)?;
    if !(eps > T::zero() && eta + eps < T::one()) {
        return Err(config("need eps > 0 and eta + eps < 1"));
    }
    let two = T::lit(2.0);
    let expo = (T::lit(3.0) * xi + T::one()) / two * ((two * xi * kappa / eta).ln() / (two * gamma) + two);
    let v = eps.sqrt() / (xi.powf(T::lit(1.5)) * kappa.sqrt() * expo.exp());
    Ok(v.min(T::one()))
}

/// Auxiliary proof parameters with their defaults `η = 0.5`, `ε = 0.25`, `s = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProofParameters<T> {
    pub eta: T,
    pub eps: T,
    pub s: T,
}

impl<T: Scalar> Default for ProofParameters<T> {
    fn default() -> Self {
        Self {
            eta: T::lit(0.5),
            eps: T::lit(0.25),
            s: T::zero(),
        }
    }
}

/// Every constant the theory attaches to a parameter set; `None` marks a
/// constant whose hypotheses fail.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryConstants<T> {
    pub c0: Option<T>,
    pub p6j: Option<P6jConstants<T>>,
    pub p7j: Option<P7jConstants<T>>,
    pub t0: Option<T>,
    pub t_min: Option<T>,
    pub nu: Option<T>,
    pub delta: Option<T>,
    /// `ξ‖a‖∞/(2h)`.
    pub lambda: T,
}

impl<T: Scalar> TheoryConstants<T> {
    pub fn compute(params: &SimParams<T>, proof: ProofParameters<T>, sel: Selection<T>) -> Result<Self> {
        let (l, h, xi) = (params.length, params.h, params.xi);
        let p6j = p6j_constants_with(l, h, params.mu1, params.mu2, xi, sel);
        let p7j = p7j_constants_with(l, h, xi, sel);
        let (mut t0v, mut t_min, mut nu, mut delta) = (None, None, None, None);
        if let Some(p) = p7j {
            let t = t0(p.gamma, p.kappa, xi, proof.eta)?;
            t0v = Some(t);
            if let Ok(n) = nu_from_eta(t, proof.eta, proof.eps) {
                nu = Some(n);
                t_min = t0_tmin(p.gamma, p.kappa, xi, proof.eta, n, params.b.sup_norm(), proof.s)
                    .ok()
                    .map(|(_, tm)| tm);
            }
            delta = delta_bound(xi, p.kappa, p.gamma, proof.eta, proof.eps).ok();
        }
        Ok(Self {
            c0: c0(h, params.mu1, params.mu2, xi),
            p6j,
            p7j,
            t0: t0v,
            t_min,
            nu,
            delta,
            lambda: xi * params.a.sup_norm() / (T::lit(2.0) * h),
        })
    }

    /// `key = value` lines; absent constants print as `absent`.
    pub fn table(&self) -> String {
        let f = |v: Option<T>| {
            v.map_or_else(
                || "absent".to_string(),
                |x| {
                    let x = x.to_f64_lossy();
                    if x == 0.0 || x.abs() >= 1e-4 {
                        format!("{x:.12}")
                    } else {
                        format!("{x:.12e}")
                    }
                },
            )
        };
        let mut rows = vec![("C0", f(self.c0)), ("lambda", f(Some(self.lambda)))];
        let p6 = self.p6j;
        rows.extend([
            ("p6j.alpha_max", f(p6.map(|p| p.alpha_max))),
            ("p6j.beta_max", f(p6.map(|p| p.beta_max))),
            ("p6j.alpha", f(p6.map(|p| p.alpha))),
            ("p6j.beta", f(p6.map(|p| p.beta))),
            ("p6j.r_max", f(p6.map(|p| p.r_max))),
            ("p6j.r", f(p6.map(|p| p.r))),
            ("p6j.gamma", f(p6.map(|p| p.gamma))),
            ("p6j.kappa", f(p6.map(|p| p.kappa))),
        ]);
        let p7 = self.p7j;
        rows.extend([
            ("p7j.alpha_max", f(p7.map(|p| p.alpha_max))),
            ("p7j.beta_max", f(p7.map(|p| p.beta_max))),
            ("p7j.alpha", f(p7.map(|p| p.alpha))),
            ("p7j.beta", f(p7.map(|p| p.beta))),
            ("p7j.gamma", f(p7.map(|p| p.gamma))),
            ("p7j.kappa", f(p7.map(|p| p.kappa))),
            ("T0", f(self.t0)),
            ("T_min", f(self.t_min)),
            ("nu", f(self.nu)),
            ("delta", f(self.delta)),
        ]);
        rows.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit<T> {
    pub gamma_emp: T,
    pub kappa_emp: T,
    pub window: (T, T),
    /// Largest `|ln E − fit|` over the window.
    pub residual: T,
    pub samples: usize,
}

/// Least-squares line through `(t, ln E)` on `window`; `e0` scales the prefactor.
pub fn fit_decay_series<T: Scalar>(times: &[T], energy: &[T], e0: T, window: (T, T)) -> Result<DecayFit<T>> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Window(format!("empty window [{lo}, {hi}]")));
    }
    let mut pts = Vec::new();
    for (&t, &e) in times.iter().zip(energy) {
        if t < lo || t > hi {
            continue;
        }
        if !(e > T::zero()) || !e.is_finite() {
            return Err(Error::Window(format!("energy {e} at t = {t} is not positive")));
        }
        pts.push((t, e.ln()));
    }
    if pts.len() < 2 {
        return Err(Error::Window(format!("fewer than two samples in [{lo}, {hi}]")));
    }
    let k = T::from_usize_lossy(pts.len());
    let tm = pts.iter().map(|p| p.0).sum::<T>() / k;
    let ym = pts.iter().map(|p| p.1).sum::<T>() / k;
    let sxx: T = pts.iter().map(|p| (p.0 - tm) * (p.0 - tm)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let residual = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(T::zero(), T::max);
    Ok(DecayFit {
        gamma_emp: -slope / T::lit(2.0),
        kappa_emp: intercept.exp() / e0,
        window,
        residual,
        samples: pts.len(),
    })
}

pub fn fit_decay<T: Scalar>(trace: &EnergyTrace<T>, which: EnergyKind, window: (T, T)) -> Result<DecayFit<T>> {
    let e = trace.series(which);
    let e0 = *e.first().ok_or_else(|| Error::Window("empty trace".into()))?;
    fit_decay_series(&trace.times(), &e, e0, window)
}

/// Latest time in `[start, end]` before `E` first drops below `floor · E(0)`;
/// keeps a fit clear of the round-off plateau of a decayed run.
pub fn floor_limited_end<T: Scalar>(trace: &EnergyTrace<T>, which: EnergyKind, start: T, floor: T) -> Option<T> {
    let e0 = trace.points.first()?.energy(which);
    let mut end = None;
    for p in trace.points.iter().filter(|p| p.t >= start) {
        if p.energy(which) < floor * e0 {
            break;
        }
        end = Some(p.t);
    }
    end
}
