//! Dense discretization of the delay-augmented generator acting on `(u, z)`,
//! `z(x, ρ) = u(x, t − ρh)`, and its dissipativity and spectrum.
//!
//! The `ρ` direction is discretized here only, by first-order upwinding on
//! `ρ_j = j/m`, `j = 1..m`, with `z_0 = u`. Eigenvalues are computed in `f64`.

use nalgebra::{Complex, DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::{build_grid, DerivativeSet, SpatialGrid};
use crate::error::{config, Error, Result};
use crate::model::{evaluate_profile, SimParams};
use crate::scalar::Scalar;

/// Upper limit on `n · m_ρ` for the dense eigensolve.
pub const MAX_AUGMENTED: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralVariant {
    /// `(−∂x − ∂x³ + ∂x⁵ − μ₁a) u − μ₂ a z(1)`, weight `ξ‖a‖∞`.
    Mu,
    /// `(−∂x − ∂x³ + ∂x⁵ − a − ξb) u − b z(1)`, weight `hξ‖b‖∞`.
    Aux,
}

#[derive(Clone, Debug)]
pub struct AugmentedOperator {
    pub matrix: DMatrix<f64>,
    /// Diagonal of the inner-product matrix.
    pub weight: Vec<f64>,
    pub n: usize,
    pub m_rho: usize,
    pub grid: SpatialGrid<f64>,
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

pub fn assemble<T: Scalar>(
    params: &SimParams<T>,
    variant: SpectralVariant,
    n: usize,
    m_rho: usize,
) -> Result<AugmentedOperator> {
    if m_rho < 4 {
        return Err(config(format!("m_rho must be >= 4, got {m_rho}")));
    }
    if n.saturating_mul(m_rho) > MAX_AUGMENTED {
        return Err(config(format!(
            "n * m_rho = {} exceeds the dense budget {MAX_AUGMENTED}",
            n * m_rho
        )));
    }
    let length = params.length.to_f64_lossy();
    let grid = build_grid(length, n)?;
    let ops = DerivativeSet::new(&grid)?;
    let disp = ops.dispersion()?;
    let tgrid = build_grid(params.length, n)?;
    let a = to_f64(&evaluate_profile(&params.a, &tgrid)?);
    let b = to_f64(&evaluate_profile(&params.b, &tgrid)?);
    let (h, xi) = (params.h.to_f64_lossy(), params.xi.to_f64_lossy());
    let (mu1, mu2) = (params.mu1.to_f64_lossy(), params.mu2.to_f64_lossy());
    let (damping, coupling, zw): (Vec<f64>, Vec<f64>, f64) = match variant {
        SpectralVariant::Mu => (
            a.iter().map(|v| mu1 * v).collect(),
            a.iter().map(|v| mu2 * v).collect(),
            xi * params.a.sup_norm().to_f64_lossy(),
        ),
        SpectralVariant::Aux => (
            a.iter().zip(&b).map(|(x, y)| x + xi * y).collect(),
            b.clone(),
            h * xi * params.b.sup_norm().to_f64_lossy(),
        ),
    };
    // A vanishing coefficient decouples z; a tiny weight keeps the form definite.
    let zw = if zw > 0.0 { zw } else { 1e-8 * xi.max(1.0) };

    let size = n + n * m_rho;
    let mut mat = DMatrix::<f64>::zeros(size, size);
    let k = disp.half_bandwidth();
    for i in 0..n {
        for j in i.saturating_sub(k)..(i + k + 1).min(n) {
            mat[(i, j)] = -disp.get(i, j);
        }
        mat[(i, i)] -= damping[i];
        mat[(i, n + (m_rho - 1) * n + i)] = -coupling[i];
    }
    let drho = 1.0 / m_rho as f64;
    let c = 1.0 / (h * drho);
    for j in 0..m_rho {
        for i in 0..n {
            let row = n + j * n + i;
            let prev = if j == 0 { i } else { n + (j - 1) * n + i };
            mat[(row, row)] = -c;
            mat[(row, prev)] = c;
        }
    }
    let dx = grid.dx();
    let mut weight = vec![dx; n];
    weight.extend(std::iter::repeat_n(zw * dx * drho, n * m_rho));
    Ok(AugmentedOperator {
        matrix: mat,
        weight,
        n,
        m_rho,
        grid,
    })
}

impl AugmentedOperator {
    pub fn size(&self) -> usize {
        self.weight.len()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.size(), v.len())?;
        let x = nalgebra::DVector::from_column_slice(v);
        Ok((&self.matrix * x).as_slice().to_vec())
    }

    pub fn inner(&self, p: &[f64], q: &[f64]) -> f64 {
        self.weight.iter().zip(p).zip(q).map(|((w, a), b)| w * a * b).sum()
    }

    /// `⟨(𝒜 − λ) U, U⟩ / ‖U‖²` in the weighted inner product.
    pub fn rayleigh(&self, v: &[f64], lambda: f64) -> Result<f64> {
        let av = self.apply(v)?;
        let nn = self.inner(v, v);
        Ok((self.inner(&av, v) - lambda * nn) / nn)
    }

    /// Smooth random state: boundary-compatible `u` and a `z` with `z(0) = u`.
    pub fn random_state(&self, rng: &mut impl Rng) -> Vec<f64> {
        let l = self.grid.length();
        let pts = self.grid.points();
        let mut u = vec![0.0; self.n];
        for k in 1..=6 {
            let c: f64 = rng.gen_range(-1.0..1.0);
            for (ui, &x) in u.iter_mut().zip(pts) {
                let s = x / l;
                *ui += c * (k as f64 * std::f64::consts::PI * s).sin() * s * (1.0 - s) * (1.0 - s);
            }
        }
        let mut d = [[0.0; 3]; 4];
        for row in &mut d {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let mut out = u.clone();
        for j in 1..=self.m_rho {
            let rho = j as f64 / self.m_rho as f64;
            for (i, &x) in pts.iter().enumerate() {
                let mut extra = 0.0;
                for (p, row) in d.iter().enumerate() {
                    for (q, &c) in row.iter().enumerate() {
                        extra += c
                            * (p as f64 * std::f64::consts::PI * x / l).cos()
                            * (q as f64 * std::f64::consts::PI * rho).cos();
                    }
                }
                out.push(u[i] * (1.0 - rho) + rho * extra);
            }
        }
        out
    }
}

/// Largest weighted Rayleigh quotient of `𝒜 − λ` over `trials` random states.
pub fn dissipativity_margin(op: &AugmentedOperator, lambda: f64, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(config("at least one trial is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let v = op.random_state(&mut rng);
        worst = worst.max(op.rayleigh(&v, lambda)?);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Sorted by decreasing real part.
    pub eigenvalues: Vec<Complex<f64>>,
}

impl Spectrum {
    pub fn abscissa(&self) -> f64 {
        self.eigenvalues.first().map_or(f64::NEG_INFINITY, |z| z.re)
    }

    pub fn rightmost(&self, k: usize) -> &[Complex<f64>] {
        &self.eigenvalues[..k.min(self.eigenvalues.len())]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im\n");
        for z in &self.eigenvalues {
            out.push_str(&format!("{:.16e},{:.16e}\n", z.re, z.im));
        }
        out
    }
}

pub fn spectrum(op: &AugmentedOperator) -> Result<Spectrum> {
    let size = op.size();
    let schur = Schur::try_new(op.matrix.clone(), f64::EPSILON, 200 * size.max(10))
        .ok_or_else(|| Error::Numerical(format!("eigensolver did not converge (size {size})")))?;
    let mut eigenvalues: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    eigenvalues.sort_by(|p, q| q.re.total_cmp(&p.re).then(q.im.total_cmp(&p.im)));
    Ok(Spectrum { eigenvalues })
}

/// Largest real part together with the three rightmost eigenvalues.
pub fn spectral_abscissa(op: &AugmentedOperator) -> Result<(f64, Vec<Complex<f64>>)> {
    let s = spectrum(op)?;
    Ok((s.abscissa(), s.rightmost(3).to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoefficientProfile;
    use crate::stepper::{linear_operator, Coefficients, VariantTag};

    fn delay_params() -> SimParams<f64> {
        SimParams {
            h: 1.0,
            mu1: 2.0,
            mu2: 1.0,
            xi: 1.5,
            a: CoefficientProfile::indicator(1.0, 0.0, 1.5),
            ..SimParams::new(3.0, 20)
        }
    }

    #[test]
    fn size_limits() {
        let p = delay_params();
        assert!(assemble(&p, SpectralVariant::Mu, 20, 3).is_err());
        assert!(assemble(&p, SpectralVariant::Mu, 101, 50).is_err());
        assert!(assemble(&p, SpectralVariant::Mu, 7, 10).is_err());
        assert!(assemble(&p, SpectralVariant::Mu, 100, 50).is_ok());
    }

    #[test]
    fn zero_in_zero_out_and_positive_weights() {
        let op = assemble(&delay_params(), SpectralVariant::Mu, 12, 5).unwrap();
        assert!(op.apply(&vec![0.0; op.size()]).unwrap().iter().all(|&v| v == 0.0));
        assert!(op.weight.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn decoupled_advection_block_spectrum() {
        // a = b = 0: the z-block is lower bidiagonal with diagonal −m/h, a
        // defective eigenvalue whose computed copies scatter by O(eps^(1/m))
        let p = SimParams { h: 2.0, ..SimParams::new(1.0, 10) };
        let op = assemble(&p, SpectralVariant::Mu, 10, 6).unwrap();
        let s = spectrum(&op).unwrap();
        let count = s
            .eigenvalues
            .iter()
            .filter(|z| (*z - Complex::new(-3.0, 0.0)).norm() < 0.05)
            .count();
        assert_eq!(count, 60);
        assert!(s.eigenvalues.iter().all(|z| z.re <= 1e-9));
    }

    #[test]
    fn u_block_matches_stepper_operator() {
        let p = delay_params();
        let op = assemble(&p, SpectralVariant::Mu, 20, 4).unwrap();
        let grid = p.grid().unwrap();
        let ops = DerivativeSet::new(&grid).unwrap();
        let coeffs = Coefficients::new(&p, VariantTag::Mu, &grid).unwrap();
        let lin = linear_operator(&ops, &coeffs).unwrap();
        let u = grid.sample(|x| x * x * (3.0 - x).powi(3) / 10.0);
        let mut v = u.clone();
        v.extend(vec![0.0; 80]);
        let got = op.apply(&v).unwrap();
        let expect = lin.apply(&u).unwrap();
        for i in 0..20 {
            assert!((got[i] + expect[i]).abs() <= 1e-12 * (1.0 + expect[i].abs()));
        }
    }

    #[test]
    fn margin_is_scale_invariant() {
        let op = assemble(&delay_params(), SpectralVariant::Mu, 16, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = op.random_state(&mut rng);
        let w: Vec<f64> = v.iter().map(|x| -3.7 * x).collect();
        let (q1, q2) = (op.rayleigh(&v, 0.75).unwrap(), op.rayleigh(&w, 0.75).unwrap());
        assert!((q1 - q2).abs() < 1e-12 * q1.abs().max(1.0));
    }

    #[test]
    fn undamped_margin_small() {
        let p = SimParams::new(2.0, 80);
        let op = assemble(&p, SpectralVariant::Mu, 80, 5).unwrap();
        let m = dissipativity_margin(&op, 0.0, 100, 42).unwrap();
        assert!(m <= 5.0 * op.grid.dx(), "{m}");
    }

    #[test]
    fn full_damping_shifts_spectrum() {
        let p = SimParams {
            mu1: 1.0,
            a: CoefficientProfile::constant(1.0),
            ..SimParams::new(2.0, 30)
        };
        let op = assemble(&p, SpectralVariant::Mu, 30, 4).unwrap();
        let (abscissa, top) = spectral_abscissa(&op).unwrap();
        assert!(abscissa <= -1.0 + 1e-9, "{abscissa}");
        assert_eq!(top.len(), 3);
    }

    #[test]
    fn delayed_operator_is_stable() {
        let p = delay_params();
        let lambda = 1.5 / 2.0;
        let op = assemble(&p, SpectralVariant::Mu, 20, 10).unwrap();
        let (abscissa, _) = spectral_abscissa(&op).unwrap();
        assert!(abscissa < 0.0);
        assert!(abscissa <= lambda);
    }
}
