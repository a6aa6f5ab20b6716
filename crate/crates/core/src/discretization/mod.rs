//! Uniform grid, finite-difference derivative operators and boundary traces.
//!
//! The unknowns are the interior samples `u_1 .. u_n` at `x_i = i dx`,
//! `dx = L / (n + 1)`. The Dirichlet values `u_0 = u_{n+1} = 0` are implicit.
//! Stencils that reach past the boundary use ghost values eliminated in terms
//! of interior samples:
//!
//! * left end (`u = u_x = 0`): the ghosts are read off the quadratic–cubic
//!   polynomial `c2 s^2 + c3 s^3` through `u_1, u_2`,
//!   giving `u_{-1} = 3 u_1 - u_2 / 2` and `u_{-2} = 16 u_1 - 3 u_2`;
//! * right end (`u = u_x = u_xx = 0`): the cubic–quartic polynomial
//!   `c3 s^3 + c4 s^4` through `u_n, u_{n-1}` gives
//!   `u_{n+2} = -3 u_n + u_{n-1} / 4` and `u_{n+3} = -32 u_n + 3 u_{n-1}`.
//!
//! The same left polynomial yields the trace `u_xx(0) = (8 u_1 - u_2) / (2 dx^2)`.

mod banded;

pub use banded::{BandedLu, BandedOperator};

use crate::error::{config, Error, Result};
use crate::scalar::Scalar;

/// Smallest admissible interior point count (the widest stencil has 7 points).
pub const MIN_POINTS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialGrid<T> {
    length: T,
    n: usize,
    dx: T,
    points: Vec<T>,
}

impl<T: Scalar> SpatialGrid<T> {
    pub fn length(&self) -> T {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Samples `f` at the interior points.
    pub fn sample(&self, f: impl Fn(T) -> T) -> Vec<T> {
        self.points.iter().map(|&x| f(x)).collect()
    }

    /// Trapezoid rule over `[0, L]` for a function vanishing at both ends.
    pub fn integrate(&self, values: &[T]) -> T {
        values.iter().copied().sum::<T>() * self.dx
    }

    /// `∫ w u^2 dx` with the same quadrature as [`Self::integrate`].
    pub fn weighted_sq(&self, weight: &[T], u: &[T]) -> T {
        weight.iter().zip(u).map(|(&w, &v)| w * v * v).sum::<T>() * self.dx
    }

    pub fn l2_sq(&self, u: &[T]) -> T {
        u.iter().map(|&v| v * v).sum::<T>() * self.dx
    }
}

pub fn build_grid<T: Scalar>(length: T, n: usize) -> Result<SpatialGrid<T>> {
    if n < MIN_POINTS {
        return Err(config(format!(
            "grid needs at least {MIN_POINTS} interior points, got {n}"
        )));
    }
    if !(length > T::zero()) || !length.is_finite() {
        return Err(config(format!("domain length must be positive, got {length}")));
    }
    let dx = length / T::from_usize_lossy(n + 1);
    let points = (1..=n).map(|i| T::from_usize_lossy(i) * dx).collect();
    Ok(SpatialGrid {
        length,
        n,
        dx,
        points,
    })
}

/// Index into the extended sample array: `-2 ..= n + 3`.
fn ghost_weights<T: Scalar>(n: usize, j: isize) -> [(usize, T); 2] {
    let n_i = n as isize;
    let (a, b) = match j {
        -1 => ((0, 3.0), (1, -0.5)),
        -2 => ((0, 16.0), (1, -3.0)),
        _ if j == n_i + 2 => ((n - 1, -3.0), (n - 2, 0.25)),
        _ if j == n_i + 3 => ((n - 1, -32.0), (n - 2, 3.0)),
        _ => unreachable!("no ghost closure for index {j}"),
    };
    [(a.0, T::lit(a.1)), (b.0, T::lit(b.1))]
}

/// Assembles a centred stencil (coefficients for offsets `-k ..= k`, already
/// divided by the grid power) with ghost elimination at both ends.
fn assemble<T: Scalar>(grid: &SpatialGrid<T>, stencil: &[T], label: &str) -> BandedOperator<T> {
    let n = grid.n;
    let k = stencil.len() / 2;
    let mut op = BandedOperator::zeros(n, k, label);
    for row in 0..n {
        // 1-based position of this row in the extended array.
        let i = row as isize + 1;
        for (s, &c) in stencil.iter().enumerate() {
            if c == T::zero() {
                continue;
            }
            let j = i + s as isize - k as isize;
            if j == 0 || j == n as isize + 1 {
                continue;
            }
            if (1..=n as isize).contains(&j) {
                op.add_at(row, (j - 1) as usize, c);
            } else {
                for (col, w) in ghost_weights::<T>(n, j) {
                    op.add_at(row, col, c * w);
                }
            }
        }
    }
    op
}

/// Second-order centred operator for `∂x`, `∂x³` or `∂x⁵`.
pub fn derivative_operator<T: Scalar>(grid: &SpatialGrid<T>, order: u32) -> Result<BandedOperator<T>> {
    let dx = grid.dx;
    let half = T::lit(0.5);
    let (raw, scale, label): (&[f64], T, &str) = match order {
        1 => (&[-1.0, 0.0, 1.0], half / dx, "d1"),
        3 => (&[-1.0, 2.0, 0.0, -2.0, 1.0], half / dx.powi(3), "d3"),
        5 => (&[-1.0, 4.0, -5.0, 0.0, 5.0, -4.0, 1.0], half / dx.powi(5), "d5"),
        other => {
            return Err(config(format!(
                "unsupported derivative order {other} (expected 1, 3 or 5)"
            )))
        }
    };
    let stencil: Vec<T> = raw.iter().map(|&c| T::lit(c) * scale).collect();
    Ok(assemble(grid, &stencil, label))
}

/// Three-point `∂x²` with the Dirichlet end values; used for Sobolev norms.
pub fn second_difference<T: Scalar>(grid: &SpatialGrid<T>) -> BandedOperator<T> {
    let s = T::one() / (grid.dx * grid.dx);
    let stencil = [s, T::lit(-2.0) * s, s];
    assemble(grid, &stencil, "d2")
}

/// The three operators of the linear dispersive part, assembled once.
#[derive(Clone, Debug)]
pub struct DerivativeSet<T> {
    pub d1: BandedOperator<T>,
    pub d3: BandedOperator<T>,
    pub d5: BandedOperator<T>,
}

impl<T: Scalar> DerivativeSet<T> {
    pub fn new(grid: &SpatialGrid<T>) -> Result<Self> {
        Ok(Self {
            d1: derivative_operator(grid, 1)?,
            d3: derivative_operator(grid, 3)?,
            d5: derivative_operator(grid, 5)?,
        })
    }

    /// `∂x + ∂x³ - ∂x⁵`, the dispersive part moved to the left-hand side.
    pub fn dispersion(&self) -> Result<BandedOperator<T>> {
        BandedOperator::combine(
            &[(T::one(), &self.d1), (T::one(), &self.d3), (-T::one(), &self.d5)],
            "d1+d3-d5",
        )
    }
}

/// Solution samples at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    pub values: Vec<T>,
    pub time: T,
}

impl<T: Scalar> State<T> {
    pub fn new(values: Vec<T>, time: T) -> Self {
        Self { values, time }
    }

    pub fn zeros(n: usize, time: T) -> Self {
        Self::new(vec![T::zero(); n], time)
    }

    /// Fails with a blow-up diagnostic on NaN/Inf entries.
    pub fn ensure_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::BlowUp {
                t: self.time.to_f64_lossy(),
                max_abs: f64::INFINITY,
            })
        }
    }
}

/// One-sided estimate of `u_xx(0)` consistent with the left ghost closure.
pub fn boundary_trace_uxx0<T: Scalar>(u: &[T], grid: &SpatialGrid<T>) -> T {
    (T::lit(8.0) * u[0] - u[1]) / (T::lit(2.0) * grid.dx * grid.dx)
}
