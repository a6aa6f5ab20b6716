//! Method-of-steps storage of `u(·, t − ρh)`, `ρ ∈ [0, 1]`.

use crate::discretization::{SpatialGrid, State};
use crate::error::{check_len, config, Error, Result};
use crate::scalar::Scalar;

/// Weight `K(ρ)` in `∫∫ w(x) u²(x, t − ρh) K(ρ) dρ dx`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    Uniform,
    OneMinusRho,
    Rho,
}

impl Kernel {
    fn eval<T: Scalar>(self, rho: T) -> T {
        match self {
            Kernel::Uniform => T::one(),
            Kernel::OneMinusRho => T::one() - rho,
            Kernel::Rho => rho,
        }
    }
}

/// Ring buffer of the `m + 1` states at `t, t − dt, …, t − h`.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayHistory<T> {
    slots: Vec<Vec<T>>,
    head: usize,
    dt: T,
    newest_time: T,
    dx: T,
}

impl<T: Scalar> DelayHistory<T> {
    /// Fills slot `k` with `z0(x, −k dt)`, `dt = h / m`.
    pub fn init(z0: impl Fn(T, T) -> T, grid: &SpatialGrid<T>, h: T, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(config("delay history needs at least one step"));
        }
        let dt = h / T::from_usize_lossy(m);
        let slots = (0..=m)
            .map(|k| {
                let t = -T::from_usize_lossy(k) * dt;
                grid.sample(|x| z0(x, t))
            })
            .collect();
        Ok(Self {
            slots,
            head: 0,
            dt,
            newest_time: T::zero(),
            dx: grid.dx(),
        })
    }

    /// History equal to `u0` at every lag.
    pub fn constant(u0: &[T], grid: &SpatialGrid<T>, h: T, m: usize) -> Result<Self> {
        check_len(grid.n(), u0.len())?;
        let mut hist = Self::init(|_, _| T::zero(), grid, h, m)?;
        for s in &mut hist.slots {
            s.copy_from_slice(u0);
        }
        Ok(hist)
    }

    pub fn m(&self) -> usize {
        self.slots.len() - 1
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn newest_time(&self) -> T {
        self.newest_time
    }

    /// Samples at `t − k dt`.
    pub fn lag(&self, k: usize) -> &[T] {
        assert!(k <= self.m(), "lag {k} beyond history depth {}", self.m());
        &self.slots[(self.head + k) % self.slots.len()]
    }

    pub fn current(&self) -> State<T> {
        State::new(self.lag(0).to_vec(), self.newest_time)
    }

    /// The exact stored state at `t − h`.
    pub fn delayed_state(&self) -> State<T> {
        let m = self.m();
        State::new(
            self.lag(m).to_vec(),
            self.newest_time - T::from_usize_lossy(m) * self.dt,
        )
    }

    pub fn push(&mut self, s: State<T>) -> Result<()> {
        check_len(self.slots[0].len(), s.values.len())?;
        let expected = self.newest_time + self.dt;
        if (s.time - expected).abs() > self.dt * T::lit(1e-3) {
            return Err(Error::Sequencing(format!(
                "pushed state at t = {} but the next slot is t = {expected}",
                s.time
            )));
        }
        let len = self.slots.len();
        self.head = (self.head + len - 1) % len;
        self.slots[self.head] = s.values;
        self.newest_time = s.time;
        Ok(())
    }

    /// `∫₀ᴸ∫₀¹ weight(x) u²(x, t − ρh) K(ρ) dρ dx`, trapezoid in both variables.
    pub fn rho_integral(&self, weight: &[T], kernel: Kernel) -> Result<T> {
        check_len(self.slots[0].len(), weight.len())?;
        let m = self.m();
        let mt = T::from_usize_lossy(m);
        let mut total = T::zero();
        for k in 0..=m {
            let rho = T::from_usize_lossy(k) / mt;
            let mut q = kernel.eval(rho);
            if k == 0 || k == m {
                q *= T::lit(0.5);
            }
            if q == T::zero() {
                continue;
            }
            let row: T = self
                .lag(k)
                .iter()
                .zip(weight)
                .map(|(&u, &w)| w * u * u)
                .sum();
            total += q * row;
        }
        Ok(total * self.dx / mt)
    }

    /// Multiplies every stored sample by `c`.
    pub fn scale(&mut self, c: T) {
        for s in &mut self.slots {
            s.iter_mut().for_each(|v| *v *= c);
        }
    }
}
