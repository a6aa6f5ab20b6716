//! Band-stored matrices and a pivoted banded LU factorisation.

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Square matrix with equal lower and upper half-bandwidth, stored row by row.
///
/// Entry `(i, j)` with `|i - j| <= half_bandwidth` lives at
/// `band[i * (2k + 1) + (j + k - i)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedOperator<T> {
    n: usize,
    half_bandwidth: usize,
    band: Vec<T>,
    label: String,
}

impl<T: Scalar> BandedOperator<T> {
    pub fn zeros(n: usize, half_bandwidth: usize, label: impl Into<String>) -> Self {
        Self {
            n,
            half_bandwidth,
            band: vec![T::zero(); n * (2 * half_bandwidth + 1)],
            label: label.into(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n], "I")
    }

    pub fn from_diagonal(diag: &[T], label: impl Into<String>) -> Self {
        let mut op = Self::zeros(diag.len(), 0, label);
        op.band.copy_from_slice(diag);
        op
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let k = self.half_bandwidth;
        if i >= self.n || j >= self.n || i + k < j || j + k < i {
            return None;
        }
        Some(i * (2 * k + 1) + (j + k - i))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |s| self.band[s])
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// Panics if the entry lies outside the band.
    pub fn add_at(&mut self, i: usize, j: usize, v: T) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band of '{}'", self.label));
        self.band[s] += v;
    }

    /// Column range touched by row `i`.
    fn row_span(&self, i: usize) -> std::ops::Range<usize> {
        let k = self.half_bandwidth;
        i.saturating_sub(k)..(i + k + 1).min(self.n)
    }

    pub fn apply_into(&self, u: &[T], out: &mut [T]) -> Result<()> {
        check_len(self.n, u.len())?;
        check_len(self.n, out.len())?;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row_span(i).map(|j| self.get(i, j) * u[j]).sum();
        }
        Ok(())
    }

    pub fn apply(&self, u: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.n];
        self.apply_into(u, &mut out)?;
        Ok(out)
    }

    /// `sum_k coeff_k * op_k`; all operators must share the same size.
    pub fn combine(terms: &[(T, &BandedOperator<T>)], label: impl Into<String>) -> Result<Self> {
        let n = terms
            .first()
            .map(|(_, op)| op.n)
            .ok_or_else(|| Error::Config("empty operator combination".into()))?;
        let k = terms.iter().map(|(_, op)| op.half_bandwidth).max().unwrap_or(0);
        let mut out = Self::zeros(n, k, label);
        for (c, op) in terms {
            check_len(n, op.n)?;
            for i in 0..n {
                for j in op.row_span(i) {
                    out.add_at(i, j, *c * op.get(i, j));
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn factorize(&self) -> Result<BandedLu<T>> {
        BandedLu::new(self)
    }
}

/// LU factors of a banded matrix with row pivoting.
///
/// Pivoting widens the upper band of `U` to at most `2k`; multipliers are kept
/// in place and applied interleaved with the row swaps during the solve.
#[derive(Clone, Debug)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    width: usize,
    ab: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn new(a: &BandedOperator<T>) -> Result<Self> {
        let n = a.n;
        let kl = a.half_bandwidth;
        let ku = a.half_bandwidth;
        // Row i stores columns i - kl ..= i + kl + ku.
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            width,
            ab: vec![T::zero(); n * width],
            pivots: vec![0; n],
        };
        for i in 0..n {
            for j in a.row_span(i) {
                let s = lu.idx(i, j);
                lu.ab[s] = a.get(i, j);
            }
        }
        let reach = kl + ku;
        for c in 0..n {
            let last_row = (c + kl).min(n - 1);
            let last_col = (c + reach).min(n - 1);
            let mut p = c;
            let mut best = lu.ab[lu.idx(c, c)].abs();
            for r in c + 1..=last_row {
                let v = lu.ab[lu.idx(r, c)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > T::zero()) || !best.is_finite() {
                return Err(Error::Numerical(format!(
                    "banded LU: zero or non-finite pivot in column {c}"
                )));
            }
            lu.pivots[c] = p;
            if p != c {
                for j in c..=last_col {
                    let (a1, a2) = (lu.idx(c, j), lu.idx(p, j));
                    lu.ab.swap(a1, a2);
                }
            }
            let pivot = lu.ab[lu.idx(c, c)];
            for r in c + 1..=last_row {
                let rc = lu.idx(r, c);
                let m = lu.ab[rc] / pivot;
                lu.ab[rc] = m;
                if m == T::zero() {
                    continue;
                }
                for j in c + 1..=last_col {
                    let (rj, cj) = (lu.idx(r, j), lu.idx(c, j));
                    let upd = m * lu.ab[cj];
                    lu.ab[rj] -= upd;
                }
            }
        }
        Ok(lu)
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j + self.kl - i < self.width);
        i * self.width + (j + self.kl - i)
    }

    pub fn solve_in_place(&self, b: &mut [T]) -> Result<()> {
        check_len(self.n, b.len())?;
        let n = self.n;
        for c in 0..n {
            b.swap(c, self.pivots[c]);
            let bc = b[c];
            for r in c + 1..=(c + self.kl).min(n - 1) {
                b[r] -= self.ab[self.idx(r, c)] * bc;
            }
        }
        let reach = self.width - 1 - self.kl;
        for c in (0..n).rev() {
            let mut s = b[c];
            for j in c + 1..=(c + reach).min(n - 1) {
                s -= self.ab[self.idx(c, j)] * b[j];
            }
            b[c] = s / self.ab[self.idx(c, c)];
        }
        Ok(())
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}
