//! Dense determinant and Pfaffian kernels.
//!
//! Both kernels work on a private copy of the input and pivot on the entry of
//! largest modulus. Moment matrices built from monomials are Hankel-like and
//! badly conditioned, so the elimination order matters more than the flop
//! count at the sizes used here (at most a few hundred rows).

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Relative tolerance for the skew-symmetry check.
pub const SKEW_TOLERANCE: f64 = 1e-12;

/// Field scalars the kernels accept.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

impl Scalar for TwoFloat {
    fn zero() -> Self {
        TwoFloat::from(0.0)
    }
    fn one() -> Self {
        TwoFloat::from(1.0)
    }
    fn modulus(self) -> f64 {
        f64::from(self).abs()
    }
}

/// Arithmetic used for the elimination phase of real kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    #[default]
    Double,
    /// Double-double elimination; entries are still supplied as `f64`.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Skew,
}

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
    symmetry: Symmetry,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
            symmetry: Symmetry::General,
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self {
            n,
            data,
            symmetry: Symmetry::General,
        }
    }

    /// Builds a skew matrix from its strict upper triangle; `f` is only called
    /// with `i < j`.
    pub fn skew_from_upper(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = -v;
            }
        }
        m.symmetry = Symmetry::Skew;
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: row.len(),
                    dim: n,
                });
            }
            data.extend(row);
        }
        Ok(Self {
            n,
            data,
            symmetry: Symmetry::General,
        })
    }

    /// Tags the matrix as skew after checking the invariant.
    pub fn into_skew(mut self) -> Result<Self> {
        self.check_skew()?;
        self.symmetry = Symmetry::Skew;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn max_modulus(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SquareMatrix<U> {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
            symmetry: self.symmetry,
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i)).with_symmetry(self.symmetry)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.n, |i, j| {
            (0..self.n).fold(T::zero(), |acc, k| acc + self.get(i, k) * other.get(k, j))
        })
    }

    /// `B·A·Bᵀ`, keeping the skew tag when `self` carries it.
    pub fn congruence(&self, b: &Self) -> Self {
        let out = b.matmul(self).matmul(&b.transpose());
        match self.symmetry {
            Symmetry::Skew => {
                let n = out.n;
                Self::skew_from_upper(n, |i, j| (out.get(i, j) - out.get(j, i)) * half::<T>())
            }
            Symmetry::General => out,
        }
    }

    fn with_symmetry(mut self, s: Symmetry) -> Self {
        self.symmetry = s;
        self
    }

    pub fn check_skew(&self) -> Result<()> {
        let n = self.n;
        let tol = SKEW_TOLERANCE * self.max_modulus();
        for i in 0..n {
            for j in i..n {
                let defect = (self.get(i, j) + self.get(j, i)).modulus();
                if defect > tol {
                    return Err(Error::NotSkew {
                        row: i,
                        col: j,
                        defect,
                    });
                }
            }
        }
        Ok(())
    }

    /// Determinant by LU with partial pivoting. Singular input returns zero.
    pub fn det(&self) -> T {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = T::one();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].modulus();
            for i in k + 1..n {
                let m = a[i * n + k].modulus();
                if m > best {
                    best = m;
                    piv = i;
                }
            }
            if best == 0.0 {
                return T::zero();
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            let p = a[k * n + k];
            det = det * p;
            for i in k + 1..n {
                let factor = a[i * n + k] / p;
                if factor.modulus() == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    let akj = a[k * n + j];
                    a[i * n + j] = a[i * n + j] - factor * akj;
                }
            }
        }
        det
    }

    /// Pfaffian by skew Schur-complement elimination with full pivoting.
    ///
    /// Each step brings the largest remaining entry to position `(k, k+1)`
    /// with a symmetric permutation (one sign flip per transposition) and then
    /// replaces the trailing block by its Schur complement, so that
    /// `pf(A) = A[k][k+1] · pf(S)`.
    pub fn pfaffian(&self) -> Result<T> {
        let n = self.n;
        if n % 2 == 1 {
            return Err(Error::OddDimension(n));
        }
        self.check_skew()?;
        let mut a = self.data.clone();
        let mut pf = T::one();
        let mut k = 0;
        while k < n {
            let (mut pi, mut pj, mut best) = (k, k + 1, -1.0);
            for i in k..n {
                for j in i + 1..n {
                    let m = a[i * n + j].modulus();
                    if m > best {
                        best = m;
                        pi = i;
                        pj = j;
                    }
                }
            }
            if best == 0.0 {
                return Ok(T::zero());
            }
            if pi != k {
                swap_index(&mut a, n, k, pi);
                pf = -pf;
                if pj == k {
                    pj = pi;
                }
            }
            if pj != k + 1 {
                swap_index(&mut a, n, k + 1, pj);
                pf = -pf;
            }
            let piv = a[k * n + k + 1];
            pf = pf * piv;
            for i in k + 2..n {
                let aik = a[i * n + k];
                let aik1 = a[i * n + k + 1];
                for j in k + 2..n {
                    let update = (aik * a[(k + 1) * n + j] - aik1 * a[k * n + j]) / piv;
                    a[i * n + j] = a[i * n + j] + update;
                }
            }
            k += 2;
        }
        Ok(pf)
    }

    /// Inverse by Gauss-Jordan with partial pivoting; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() }).data;
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].modulus();
            for i in k + 1..n {
                let m = a[i * n + k].modulus();
                if m > best {
                    best = m;
                    piv = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                    inv.swap(k * n + j, piv * n + j);
                }
            }
            let p = a[k * n + k];
            for j in 0..n {
                a[k * n + j] = a[k * n + j] / p;
                inv[k * n + j] = inv[k * n + j] / p;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[i * n + k];
                if f.modulus() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[i * n + j] = a[i * n + j] - f * a[k * n + j];
                    inv[i * n + j] = inv[i * n + j] - f * inv[k * n + j];
                }
            }
        }
        Some(Self {
            n,
            data: inv,
            symmetry: Symmetry::General,
        })
    }
}

fn half<T: Scalar>() -> T {
    T::one() / (T::one() + T::one())
}

/// Symmetric row and column transposition of indices `p` and `q`.
fn swap_index<T: Copy>(a: &mut [T], n: usize, p: usize, q: usize) {
    if p == q {
        return;
    }
    for j in 0..n {
        a.swap(p * n + j, q * n + j);
    }
    for i in 0..n {
        a.swap(i * n + p, i * n + q);
    }
}

impl SquareMatrix<f64> {
    pub fn det_with(&self, precision: Precision) -> f64 {
        match precision {
            Precision::Double => self.det(),
            Precision::Extended => f64::from(self.map(TwoFloat::from).det()),
        }
    }

    pub fn pfaffian_with(&self, precision: Precision) -> Result<f64> {
        match precision {
            Precision::Double => self.pfaffian(),
            Precision::Extended => {
                self.check_skew()?;
                let ext = self.map(TwoFloat::from);
                ext.pfaffian().map(f64::from)
            }
        }
    }
}

/// First-order error propagation through `det` (or `pf`, with `half = true`):
/// `|δv| ≤ |v| · Σ |(A⁻¹)_{ji}| · err_{ij}`.
pub fn propagate_error<T: Scalar>(m: &SquareMatrix<T>, value: T, entry_err: &[f64], half: bool) -> f64 {
    let n = m.dim();
    if n == 0 {
        return 0.0;
    }
    let Some(inv) = m.inverse() else {
        return f64::INFINITY;
    };
    // Elimination is backward stable: it solves a problem perturbed by about
    // n·ε·|a_ij| per entry, on top of the supplied entry errors.
    let rounding = n as f64 * f64::EPSILON;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let e = entry_err[i * n + j] + rounding * m.get(i, j).modulus();
            s += inv.get(j, i).modulus() * e;
        }
    }
    let scale = if half { 0.5 } else { 1.0 };
    scale * value.modulus() * s
}
