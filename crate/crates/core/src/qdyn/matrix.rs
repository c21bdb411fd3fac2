//! Fixed-size complex matrices for one and two qubits.
//!
//! Two-qubit operators use the ordering system ⊗ environment: basis index
//! `2·s + e`, where `s` is the system bit and `e` the environment bit.
//! [`tensor`] is the only place that builds joint operators from factors.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{c, cr, Real, C};

/// Supported matrix sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Dim {
    /// One qubit.
    Two,
    /// Two qubits (system ⊗ environment).
    Four,
}

impl Dim {
    #[inline]
    pub const fn size(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Four => 4,
        }
    }

    pub fn from_size(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dim::Two),
            4 => Ok(Dim::Four),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }
}

/// Dense complex matrix of dimension 2 or 4, stored inline and row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    dim: Dim,
    data: [C<T>; 16],
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(dim: Dim) -> Self {
        Self {
            dim,
            data: [cr(T::zero()); 16],
        }
    }

    pub fn identity(dim: Dim) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim.size() {
            m[(i, i)] = cr(T::one());
        }
        m
    }

    pub fn from_fn(dim: Dim, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(dim);
        let n = dim.size();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries; the length must be 4 or 16.
    pub fn from_row_major(entries: &[C<T>]) -> Result<Self> {
        let dim = match entries.len() {
            4 => Dim::Two,
            16 => Dim::Four,
            other => {
                return Err(Error::UnsupportedDimension(
                    (other as f64).sqrt().round() as usize,
                ))
            }
        };
        let n = dim.size();
        Ok(Self::from_fn(dim, |i, j| entries[i * n + j]))
    }

    pub fn diagonal(entries: &[C<T>]) -> Result<Self> {
        let dim = Dim::from_size(entries.len())?;
        Ok(Self::from_fn(dim, |i, j| {
            if i == j {
                entries[i]
            } else {
                cr(T::zero())
            }
        }))
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.dim.size()
    }

    /// Row-major view of the active entries.
    pub fn as_slice(&self) -> &[C<T>] {
        let n = self.size();
        &self.data[..n * n]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C<T> {
        (0..self.size()).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut m = *self;
        for z in m.data.iter_mut() {
            *z = *z * s;
        }
        m
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dim(rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    fn mul_unchecked(&self, rhs: &Self) -> Self {
        let n = self.size();
        let mut out = Self::zeros(self.dim);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.size(),
                found: other.size(),
            })
        }
    }

    /// `max |a_ij - b_ij|`; infinite when the dimensions differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (*a - *b).norm().as_f64())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `max |(U†U - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint()
            .mul_unchecked(self)
            .max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..n).all(|j| i == j || self[(i, j)].norm().as_f64() <= tol))
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        linalg::hermitian_eigenvalues(self.as_slice(), self.size())
    }

    /// Hilbert–Schmidt inner product `Tr[A† B]`.
    pub fn hs_inner(&self, other: &Self) -> Result<C<T>> {
        self.check_same_dim(other)?;
        Ok(self
            .as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a.conj() * *b)
            .sum())
    }

    /// `U ρ U†` without any validation.
    pub(crate) fn conjugate_by(&self, u: &Self) -> Self {
        u.mul_unchecked(self).mul_unchecked(&u.adjoint())
    }

    /// Lossless conversion between scalar types, via `f64`.
    pub fn cast<U: Real>(&self) -> ComplexMatrix<U> {
        ComplexMatrix::<U>::from_fn(self.dim, |i, j| {
            let z = self[(i, j)];
            c(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()))
        })
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        let n = self.size();
        assert!(i < n && j < n, "index ({i}, {j}) out of range for {n}x{n}");
        &self.data[i * n + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        let n = self.size();
        assert!(i < n && j < n, "index ({i}, {j}) out of range for {n}x{n}");
        &mut self.data[i * n + j]
    }
}

/// Panics on dimension mismatch; use [`ComplexMatrix::try_mul`] to get an error instead.
impl<T: Real> Mul for ComplexMatrix<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        self.try_mul(&rhs).expect("matrix product dimensions")
    }
}

impl<T: Real> Add for ComplexMatrix<T> {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimensions");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a += *b;
        }
        self
    }
}

impl<T: Real> Sub for ComplexMatrix<T> {
    type Output = Self;

    fn sub(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimensions");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a -= *b;
        }
        self
    }
}

impl<T: Real> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.size();
        writeln!(f, "ComplexMatrix {n}x{n} [")?;
        for i in 0..n {
            write!(f, "  ")?;
            for j in 0..n {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Single-qubit operator labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

pub fn pauli<T: Real>(which: Pauli) -> ComplexMatrix<T> {
    let (o, z) = (T::one(), T::zero());
    let entries = match which {
        Pauli::I => [cr(o), cr(z), cr(z), cr(o)],
        Pauli::X => [cr(z), cr(o), cr(o), cr(z)],
        Pauli::Y => [cr(z), c(z, -o), c(z, o), cr(z)],
        Pauli::Z => [cr(o), cr(z), cr(z), cr(-o)],
    };
    ComplexMatrix::from_row_major(&entries).expect("2x2")
}

/// Kronecker product `system ⊗ environment`: entry `(2i+k, 2j+l) = a(i,j)·b(k,l)`.
pub fn tensor<T: Real>(system: &ComplexMatrix<T>, environment: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    for m in [system, environment] {
        if m.dim() != Dim::Two {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: m.size(),
            });
        }
    }
    Ok(ComplexMatrix::from_fn(Dim::Four, |r, col| {
        system[(r / 2, col / 2)] * environment[(r % 2, col % 2)]
    }))
}

/// Which qubit of the register an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Qubit {
    System,
    Environment,
}

impl<T: Real> ComplexMatrix<T> {
    /// In-place `ρ ← (R_q) ρ (R_q)†` for a 2×2 `r` acting on one qubit of a
    /// 4×4 operator, without forming the 4×4 Kronecker product.
    pub(crate) fn conjugate_local(&mut self, qubit: Qubit, r: &ComplexMatrix<T>) {
        debug_assert_eq!(self.dim, Dim::Four);
        debug_assert_eq!(r.dim, Dim::Two);
        let (r00, r01, r10, r11) = (r.data[0], r.data[1], r.data[2], r.data[3]);
        // Index pairs that differ only in the addressed bit.
        let pairs: [(usize, usize); 2] = match qubit {
            Qubit::System => [(0, 2), (1, 3)],
            Qubit::Environment => [(0, 1), (2, 3)],
        };
        let d = &mut self.data;
        // Left multiply: rows.
        for &(a, b) in &pairs {
            for col in 0..4 {
                let x = d[a * 4 + col];
                let y = d[b * 4 + col];
                d[a * 4 + col] = r00 * x + r01 * y;
                d[b * 4 + col] = r10 * x + r11 * y;
            }
        }
        // Right multiply by R†: columns.
        let (h00, h01, h10, h11) = (r00.conj(), r10.conj(), r01.conj(), r11.conj());
        for &(a, b) in &pairs {
            for row in 0..4 {
                let x = d[row * 4 + a];
                let y = d[row * 4 + b];
                d[row * 4 + a] = x * h00 + y * h10;
                d[row * 4 + b] = x * h01 + y * h11;
            }
        }
    }

    /// In-place `M ← (R_q) M` for a 2×2 `r` on one qubit of a 4×4 operator.
    pub(crate) fn left_mul_local(&mut self, qubit: Qubit, r: &ComplexMatrix<T>) {
        debug_assert_eq!(self.dim, Dim::Four);
        let (r00, r01, r10, r11) = (r.data[0], r.data[1], r.data[2], r.data[3]);
        let pairs: [(usize, usize); 2] = match qubit {
            Qubit::System => [(0, 2), (1, 3)],
            Qubit::Environment => [(0, 1), (2, 3)],
        };
        let d = &mut self.data;
        for &(a, b) in &pairs {
            for col in 0..4 {
                let x = d[a * 4 + col];
                let y = d[b * 4 + col];
                d[a * 4 + col] = r00 * x + r01 * y;
                d[b * 4 + col] = r10 * x + r11 * y;
            }
        }
    }

    /// In-place `M ← diag(p) M`.
    pub(crate) fn left_mul_diagonal(&mut self, p: &[C<T>]) {
        let n = self.size();
        for i in 0..n {
            for j in 0..n {
                self.data[i * n + j] = p[i] * self.data[i * n + j];
            }
        }
    }

    /// In-place `ρ ← U ρ U†` for diagonal `U = diag(p)`.
    pub(crate) fn conjugate_diagonal(&mut self, p: &[C<T>]) {
        let n = self.size();
        debug_assert_eq!(p.len(), n);
        for i in 0..n {
            for j in 0..n {
                self.data[i * n + j] = p[i] * self.data[i * n + j] * p[j].conj();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = ComplexMatrix<f64>;

    #[test]
    fn pauli_examples() {
        let z: M = pauli(Pauli::Z);
        assert!(z.approx_eq(&M::diagonal(&[cr(1.0), cr(-1.0)]).unwrap(), 0.0));
        let x: M = pauli(Pauli::X);
        assert!((x * x).approx_eq(&M::identity(Dim::Two), 0.0));
        assert_eq!(pauli::<f64>(Pauli::Y).trace(), cr(0.0));
        for p in Pauli::ALL {
            let m: M = pauli(p);
            assert_eq!(m.hermitian_defect(), 0.0);
            assert_eq!(m.unitarity_defect(), 0.0);
        }
    }

    #[test]
    fn tensor_convention() {
        let i: M = pauli(Pauli::I);
        let z: M = pauli(Pauli::Z);
        assert!(tensor(&i, &i).unwrap().approx_eq(&M::identity(Dim::Four), 0.0));
        let zi = tensor(&z, &i).unwrap();
        let expect = M::diagonal(&[cr(1.0), cr(1.0), cr(-1.0), cr(-1.0)]).unwrap();
        assert!(zi.approx_eq(&expect, 0.0));
        let a: M = pauli(Pauli::Y);
        let b = M::from_row_major(&[c(1.0, 2.0), c(3.0, 0.0), c(0.0, -1.0), c(0.5, 0.5)]).unwrap();
        let t = tensor(&a, &b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert_eq!(t[(2 * i + k, 2 * j + l)], a[(i, j)] * b[(k, l)]);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_rejects_joint_factor() {
        let i4 = M::identity(Dim::Four);
        let i2 = M::identity(Dim::Two);
        assert!(matches!(
            tensor(&i4, &i2),
            Err(Error::DimensionMismatch { expected: 2, found: 4 })
        ));
        assert!(i4.try_mul(&i2).is_err());
        assert!(matches!(Dim::from_size(3), Err(Error::UnsupportedDimension(3))));
        assert!(M::from_row_major(&[cr(1.0); 9]).is_err());
    }

    #[test]
    fn local_conjugation_matches_kronecker() {
        let r = M::from_row_major(&[c(0.6, 0.0), c(0.0, -0.8), c(0.0, -0.8), c(0.6, 0.0)]).unwrap();
        let rho = M::from_fn(Dim::Four, |i, j| c((i * 4 + j) as f64 * 0.1, i as f64 - j as f64));
        for q in [Qubit::System, Qubit::Environment] {
            let full = match q {
                Qubit::System => tensor(&r, &M::identity(Dim::Two)).unwrap(),
                Qubit::Environment => tensor(&M::identity(Dim::Two), &r).unwrap(),
            };
            let mut fast = rho;
            fast.conjugate_local(q, &r);
            assert!(fast.approx_eq(&rho.conjugate_by(&full), 1e-14));
        }
    }
}
