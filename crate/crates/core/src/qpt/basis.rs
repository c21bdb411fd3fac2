use std::fmt::Write as _;

use serde::ser::{Serialize, Serializer};

use crate::error::Result;
use crate::qdyn::{pauli, ComplexMatrix, DensityMatrix, Pauli, Register};
use crate::scalar::{c, Real, C};

pub const LABELS: [&str; 4] = ["E", "X", "Y", "Z"];

/// Operator basis `{I, X, -iY, Z}` labelled `E, X, Y, Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBasis<T: Real> {
    elements: [ComplexMatrix<T>; 4],
}

impl<T: Real> OperatorBasis<T> {
    pub fn standard() -> Self {
        let minus_i_y = pauli::<T>(Pauli::Y).scale(c(T::zero(), -T::one()));
        Self {
            elements: [pauli(Pauli::I), pauli(Pauli::X), minus_i_y, pauli(Pauli::Z)],
        }
    }

    pub fn elements(&self) -> &[ComplexMatrix<T>; 4] {
        &self.elements
    }

    pub fn labels(&self) -> [&'static str; 4] {
        LABELS
    }

    /// `Σ_mn χ_mn E_m ρ E_n†`.
    pub fn apply_chi(&self, chi: &ChiMatrix<T>, rho: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let mut out = ComplexMatrix::zeros(rho.dim());
        for m in 0..4 {
            let left = self.elements[m] * *rho;
            for n in 0..4 {
                let w = chi.get(m, n);
                if w != C::new(T::zero(), T::zero()) {
                    out = out + (left * self.elements[n].adjoint()).scale(w);
                }
            }
        }
        out
    }
}

impl<T: Real> Default for OperatorBasis<T> {
    fn default() -> Self {
        Self::standard()
    }
}

/// Process matrix in the `{E, X, Y, Z}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiMatrix<T: Real> {
    entries: [C<T>; 16],
}

impl<T: Real> ChiMatrix<T> {
    pub fn from_entries(entries: [C<T>; 16]) -> Self {
        Self { entries }
    }

    pub fn diagonal(d: [T; 4]) -> Self {
        let mut entries = [C::new(T::zero(), T::zero()); 16];
        for k in 0..4 {
            entries[5 * k] = C::new(d[k], T::zero());
        }
        Self { entries }
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> C<T> {
        self.entries[4 * m + n]
    }

    pub fn entries(&self) -> &[C<T>; 16] {
        &self.entries
    }

    pub fn zz(&self) -> C<T> {
        self.get(3, 3)
    }

    pub fn magnitudes(&self) -> [T; 16] {
        self.entries.map(|z| z.norm())
    }

    pub fn as_matrix(&self) -> ComplexMatrix<T> {
        ComplexMatrix::from_row_major(&self.entries).expect("4x4")
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (*a - *b).norm().as_f64())
            .fold(0.0, f64::max)
    }

    /// Convex combination `w·self + (1 - w)·other`.
    pub fn mix(&self, other: &Self, w: T) -> Self {
        let mut entries = self.entries;
        for (e, o) in entries.iter_mut().zip(&other.entries) {
            *e = *e * w + *o * (T::one() - w);
        }
        Self { entries }
    }

    /// `|χ_mn|` as a labelled whitespace-aligned table.
    pub fn magnitude_table(&self) -> String {
        let mut out = String::from("     ");
        for l in LABELS {
            let _ = write!(out, " {l:>22}");
        }
        out.push('\n');
        for m in 0..4 {
            let _ = write!(out, "{:<5}", LABELS[m]);
            for n in 0..4 {
                let _ = write!(out, " {:>22.16e}", self.get(m, n).norm().as_f64());
            }
            out.push('\n');
        }
        out
    }
}

#[derive(serde::Serialize)]
struct ChiJson {
    labels: [&'static str; 4],
    /// Row-major `[re, im]` pairs.
    entries: Vec<Vec<[f64; 2]>>,
}

impl<T: Real> Serialize for ChiMatrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChiJson {
            labels: LABELS,
            entries: (0..4)
                .map(|m| {
                    (0..4)
                        .map(|n| {
                            let z = self.get(m, n);
                            [z.re.as_f64(), z.im.as_f64()]
                        })
                        .collect()
                })
                .collect(),
        }
        .serialize(s)
    }
}

/// `|0⟩⟨0|`, `|1⟩⟨1|`, `|+⟩⟨+|`, `|+i⟩⟨+i|`.
pub fn input_states<T: Real>() -> [DensityMatrix<T>; 4] {
    let (o, z) = (T::one(), T::zero());
    let bloch = |x, y, zz| DensityMatrix::from_bloch(x, y, zz, Register::System).expect("pure state");
    [bloch(z, z, o), bloch(z, z, -o), bloch(o, z, z), bloch(z, o, z)]
}

/// Hilbert-Schmidt Gram matrix `Tr[A_j† A_k]` of four operators.
pub(crate) fn gram<T: Real>(ops: &[ComplexMatrix<T>; 4]) -> Result<[C<T>; 16]> {
    let mut g = [C::new(T::zero(), T::zero()); 16];
    for j in 0..4 {
        for k in 0..4 {
            g[4 * j + k] = ops[j].hs_inner(&ops[k])?;
        }
    }
    Ok(g)
}
