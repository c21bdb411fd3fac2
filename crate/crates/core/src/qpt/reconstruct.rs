use serde::Serialize;

use super::basis::{gram, ChiMatrix, OperatorBasis};
use crate::error::{Error, Result};
use crate::linalg::solve_complete_pivot;
use crate::qdyn::{ComplexMatrix, DensityMatrix, Dim};
use crate::scalar::{Real, C};
use crate::tolerance::Tolerances;

/// Relative pivot below which the 16×16 system counts as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;
/// Largest accepted `‖β χ - λ‖_∞` for `f64`.
pub const RESIDUAL_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiReconstruction<T: Real> {
    pub chi: ChiMatrix<T>,
    /// `max |Σ β χ - λ|` of the solved system.
    pub residual: f64,
    /// Smallest pivot relative to the largest.
    pub min_relative_pivot: f64,
}

/// Dual operators `D_k` with `Tr[ρ_j D_k] = δ_jk` for a complete input set.
fn dual_operators<T: Real>(inputs: &[ComplexMatrix<T>; 4]) -> Result<[ComplexMatrix<T>; 4]> {
    // Inputs are Hermitian, so Tr[ρ_j ρ_k] equals the HS inner product.
    let g = gram(inputs)?;
    let mut duals = [ComplexMatrix::zeros(Dim::Two); 4];
    for (k, dual) in duals.iter_mut().enumerate() {
        // Column k of G⁻¹: solve G x = e_k.
        let mut e = [C::new(T::zero(), T::zero()); 4];
        e[k] = C::new(T::one(), T::zero());
        let sol = solve_complete_pivot(&g, &e, 4, RANK_TOLERANCE)?;
        for l in 0..4 {
            *dual = *dual + inputs[l].scale(sol.x[l]);
        }
    }
    Ok(duals)
}

fn trace_product<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> C<T> {
    (*a * *b).trace()
}

/// Solves `Σ_mn β^{mn}_{jk} χ_mn = λ_jk` with `λ_jk = Tr[ρ'_j D_k]` and
/// `β^{mn}_{jk} = Tr[E_m ρ_j E_n† D_k]`, `D_k` dual to the inputs.
pub fn reconstruct_chi_raw<T: Real>(
    inputs: &[ComplexMatrix<T>; 4],
    outputs: &[ComplexMatrix<T>; 4],
    basis: &OperatorBasis<T>,
) -> Result<ChiReconstruction<T>> {
    for m in inputs.iter().chain(outputs) {
        if m.dim() != Dim::Two {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: m.size(),
            });
        }
    }
    let duals = dual_operators(inputs)?;
    let e = basis.elements();
    let mut beta = vec![C::new(T::zero(), T::zero()); 256];
    let mut lambda = vec![C::new(T::zero(), T::zero()); 16];
    for j in 0..4 {
        for k in 0..4 {
            let row = 4 * j + k;
            lambda[row] = trace_product(&outputs[j], &duals[k]);
            for m in 0..4 {
                let left = e[m] * inputs[j];
                for n in 0..4 {
                    beta[row * 16 + 4 * m + n] = trace_product(&(left * e[n].adjoint()), &duals[k]);
                }
            }
        }
    }
    let sol = solve_complete_pivot(&beta, &lambda, 16, RANK_TOLERANCE)?;
    let residual = (0..16)
        .map(|r| {
            let acc: C<T> = (0..16).map(|col| beta[r * 16 + col] * sol.x[col]).sum();
            (acc - lambda[r]).norm().as_f64()
        })
        .fold(0.0, f64::max);
    let threshold = RESIDUAL_THRESHOLD * T::TOLERANCE_SCALE;
    if !(residual <= threshold) {
        return Err(Error::ResidualTooLarge { residual, threshold });
    }
    let mut entries = [C::new(T::zero(), T::zero()); 16];
    entries.copy_from_slice(&sol.x);
    Ok(ChiReconstruction {
        chi: ChiMatrix::from_entries(entries),
        residual,
        min_relative_pivot: sol.min_relative_pivot,
    })
}

/// χ of the channel that maps each input state to the matching output.
pub fn reconstruct_chi<T: Real>(
    inputs: &[DensityMatrix<T>; 4],
    outputs: &[DensityMatrix<T>; 4],
    basis: &OperatorBasis<T>,
) -> Result<ChiReconstruction<T>> {
    reconstruct_chi_raw(&inputs.each_ref().map(|s| *s.matrix()), &outputs.each_ref().map(|s| *s.matrix()), basis)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelDiagnostics {
    pub hermitian_defect: f64,
    pub min_eigenvalue: f64,
    /// `max |Σ χ_mn E_n† E_m - I|`.
    pub trace_defect: f64,
    pub physical: bool,
}

/// Hermiticity, positivity and trace preservation of a χ matrix.
pub fn validate_channel<T: Real>(chi: &ChiMatrix<T>) -> ChannelDiagnostics {
    let tol = Tolerances::for_scalar::<T>();
    let m = chi.as_matrix();
    let hermitian_defect = m.hermitian_defect();
    let min_eigenvalue = m.hermitian_eigenvalues().first().map(|v| v.as_f64()).unwrap_or(0.0);
    let e = OperatorBasis::<T>::standard();
    let mut sum = ComplexMatrix::zeros(Dim::Two);
    for a in 0..4 {
        for b in 0..4 {
            sum = sum + (e.elements()[b].adjoint() * e.elements()[a]).scale(chi.get(a, b));
        }
    }
    let trace_defect = sum.max_abs_diff(&ComplexMatrix::identity(Dim::Two));
    ChannelDiagnostics {
        hermitian_defect,
        min_eigenvalue,
        trace_defect,
        physical: hermitian_defect <= tol.hermitian && min_eigenvalue >= tol.chi_psd_floor && trace_defect <= tol.trace,
    }
}
