//! Small dense solvers shared by the matrix, tomography and fitting code.
//!
//! Matrices are row-major `n × n` slices; `n` stays tiny (≤ 16) everywhere
//! in this crate, so nothing here is blocked or vectorised.

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// sorted ascending. Only the Hermitian part of `a` is used.
pub fn hermitian_eigenvalues<T: Real>(a: &[C<T>], n: usize) -> Vec<T> {
    assert_eq!(a.len(), n * n, "matrix storage does not match n");
    let mut m: Vec<C<T>> = a.to_vec();
    // Symmetrise so that round-off in the input does not leak into the sweep.
    for i in 0..n {
        for j in i..n {
            let h = (m[i * n + j] + m[j * n + i].conj()) * T::lit(0.5);
            m[i * n + j] = h;
            m[j * n + i] = h.conj();
        }
    }
    let scale: T = m.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    if scale == T::zero() {
        return vec![T::zero(); n];
    }
    let threshold = scale * T::epsilon() * T::lit(1e-2);
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].norm_sqr())
            .sum::<T>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let mag = apq.norm();
                if mag <= threshold * T::lit(1e-3) {
                    continue;
                }
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let theta = (aqq - app) / (T::lit(2.0) * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                // Phase that makes the (p, q) entry real before the real rotation.
                let ph = apq / mag;
                let ph_conj = ph.conj();
                let g_pp = C::new(cs, T::zero());
                let g_qp = ph_conj * (-sn);
                let g_pq = C::new(sn, T::zero());
                let g_qq = ph_conj * cs;
                for r in 0..n {
                    let a_rp = m[r * n + p];
                    let a_rq = m[r * n + q];
                    m[r * n + p] = a_rp * g_pp + a_rq * g_qp;
                    m[r * n + q] = a_rp * g_pq + a_rq * g_qq;
                }
                for r in 0..n {
                    let a_pr = m[p * n + r];
                    let a_qr = m[q * n + r];
                    m[p * n + r] = g_pp.conj() * a_pr + g_qp.conj() * a_qr;
                    m[q * n + r] = g_pq.conj() * a_pr + g_qq.conj() * a_qr;
                }
                m[p * n + q] = C::new(T::zero(), T::zero());
                m[q * n + p] = C::new(T::zero(), T::zero());
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| m[i * n + i].re).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eig
}

/// Solution of a square complex system by Gaussian elimination with
/// complete pivoting.
#[derive(Debug, Clone)]
pub struct ComplexSolution<T: Real> {
    pub x: Vec<C<T>>,
    /// Numerical rank observed while pivoting.
    pub rank: usize,
    /// Smallest accepted pivot magnitude relative to the largest.
    pub min_relative_pivot: f64,
}

/// Solves `A x = b` with complete pivoting. Pivots whose magnitude relative
/// to the first pivot falls below `rank_tol` make the system singular.
pub fn solve_complete_pivot<T: Real>(
    a: &[C<T>],
    b: &[C<T>],
    n: usize,
    rank_tol: f64,
) -> Result<ComplexSolution<T>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut first_pivot = 0.0f64;
    let mut min_rel = 1.0f64;
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, -1.0f64);
        for r in k..n {
            for cidx in k..n {
                let v = m[r * n + cidx].norm().as_f64();
                if v > best {
                    best = v;
                    pr = r;
                    pc = cidx;
                }
            }
        }
        if k == 0 {
            first_pivot = best;
        }
        let rel = if first_pivot > 0.0 { best / first_pivot } else { 0.0 };
        if first_pivot == 0.0 || rel < rank_tol {
            return Err(Error::SingularSystem { rank: k, pivot: rel });
        }
        min_rel = min_rel.min(rel);
        if pr != k {
            for cidx in 0..n {
                m.swap(k * n + cidx, pr * n + cidx);
            }
            rhs.swap(k, pr);
        }
        if pc != k {
            for r in 0..n {
                m.swap(r * n + k, r * n + pc);
            }
            col_perm.swap(k, pc);
        }
        let pivot = m[k * n + k];
        for r in (k + 1)..n {
            let factor = m[r * n + k] / pivot;
            if factor.norm() == T::zero() {
                continue;
            }
            for cidx in k..n {
                let v = m[k * n + cidx];
                m[r * n + cidx] -= factor * v;
            }
            let v = rhs[k];
            rhs[r] -= factor * v;
        }
    }
    let mut y = vec![C::new(T::zero(), T::zero()); n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for cidx in (k + 1)..n {
            s -= m[k * n + cidx] * y[cidx];
        }
        y[k] = s / m[k * n + k];
    }
    let mut x = vec![C::new(T::zero(), T::zero()); n];
    for (k, &orig) in col_perm.iter().enumerate() {
        x[orig] = y[k];
    }
    Ok(ComplexSolution {
        x,
        rank: n,
        min_relative_pivot: min_rel,
    })
}

/// Solves a small real system with partial pivoting; `None` if singular.
pub fn solve_real<T: Real>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let pr = (k..n).max_by(|&i, &j| {
            m[i * n + k]
                .abs()
                .partial_cmp(&m[j * n + k].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(m[pr * n + k].abs() > T::zero()) {
            return None;
        }
        if pr != k {
            for cidx in 0..n {
                m.swap(k * n + cidx, pr * n + cidx);
            }
            rhs.swap(k, pr);
        }
        let pivot = m[k * n + k];
        for r in (k + 1)..n {
            let f = m[r * n + k] / pivot;
            for cidx in k..n {
                let v = m[k * n + cidx];
                m[r * n + cidx] -= f * v;
            }
            let v = rhs[k];
            rhs[r] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for cidx in (k + 1)..n {
            s -= m[k * n + cidx] * x[cidx];
        }
        x[k] = s / m[k * n + k];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}
