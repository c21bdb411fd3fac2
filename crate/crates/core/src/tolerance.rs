//! Numerical tolerances, kept in one place so property tests have a single knob.

use crate::scalar::Real;

/// Absolute tolerances used by validation checks throughout the crate.
///
/// Values are stated for `f64`; [`Tolerances::for_scalar`] widens them for
/// lower-precision scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Entrywise equality of matrices.
    pub equality: f64,
    /// Maximum entrywise deviation from Hermiticity.
    pub hermitian: f64,
    /// Maximum `|tr ρ - 1|`.
    pub trace: f64,
    /// Smallest eigenvalue admitted for a density matrix.
    pub psd_floor: f64,
    /// Maximum entry of `U†U - I`.
    pub unitarity: f64,
    /// Largest imaginary part discarded from an expectation value.
    pub imaginary: f64,
    /// Smallest eigenvalue admitted for a physical process matrix.
    pub chi_psd_floor: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        equality: 1e-12,
        hermitian: 1e-10,
        trace: 1e-10,
        psd_floor: -1e-10,
        unitarity: 1e-10,
        imaginary: 1e-10,
        chi_psd_floor: -1e-8,
    };

    pub fn for_scalar<T: Real>() -> Self {
        let s = T::TOLERANCE_SCALE;
        let d = Self::DEFAULT;
        Tolerances {
            equality: d.equality * s,
            hermitian: d.hermitian * s,
            trace: d.trace * s,
            psd_floor: d.psd_floor * s,
            unitarity: d.unitarity * s,
            imaginary: d.imaginary * s,
            chi_psd_floor: d.chi_psd_floor * s,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
