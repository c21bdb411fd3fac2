use serde::Serialize;

use super::basis::{input_states, ChiMatrix, OperatorBasis};
use super::process::{unpack, Channel, ProcessSpec};
use super::reconstruct::{reconstruct_chi_raw, validate_channel, ChannelDiagnostics};
use crate::error::Result;
use crate::scalar::Real;
use crate::spectroscopy::averaged_spectrum;

/// Closed-form cycles used for the `S(ω)` context of a report row.
const CONTEXT_CYCLES: usize = 4000;

/// Full tomography of one process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QptResult<T: Real> {
    pub label: String,
    pub chi: ChiMatrix<T>,
    pub residual: f64,
    /// Jackknife standard error of each `|χ_mn|`, row-major; zero for
    /// deterministic channels.
    pub magnitude_stderr: [T; 16],
    pub diagnostics: ChannelDiagnostics,
}

impl<T: Real> QptResult<T> {
    pub fn zz_abs(&self) -> T {
        self.chi.zz().norm()
    }

    pub fn zz_stderr(&self) -> T {
        self.magnitude_stderr[15]
    }

    pub fn abs(&self, m: usize, n: usize) -> T {
        self.chi.get(m, n).norm()
    }

    pub fn stderr(&self, m: usize, n: usize) -> T {
        self.magnitude_stderr[4 * m + n]
    }
}

/// Prepares the four tomographic inputs, runs the process on each and
/// reconstructs χ.
pub fn run_qpt<T: Real>(spec: &ProcessSpec<T>) -> Result<QptResult<T>> {
    let basis = OperatorBasis::standard();
    let inputs = input_states::<T>().map(|s| *s.matrix());
    let (rec, magnitude_stderr) = match &spec.channel {
        Channel::Analytic(ch) => {
            let outputs = inputs.map(|m| ch.apply(&m));
            (reconstruct_chi_raw(&inputs, &outputs, &basis)?, [T::zero(); 16])
        }
        Channel::Simulated(p) => {
            let stats = p.run(&inputs)?;
            let chi_of = |mean: &[T]| {
                let outputs = [0, 1, 2, 3].map(|i| unpack(mean, i));
                reconstruct_chi_raw(&inputs, &outputs, &basis)
            };
            let rec = chi_of(&stats.mean)?;
            let reps = (0..stats.n_batches())
                .map(|b| chi_of(&stats.leave_one_out(b)).map(|r| r.chi.magnitudes()))
                .collect::<Result<Vec<_>>>()?;
            (rec, jackknife(&reps))
        }
    };
    Ok(QptResult {
        label: spec.label.clone(),
        chi: rec.chi,
        residual: rec.residual,
        magnitude_stderr,
        diagnostics: validate_channel(&rec.chi),
    })
}

fn jackknife<T: Real>(reps: &[[T; 16]]) -> [T; 16] {
    let mut out = [T::zero(); 16];
    if reps.len() < 2 {
        return out;
    }
    let g = T::lit(reps.len() as f64);
    for (k, slot) in out.iter_mut().enumerate() {
        let mean = reps.iter().map(|r| r[k]).sum::<T>() / g;
        let ss: T = reps.iter().map(|r| (r[k] - mean) * (r[k] - mean)).sum();
        *slot = (ss * (g - T::one()) / g).sqrt();
    }
    out
}

/// One row of the `|χ_ZZ|` comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiZzRow<T: Real> {
    pub label: String,
    pub chi_zz: T,
    pub chi_zz_stderr: T,
    /// `π/τ` of the decoupling sequence, if any.
    pub omega: Option<T>,
    /// Closed-form kick spectral density at `omega` under CPMG.
    pub s_omega: Option<T>,
    pub result: QptResult<T>,
}

/// Runs tomography on every spec and tabulates `|χ_ZZ|` with the matching
/// spectral-density point.
pub fn chi_zz_report<T: Real>(specs: &[ProcessSpec<T>]) -> Result<Vec<ChiZzRow<T>>> {
    specs
        .iter()
        .map(|spec| {
            let result = run_qpt(spec)?;
            let (omega, s_omega) = spectral_context(spec)?;
            Ok(ChiZzRow {
                label: spec.label.clone(),
                chi_zz: result.zz_abs(),
                chi_zz_stderr: result.zz_stderr(),
                omega,
                s_omega,
                result,
            })
        })
        .collect()
}

fn spectral_context<T: Real>(spec: &ProcessSpec<T>) -> Result<(Option<T>, Option<T>)> {
    let Channel::Simulated(p) = &spec.channel else {
        return Ok((None, None));
    };
    let Some(dd) = p.dd else {
        return Ok((None, None));
    };
    let tau = dd.spacing();
    let omega = T::PI() / tau;
    let Some(k) = p.kicks else {
        return Ok((Some(omega), Some(T::zero())));
    };
    let s = averaged_spectrum(&p.sys, k.theta(), k.gamma_rate(), &[tau], CONTEXT_CYCLES, 1)
        .ok()
        .and_then(|prof| prof.points.first().map(|pt| pt.s_value));
    Ok((Some(omega), s))
}

/// `label,chi_zz,stderr,omega_rad_s,S_per_s`; missing contexts print `NaN`.
pub fn chi_zz_csv<T: Real>(rows: &[ChiZzRow<T>]) -> String {
    let mut out = String::from("label,chi_zz,stderr,omega_rad_s,S_per_s\n");
    for r in rows {
        let opt = |v: Option<T>| format!("{:.16e}", v.map(|x| x.as_f64()).unwrap_or(f64::NAN));
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{},{}\n",
            r.label,
            r.chi_zz.as_f64(),
            r.chi_zz_stderr.as_f64(),
            opt(r.omega),
            opt(r.s_omega)
        ));
    }
    out
}
