use serde::Serialize;
use thiserror::Error;

use super::sweep::SpectralProfile;
use crate::linalg::solve_real;
use crate::scalar::Real;

const MAX_ITERATIONS: usize = 400;
const COST_TOLERANCE: f64 = 1e-14;
const STEP_TOLERANCE: f64 = 1e-12;
/// A width beyond this multiple of the sampled span is treated as flat.
const DEGENERATE_WIDTH_SPAN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianComponent<T: Real> {
    pub amplitude: T,
    /// rad/s
    pub center: T,
    /// Standard deviation, rad/s.
    pub width: T,
}

impl<T: Real> GaussianComponent<T> {
    pub fn eval(&self, omega: T) -> T {
        let z = (omega - self.center) / self.width;
        self.amplitude * (-T::lit(0.5) * z * z).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianFit<T: Real> {
    /// Ordered by center.
    pub components: Vec<GaussianComponent<T>>,
    /// Euclidean norm of the residuals.
    pub residual_norm: T,
    pub iterations: usize,
    /// Some width is much larger than the sampled span.
    pub degenerate_width: bool,
}

impl<T: Real> GaussianFit<T> {
    pub fn eval(&self, omega: T) -> T {
        self.components.iter().map(|c| c.eval(omega)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum GaussianFitError<T: Real> {
    #[error("{n_components} components need at least {required} points, got {available}")]
    InsufficientPoints {
        n_components: usize,
        available: usize,
        required: usize,
    },

    #[error("only 1 or 2 components are supported, got {0}")]
    UnsupportedComponents(usize),

    #[error("no start converged within the iteration budget (best residual {:e})", .best.residual_norm.as_f64())]
    NoConvergence { best: GaussianFit<T> },
}

/// Least-squares fit of `Σ aᵢ exp(-(ω - μᵢ)² / 2wᵢ²)` to the profile points.
pub fn fit_gaussians<T: Real>(
    profile: &SpectralProfile<T>,
    n_components: usize,
) -> Result<GaussianFit<T>, GaussianFitError<T>> {
    let xs: Vec<f64> = profile.points.iter().map(|p| p.omega.as_f64()).collect();
    let ys: Vec<f64> = profile.points.iter().map(|p| p.s_value.as_f64()).collect();
    fit_gaussians_xy(&xs, &ys, n_components).map_err(|e| match e {
        GaussianFitError::InsufficientPoints {
            n_components,
            available,
            required,
        } => GaussianFitError::InsufficientPoints {
            n_components,
            available,
            required,
        },
        GaussianFitError::UnsupportedComponents(n) => GaussianFitError::UnsupportedComponents(n),
        GaussianFitError::NoConvergence { best } => GaussianFitError::NoConvergence { best: best.cast() },
    })
    .map(|f| f.cast())
}

impl GaussianFit<f64> {
    fn cast<T: Real>(&self) -> GaussianFit<T> {
        GaussianFit {
            components: self
                .components
                .iter()
                .map(|c| GaussianComponent {
                    amplitude: T::lit(c.amplitude),
                    center: T::lit(c.center),
                    width: T::lit(c.width),
                })
                .collect(),
            residual_norm: T::lit(self.residual_norm),
            iterations: self.iterations,
            degenerate_width: self.degenerate_width,
        }
    }
}

/// Same fit on raw samples.
pub fn fit_gaussians_xy(xs: &[f64], ys: &[f64], n_components: usize) -> Result<GaussianFit<f64>, GaussianFitError<f64>> {
    if !(1..=2).contains(&n_components) {
        return Err(GaussianFitError::UnsupportedComponents(n_components));
    }
    let required = 3 * n_components + 2;
    let n = xs.len().min(ys.len());
    if n < required {
        return Err(GaussianFitError::InsufficientPoints {
            n_components,
            available: n,
            required,
        });
    }
    // Work in centered, scaled coordinates.
    let x_min = xs[..n].iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = xs[..n].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let x_mid = 0.5 * (x_min + x_max);
    let x_scale = (0.5 * (x_max - x_min)).max(f64::MIN_POSITIVE);
    let y_scale = ys[..n].iter().fold(0.0f64, |m, y| m.max(y.abs())).max(f64::MIN_POSITIVE);
    let u: Vec<f64> = xs[..n].iter().map(|x| (x - x_mid) / x_scale).collect();
    let v: Vec<f64> = ys[..n].iter().map(|y| y / y_scale).collect();

    let mut best: Option<(Outcome, bool)> = None;
    for start in initial_guesses(&u, &v, n_components) {
        let out = levenberg_marquardt(&u, &v, start);
        let better = match &best {
            None => true,
            Some((b, b_conv)) => (out.converged && !b_conv) || (out.converged == *b_conv && out.cost < b.cost),
        };
        if better {
            let conv = out.converged;
            best = Some((out, conv));
        }
    }
    let (out, converged) = best.expect("at least one start");
    let mut components: Vec<GaussianComponent<f64>> = out
        .params
        .chunks_exact(3)
        .map(|p| GaussianComponent {
            amplitude: p[0].exp() * y_scale,
            center: x_mid + p[1] * x_scale,
            width: p[2].exp() * x_scale,
        })
        .collect();
    components.sort_by(|a, b| a.center.total_cmp(&b.center));
    let span = (x_max - x_min).max(f64::MIN_POSITIVE);
    let fit = GaussianFit {
        degenerate_width: components.iter().any(|c| c.width > DEGENERATE_WIDTH_SPAN * span),
        components,
        residual_norm: (2.0 * out.cost).sqrt() * y_scale,
        iterations: out.iterations,
    };
    if converged {
        Ok(fit)
    } else {
        Err(GaussianFitError::NoConvergence { best: fit })
    }
}

/// Per-component parameters `(ln a, μ, ln w)` in scaled coordinates.
fn initial_guesses(u: &[f64], v: &[f64], n_components: usize) -> Vec<Vec<f64>> {
    let (peak, a0) = v
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &y)| if y > acc.1 { (i, y) } else { acc });
    let a0 = a0.max(1e-6);
    let mu0 = u[peak];
    let w0 = half_max_width(u, v, peak).unwrap_or(0.5).max(1e-3);
    let one = |a: f64, mu: f64, w: f64| vec![a.max(1e-6).ln(), mu, w.max(1e-3).ln()];
    let mut starts = Vec::new();
    match n_components {
        1 => {
            for scale in [1.0, 0.5, 2.0] {
                starts.push(one(a0, mu0, w0 * scale));
            }
        }
        _ => {
            // Peak plus the largest residual after removing a single Gaussian.
            let resid: Vec<f64> = u
                .iter()
                .zip(v)
                .map(|(&x, &y)| y - a0 * (-0.5 * ((x - mu0) / w0).powi(2)).exp())
                .collect();
            let (second, a1) = resid
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &y)| if y > acc.1 { (i, y) } else { acc });
            let mut s = one(a0, mu0, w0);
            s.extend(one(a1.max(0.1 * a0), u[second], w0));
            starts.push(s);
            for (m1, m2) in [(-0.5, 0.5), (-0.7, 0.2), (-0.2, 0.7)] {
                let mut s = one(0.7 * a0, m1, 0.3);
                s.extend(one(0.7 * a0, m2, 0.3));
                starts.push(s);
            }
            let mut s = one(a0, mu0, 0.5 * w0);
            s.extend(one(0.5 * a0, if mu0 > 0.0 { mu0 - 0.8 } else { mu0 + 0.8 }, 0.5 * w0));
            starts.push(s);
        }
    }
    starts
}

/// Standard deviation estimated from the full width at half maximum.
fn half_max_width(u: &[f64], v: &[f64], peak: usize) -> Option<f64> {
    let half = 0.5 * v[peak];
    let left = (0..peak).rev().find(|&i| v[i] < half).map(|i| u[i]);
    let right = (peak + 1..v.len()).find(|&i| v[i] < half).map(|i| u[i]);
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (u[peak] - l),
        (None, Some(r)) => 2.0 * (r - u[peak]),
        (None, None) => return None,
    };
    Some(fwhm / (8.0 * std::f64::consts::LN_2).sqrt())
}

struct Outcome {
    params: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn residuals(u: &[f64], v: &[f64], p: &[f64], r: &mut [f64], jac: Option<&mut [f64]>) -> f64 {
    let np = p.len();
    let mut jac = jac;
    for (i, (&x, &y)) in u.iter().zip(v).enumerate() {
        let mut model = 0.0;
        for (k, comp) in p.chunks_exact(3).enumerate() {
            let (a, mu, w) = (comp[0].exp(), comp[1], comp[2].exp());
            let z = (x - mu) / w;
            let g = a * (-0.5 * z * z).exp();
            model += g;
            if let Some(j) = jac.as_deref_mut() {
                j[i * np + 3 * k] = g;
                j[i * np + 3 * k + 1] = g * z / w;
                j[i * np + 3 * k + 2] = g * z * z;
            }
        }
        r[i] = model - y;
    }
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// Damped Gauss-Newton with Marquardt diagonal scaling.
fn levenberg_marquardt(u: &[f64], v: &[f64], start: Vec<f64>) -> Outcome {
    let (m, np) = (u.len(), start.len());
    let mut p = start;
    let mut r = vec![0.0; m];
    let mut jac = vec![0.0; m * np];
    let mut cost = residuals(u, v, &p, &mut r, Some(&mut jac));
    let mut lambda = 1e-3;
    let mut trial = vec![0.0; np];
    let mut r_trial = vec![0.0; m];
    for iter in 1..=MAX_ITERATIONS {
        let mut jtj = vec![0.0; np * np];
        let mut jtr = vec![0.0; np];
        for i in 0..m {
            let row = &jac[i * np..(i + 1) * np];
            for a in 0..np {
                jtr[a] -= row[a] * r[i];
                for b in 0..np {
                    jtj[a * np + b] += row[a] * row[b];
                }
            }
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let mut lhs = jtj.clone();
            for a in 0..np {
                lhs[a * np + a] += lambda * jtj[a * np + a].max(1e-12);
            }
            let Some(step) = solve_real(&lhs, &jtr, np) else {
                lambda *= 4.0;
                continue;
            };
            for a in 0..np {
                trial[a] = p[a] + step[a];
            }
            let c = residuals(u, v, &trial, &mut r_trial, None);
            if c.is_finite() && c < cost {
                let drop = cost - c;
                let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
                let p_norm = p.iter().map(|s| s * s).sum::<f64>().sqrt();
                p.copy_from_slice(&trial);
                cost = residuals(u, v, &p, &mut r, Some(&mut jac));
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if drop <= COST_TOLERANCE * cost.max(1e-300) || step_norm <= STEP_TOLERANCE * (1.0 + p_norm) {
                    return Outcome {
                        params: p,
                        cost,
                        iterations: iter,
                        converged: true,
                    };
                }
                break;
            }
            lambda *= 2.0;
        }
        if !accepted {
            // No descent direction left: a stationary point.
            let grad = jtr.iter().map(|g| g.abs()).fold(0.0, f64::max);
            return Outcome {
                params: p,
                cost,
                iterations: iter,
                converged: grad <= 1e-8 * (1.0 + cost),
            };
        }
        if cost < 1e-28 {
            return Outcome {
                params: p,
                cost,
                iterations: iter,
                converged: true,
            };
        }
    }
    Outcome {
        params: p,
        cost,
        iterations: MAX_ITERATIONS,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(x: f64, a: f64, mu: f64, w: f64) -> f64 {
        a * (-0.5 * ((x - mu) / w).powi(2)).exp()
    }

    #[test]
    fn single_round_trip() {
        let xs: Vec<f64> = (0..30).map(|i| 200.0 + 1400.0 * i as f64 / 29.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| gauss(x, 5.0, 800.0, 200.0)).collect();
        let fit = fit_gaussians_xy(&xs, &ys, 1).unwrap();
        let c = fit.components[0];
        assert!((c.amplitude / 5.0 - 1.0).abs() < 1e-6);
        assert!((c.center / 800.0 - 1.0).abs() < 1e-6);
        assert!((c.width / 200.0 - 1.0).abs() < 1e-6);
        assert!(!fit.degenerate_width);
    }

    #[test]
    fn two_component_round_trip() {
        let xs: Vec<f64> = (0..40).map(|i| 100.0 + 2900.0 * i as f64 / 39.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| gauss(x, 4.0, 900.0, 180.0) + gauss(x, 2.5, 2100.0, 300.0))
            .collect();
        let fit = fit_gaussians_xy(&xs, &ys, 2).unwrap();
        let (a, b) = (fit.components[0], fit.components[1]);
        for (got, want) in [
            (a.amplitude, 4.0),
            (a.center, 900.0),
            (a.width, 180.0),
            (b.amplitude, 2.5),
            (b.center, 2100.0),
            (b.width, 300.0),
        ] {
            assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
        }
    }

    #[test]
    fn flat_profile_is_flagged() {
        let xs: Vec<f64> = (0..12).map(|i| 100.0 * (i + 1) as f64).collect();
        let ys = vec![2.0; 12];
        match fit_gaussians_xy(&xs, &ys, 1) {
            Ok(fit) => assert!(fit.degenerate_width, "{fit:?}"),
            Err(GaussianFitError::NoConvergence { best }) => {
                assert!(best.components[0].width > xs[11] - xs[0])
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn preconditions() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            fit_gaussians_xy(&xs, &xs, 1),
            Err(GaussianFitError::InsufficientPoints { required: 5, .. })
        ));
        assert!(matches!(
            fit_gaussians_xy(&xs, &xs, 3),
            Err(GaussianFitError::UnsupportedComponents(3))
        ));
    }
}
