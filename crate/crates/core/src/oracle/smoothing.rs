//! Dirac trains as the limit of Gaussian trains, and a second exact route to
//! the Dirac phase that does not go through the Heaviside case analysis.

use crate::error::{Error, Result};
use crate::lattice::{kernel_unchecked, ChainSpec, NormalModes};
use crate::magnus::{magnus5_quadrature, quadratic_phase, CouplingFunction, QuadraturePlan};
use crate::pulsed::PulseSchedule;
use crate::quadrature::{panelize, GaussLegendre};
use crate::sum::pairwise_sum;
use crate::Real;

/// `Φ` of a Dirac train from the free-time integral
/// `∫₀ᵗ du Σ_j [-L⁴/24 - U L³/6 + U² L² - U³ L/6 - U⁴/24]`, where `L_j(u)` and
/// `U_j(u)` sum the kernel over pulses before and after `u`.
///
/// The integrand is smooth between pulses, so Gauss–Legendre on the
/// inter-pulse panels converges spectrally.
pub fn dirac_cumulative_phi<T: Real>(
    spec: &ChainSpec<T>,
    modes: &NormalModes<T>,
    schedule: &PulseSchedule<T>,
    order: usize,
) -> Result<T> {
    if schedule.n_sites() != spec.n_sites() || modes.n_modes() != spec.n_sites() {
        return Err(Error::ScheduleMismatch(format!(
            "schedule has {} sites, chain {}, modes {}",
            schedule.n_sites(),
            spec.n_sites(),
            modes.n_modes()
        )));
    }
    let n = spec.n_sites();
    let pulses = schedule.pulses();
    let t = schedule.eval_time();
    let mut breaks: Vec<T> = pulses.iter().map(|p| p.2).collect();
    breaks.push(T::zero());
    breaks.push(t);
    let cap = T::PI() / modes.max_frequency() / T::lit(2.0);
    let panels = panelize(&breaks, Some(cap));
    let gl = GaussLegendre::<T>::new(order)?;

    let c24 = T::lit(24.0);
    let c6 = T::lit(6.0);
    let mut terms = Vec::new();
    let mut lower = vec![T::zero(); n];
    let mut upper = vec![T::zero(); n];
    for p in &panels {
        for (u, w) in gl.nodes_on(p.a, p.b).zip(gl.weights_on(p.a, p.b)) {
            lower.iter_mut().for_each(|x| *x = T::zero());
            upper.iter_mut().for_each(|x| *x = T::zero());
            for &(site, _, th) in &pulses {
                for j in 0..n {
                    let k = kernel_unchecked(modes, site, j, th - u);
                    if th < u {
                        lower[j] += k;
                    } else {
                        upper[j] += k;
                    }
                }
            }
            let mut acc = T::zero();
            for j in 0..n {
                let (l, up) = (lower[j], upper[j]);
                let (l2, u2) = (l * l, up * up);
                acc += -l2 * l2 / c24 - up * l2 * l / c6 + u2 * l2 - u2 * up * l / c6 - u2 * u2 / c24;
            }
            terms.push(w * acc);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// Gaussian-train values and their distance to a Dirac reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingReport<T> {
    pub sigmas: Vec<T>,
    pub reference: T,
    pub values: Vec<T>,
    /// `|Φ(σ) - Φ_ref|`.
    pub errors: Vec<T>,
    pub relative_errors: Vec<T>,
    pub strictly_decreasing: bool,
    /// Polynomial extrapolation of the last three values to `σ = 0`.
    pub extrapolated: Option<T>,
    /// Single-site only: `F(σ)`, its Dirac value and extrapolation.
    pub quadratic_values: Option<Vec<T>>,
    pub quadratic_reference: Option<T>,
    pub quadratic_extrapolated: Option<T>,
}

/// Polynomial extrapolation to `σ = 0` through the last (up to) three points.
fn extrapolate<T: Real>(sigmas: &[T], values: &[T]) -> Option<T> {
    let k = values.len();
    if k < 2 {
        return None;
    }
    let m = k.min(3);
    let xs = &sigmas[k - m..];
    let ys = &values[k - m..];
    let mut acc = T::zero();
    for i in 0..m {
        let mut l = T::one();
        for j in 0..m {
            if j != i {
                l *= xs[j] / (xs[j] - xs[i]);
            }
        }
        acc += l * ys[i];
    }
    Some(acc)
}

/// Runs [`magnus5_quadrature`] on Gaussian versions of `schedule` for each
/// width and compares against `reference` (normally the closed-form `Φ`).
///
/// Widths must be strictly descending, at most `T/10`, and every pulse must
/// sit at least eight widths after `t = 0`.
pub fn smoothed_pulse_limit<T: Real>(
    reference: T,
    spec: &ChainSpec<T>,
    modes: &NormalModes<T>,
    schedule: &PulseSchedule<T>,
    sigmas: &[T],
    plan: &QuadraturePlan,
) -> Result<SmoothingReport<T>> {
    if sigmas.is_empty() {
        return Err(Error::InvalidInput("no widths given".into()));
    }
    if sigmas.windows(2).any(|w| !(w[1] < w[0])) || !(sigmas[sigmas.len() - 1] > T::zero()) {
        return Err(Error::InvalidInput(
            "widths must be positive and strictly descending".into(),
        ));
    }
    if sigmas[0] > schedule.period() / T::lit(10.0) {
        return Err(Error::InvalidInput(format!(
            "largest width {} exceeds period / 10",
            sigmas[0]
        )));
    }
    if schedule.t0() < T::lit(8.0) * sigmas[0] {
        return Err(Error::InvalidInput(format!(
            "first pulse at {} is within eight widths of t = 0",
            schedule.t0()
        )));
    }
    let lambda = schedule.strength();
    let single = spec.n_sites() == 1;
    let mut values = Vec::with_capacity(sigmas.len());
    let mut quad = Vec::new();
    for &s in sigmas {
        let g = CouplingFunction::pulse_train(schedule, s)?;
        let r = magnus5_quadrature(spec, modes, &g, schedule.eval_time(), plan)?;
        values.push(r.quartic_coefficient);
        if single {
            quad.push(quadratic_phase(&g, spec.trap_freq(), schedule.eval_time(), plan)?);
        }
    }
    // With no coupling the phase vanishes whatever the normalization.
    let reference = if lambda == T::zero() { T::zero() } else { reference };
    let errors: Vec<T> = values.iter().map(|v| (*v - reference).abs()).collect();
    let relative_errors = errors
        .iter()
        .map(|e| {
            if reference == T::zero() {
                *e
            } else {
                *e / reference.abs()
            }
        })
        .collect();
    let strictly_decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let quadratic_reference = single.then(|| {
        let times: Vec<T> = schedule.pulses().into_iter().map(|p| p.2).collect();
        crate::pulsed::quadratic_phase_delta(spec.trap_freq(), &times, lambda)
    });
    Ok(SmoothingReport {
        sigmas: sigmas.to_vec(),
        reference,
        extrapolated: extrapolate(sigmas, &values),
        values,
        errors,
        relative_errors,
        strictly_decreasing,
        quadratic_extrapolated: if single { extrapolate(sigmas, &quad) } else { None },
        quadratic_values: single.then_some(quad),
        quadratic_reference,
    })
}
