//! Dirac pulse trains: Heaviside case analysis, exact trigonometric-product
//! integrals and the site-count scan.
//!
//! Sites and pulse indices are 0-based. Internally every time is multiplied
//! by the reference trap frequency `Ω`, so trig arguments stay O(1).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{ChainSpec, NormalModes};
use crate::phase::{Method, PhaseResult};
use crate::sum::{pairwise_sum, PairwiseAccumulator};
use crate::Real;

pub const PULSES_PER_SITE: usize = 4;

/// Relative threshold below which a combination frequency is treated as zero.
const RESONANCE_TOL: f64 = 1e-12;

/// Four pulses per site: `g_k(t) = λ Σ_α δ(t - (t₀ + αT + kτ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule<T> {
    n_sites: usize,
    t0: T,
    period: T,
    site_delay: T,
    strength: T,
    eval_time: T,
}

impl<T: Real> PulseSchedule<T> {
    pub fn new(n_sites: usize, t0: T, period: T, site_delay: T, strength: T, eval_time: T) -> Result<Self> {
        let finite = [t0, period, site_delay, strength, eval_time]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidInput("schedule values must be finite".into()));
        }
        if n_sites == 0 {
            return Err(Error::InvalidInput("n_sites must be >= 1".into()));
        }
        if t0 < T::zero() {
            return Err(Error::InvalidInput(format!("t0 must be >= 0, got {t0}")));
        }
        if !(period > T::zero()) {
            return Err(Error::InvalidInput(format!("period must be positive, got {period}")));
        }
        if site_delay < T::zero() {
            return Err(Error::InvalidInput(format!(
                "site delay must be >= 0, got {site_delay}"
            )));
        }
        if strength < T::zero() {
            return Err(Error::InvalidInput(format!("strength must be >= 0, got {strength}")));
        }
        if period < T::from_count(n_sites) * site_delay {
            return Err(Error::InvalidInput(format!(
                "re-injection constraint violated: period {period} < {n_sites} x site delay {site_delay}"
            )));
        }
        let last = Self::last_time(n_sites, t0, period, site_delay);
        if !(eval_time > last) {
            return Err(Error::InvalidInput(format!(
                "eval time {eval_time} must be after the last pulse at {last}"
            )));
        }
        Ok(Self {
            n_sites,
            t0,
            period,
            site_delay,
            strength,
            eval_time,
        })
    }

    /// `T = π/(2Ω)`, `τ = T/(2N)`, evaluated one trap period after the last pulse.
    pub fn quarter_period(n_sites: usize, omega: T, t0: T, strength: T) -> Result<Self> {
        if !(omega > T::zero()) {
            return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
        }
        let period = T::FRAC_PI_2() / omega;
        let site_delay = period / (T::lit(2.0) * T::from_count(n_sites.max(1)));
        let eval = Self::default_eval_time(n_sites, t0, period, site_delay, omega);
        Self::new(n_sites, t0, period, site_delay, strength, eval)
    }

    /// Last pulse time plus `2π/Ω`.
    pub fn default_eval_time(n_sites: usize, t0: T, period: T, site_delay: T, omega: T) -> T {
        Self::last_time(n_sites, t0, period, site_delay) + T::TAU() / omega
    }

    fn last_time(n_sites: usize, t0: T, period: T, site_delay: T) -> T {
        t0 + T::lit(3.0) * period + T::from_count(n_sites.saturating_sub(1)) * site_delay
    }

    pub fn with_eval_time(&self, eval_time: T) -> Result<Self> {
        Self::new(
            self.n_sites,
            self.t0,
            self.period,
            self.site_delay,
            self.strength,
            eval_time,
        )
    }

    pub fn with_strength(&self, strength: T) -> Result<Self> {
        Self::new(
            self.n_sites,
            self.t0,
            self.period,
            self.site_delay,
            strength,
            self.eval_time,
        )
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn site_delay(&self) -> T {
        self.site_delay
    }

    pub fn strength(&self) -> T {
        self.strength
    }

    pub fn eval_time(&self) -> T {
        self.eval_time
    }

    pub fn last_pulse_time(&self) -> T {
        Self::last_time(self.n_sites, self.t0, self.period, self.site_delay)
    }

    /// Every pulse as `(site, pulse_index, time)`, site-major.
    pub fn pulses(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.n_sites * PULSES_PER_SITE);
        for site in 0..self.n_sites {
            for a in 0..PULSES_PER_SITE {
                out.push((site, a, self.time_unchecked(site, a)));
            }
        }
        out
    }

    #[inline]
    fn time_unchecked(&self, site: usize, pulse_index: usize) -> T {
        self.t0 + T::from_count(pulse_index) * self.period + T::from_count(site) * self.site_delay
    }
}

/// `t₀ + α T + k τ` for site `k` and pulse `α`.
pub fn pulse_times<T: Real>(schedule: &PulseSchedule<T>, site: usize, pulse_index: usize) -> Result<T> {
    if site >= schedule.n_sites {
        return Err(Error::IndexOutOfRange {
            index: site,
            len: schedule.n_sites,
        });
    }
    if pulse_index >= PULSES_PER_SITE {
        return Err(Error::InvalidInput(format!(
            "pulse index {pulse_index} out of range 0..{PULSES_PER_SITE}"
        )));
    }
    Ok(schedule.time_unchecked(site, pulse_index))
}

/// Signed sum of oriented intervals; `(w, a, b)` stands for `w ∫_a^b`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSum<T> {
    terms: Vec<(T, T, T)>,
}

impl<T: Real> IntervalSum<T> {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn push(&mut self, weight: T, a: T, b: T) {
        self.terms.push((weight, a, b));
    }

    pub fn terms(&self) -> &[(T, T, T)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn extend(&mut self, other: &IntervalSum<T>, scale: T) {
        for &(w, a, b) in &other.terms {
            self.terms.push((w * scale, a, b));
        }
    }

    /// `Σ w · f(a, b)` where `f` integrates over the oriented interval.
    pub fn integrate(&self, mut f: impl FnMut(T, T) -> T) -> T {
        let mut acc = T::zero();
        for &(w, a, b) in &self.terms {
            acc += w * f(a, b);
        }
        acc
    }

    /// Orients every interval as `a <= b`, merges identical ones and drops
    /// empty or zero-weight terms. The integral is unchanged.
    pub fn coalesce(&mut self) {
        let mut merged: Vec<(T, T, T)> = Vec::with_capacity(self.terms.len());
        for &(w, a, b) in &self.terms {
            let (w, a, b) = if b < a { (-w, b, a) } else { (w, a, b) };
            if a == b || w == T::zero() {
                continue;
            }
            match merged.iter_mut().find(|(_, ma, mb)| *ma == a && *mb == b) {
                Some(slot) => slot.0 += w,
                None => merged.push((w, a, b)),
            }
        }
        merged.retain(|(w, _, _)| *w != T::zero());
        self.terms = merged;
    }
}

/// Ordered-simplex weight of the chain `t ≥ x[0] ≥ x[1] ≥ x[2] ≥ x[3]`.
///
/// Strict violations give 0. A block of `m` equal pulse times gives `1/m!`;
/// pulses coinciding with `t` additionally count half each.
pub fn chain_weight<T: Real>(t: T, x: [T; 4]) -> T {
    let seq = [t, x[0], x[1], x[2], x[3]];
    for k in 0..4 {
        if seq[k + 1] > seq[k] {
            return T::zero();
        }
    }
    let mut w = T::one();
    let mut k = 0;
    while k < 5 {
        let mut end = k + 1;
        while end < 5 && seq[end] == seq[k] {
            end += 1;
        }
        if k == 0 {
            let m = end - 1;
            for r in 1..=m {
                w /= T::from_count(r) * T::lit(2.0);
            }
        } else {
            for r in 1..=(end - k) {
                w /= T::from_count(r);
            }
        }
        k = end;
    }
    w
}

/// Signed interval list of the four Heaviside cases for one pulse tuple.
pub fn heaviside_decomposition<T: Real>(theta: [T; 4], t: T) -> IntervalSum<T> {
    let mut out = IntervalSum::new();
    heaviside_into(theta, t, T::one(), &mut out);
    out
}

fn heaviside_into<T: Real>(theta: [T; 4], t: T, scale: T, out: &mut IntervalSum<T>) {
    let [t1, t2, t3, t4] = theta;
    let four = T::lit(4.0);

    let w = chain_weight(t, [t4, t3, t2, t1]);
    if w != T::zero() {
        let w = w * scale;
        out.push(w, t3, t4);
        out.push(-w, t4, t);
    }
    let w = chain_weight(t, [t1, t4, t3, t2]);
    if w != T::zero() {
        let w = w * scale;
        out.push(four * w, t3, t4);
        out.push(-four * w, t4, t1);
        out.push(-w, T::zero(), t3);
    }
    let w = chain_weight(t, [t1, t3, t2, t4]);
    if w != T::zero() {
        out.push(w * scale, t3, t1);
    }
    let w = chain_weight(t, [t1, t3, t4, t2]);
    if w != T::zero() {
        out.push(w * scale, t3, t1);
    }
}

#[inline]
fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

/// Exact `∫_a^b Π_s cos(ω_s(θ_s - u)) du`, oriented.
pub fn trig_product_integral<T: Real>(freqs: [T; 4], theta: [T; 4], a: T, b: T) -> T {
    let scale = freqs.iter().fold(T::zero(), |m, w| m.max(w.abs()));
    trig_product_with_scale(freqs, theta, a, b, scale)
}

#[inline]
fn trig_product_with_scale<T: Real>(freqs: [T; 4], theta: [T; 4], a: T, b: T, scale: T) -> T {
    let half = (b - a) / T::lit(2.0);
    if half == T::zero() {
        return T::zero();
    }
    let mid = (a + b) / T::lit(2.0);
    let p = [
        freqs[0] * (theta[0] - mid),
        freqs[1] * (theta[1] - mid),
        freqs[2] * (theta[2] - mid),
        freqs[3] * (theta[3] - mid),
    ];
    let tol = T::lit(RESONANCE_TOL) * scale;
    let mut acc = T::zero();
    for signs in 0..8u8 {
        let mut phase = p[0];
        let mut freq = freqs[0];
        for s in 1..4 {
            if signs & (1 << (s - 1)) == 0 {
                phase += p[s];
                freq += freqs[s];
            } else {
                phase -= p[s];
                freq -= freqs[s];
            }
        }
        let envelope = if freq.abs() < tol { T::one() } else { sinc(freq * half) };
        acc += phase.cos() * envelope;
    }
    acc * half / T::lit(4.0)
}

/// `Φ` for a single oscillator driven by four pulses at `pulse_times`.
pub fn phi_single<T: Real>(omega: T, pulse_times: [T; 4], t: T) -> Result<T> {
    if !(omega > T::zero()) {
        return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
    }
    if let Some(&late) = pulse_times.iter().find(|&&p| !(p < t)) {
        return Err(Error::InvalidInput(format!(
            "pulse at {late} is not before evaluation time {t}"
        )));
    }
    let th: Vec<T> = pulse_times.iter().map(|&p| p * omega).collect();
    let tn = t * omega;
    let freqs = [T::one(); 4];
    let mut acc = PairwiseAccumulator::with_capacity(256);
    for i1 in 0..4 {
        for i2 in 0..4 {
            for i3 in 0..4 {
                for i4 in 0..4 {
                    let theta = [th[i1], th[i2], th[i3], th[i4]];
                    let is = heaviside_decomposition(theta, tn);
                    acc.push(is.integrate(|a, b| trig_product_with_scale(freqs, theta, a, b, T::one())));
                }
            }
        }
    }
    let phi = acc.sum() / omega;
    if !phi.is_finite() {
        return Err(Error::NumericalFailure("non-finite phase".into()));
    }
    Ok(phi)
}

/// `F = -(λ²/2) Σ_{a>b} sin(Ω(τ_a - τ_b))` for a single oscillator.
pub fn quadratic_phase_delta<T: Real>(omega: T, pulse_times: &[T], strength: T) -> T {
    let mut acc = PairwiseAccumulator::new();
    for (a, &ta) in pulse_times.iter().enumerate() {
        for &tb in &pulse_times[..a] {
            let d = if ta >= tb { ta - tb } else { tb - ta };
            if d > T::zero() {
                acc.push((omega * d).sin());
            }
        }
    }
    -strength * strength / T::lit(2.0) * acc.sum()
}

fn check_chain<T: Real>(spec: &ChainSpec<T>, modes: &NormalModes<T>, schedule: &PulseSchedule<T>) -> Result<()> {
    if schedule.n_sites() != spec.n_sites() {
        return Err(Error::ScheduleMismatch(format!(
            "schedule has {} sites, chain has {}",
            schedule.n_sites(),
            spec.n_sites()
        )));
    }
    if modes.n_modes() != spec.n_sites() {
        return Err(Error::ScheduleMismatch(format!(
            "normal modes have {} entries, chain has {}",
            modes.n_modes(),
            spec.n_sites()
        )));
    }
    Ok(())
}

/// Pulses in nondimensional time: `(site, Ω·θ)`.
fn scaled_pulses<T: Real>(schedule: &PulseSchedule<T>, omega: T) -> Vec<(usize, T)> {
    schedule
        .pulses()
        .into_iter()
        .map(|(site, _, t)| (site, t * omega))
        .collect()
}

/// Dirac-train `F(t)` for a chain; only the pulse ordering matters, so the
/// evaluation time is not used.
pub fn quadratic_phase_pulsed<T: Real>(
    spec: &ChainSpec<T>,
    modes: &NormalModes<T>,
    schedule: &PulseSchedule<T>,
) -> Result<T> {
    check_chain(spec, modes, schedule)?;
    let omega = spec.trap_freq();
    let f = quadratic_phase_chain(modes, &scaled_pulses(schedule, omega), omega, schedule.strength());
    if !f.is_finite() {
        return Err(Error::NumericalFailure("non-finite quadratic phase".into()));
    }
    Ok(f)
}

/// Chain analogue of [`quadratic_phase_delta`], with the position kernel
/// `Σ_k P_ik P_jk (Ω/ω_k) sin(ω_k Δt)`.
fn quadratic_phase_chain<T: Real>(modes: &NormalModes<T>, pulses: &[(usize, T)], omega: T, strength: T) -> T {
    let p = modes.p_matrix();
    let freqs: Vec<T> = modes.frequencies().iter().map(|&w| w / omega).collect();
    let mut acc = PairwiseAccumulator::new();
    for &(ia, ta) in pulses {
        for &(ib, tb) in pulses {
            if ta > tb {
                let mut s = T::zero();
                for (k, &w) in freqs.iter().enumerate() {
                    s += p[(ia, k)] * p[(ib, k)] * (w * (ta - tb)).sin() / w;
                }
                acc.push(s);
            }
        }
    }
    -strength * strength / T::lit(2.0) * acc.sum()
}

fn finish<T: Real>(raw: T, omega: T, f: T, schedule: &PulseSchedule<T>) -> Result<PhaseResult<T>> {
    let phi = raw / omega;
    if !phi.is_finite() || !f.is_finite() {
        return Err(Error::NumericalFailure(
            "non-finite intermediate in pulse-train sum".into(),
        ));
    }
    Ok(PhaseResult {
        quadratic_coefficient: Some(f),
        quartic_coefficient: phi,
        evaluation_time: schedule.eval_time(),
        method: Method::ClosedForm,
        error_estimate: None,
    })
}

/// Multi-index iterator position → four pulse indices.
#[inline]
fn unpack4(mut idx: usize, base: usize) -> [usize; 4] {
    let mut out = [0; 4];
    for slot in out.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    out
}

/// Many-body `Φ(N)` through the factored weight `W[ν] = Σ_j Π_s O'_{jν_s}`.
pub fn phi_chain<T: Real>(
    spec: &ChainSpec<T>,
    modes: &NormalModes<T>,
    schedule: &PulseSchedule<T>,
) -> Result<PhaseResult<T>> {
    check_chain(spec, modes, schedule)?;
    let n = spec.n_sites();
    let omega = spec.trap_freq();
    let o = modes.o_matrix();
    let op = modes.o_prime_matrix();
    let freqs: Vec<T> = modes.frequencies().iter().map(|&w| w / omega).collect();
    let scale = freqs.iter().fold(T::zero(), |m, &w| m.max(w));

    let n4 = n * n * n * n;
    let w_nu: Vec<T> = (0..n4)
        .map(|idx| {
            let nu = unpack4(idx, n);
            let terms: Vec<T> = (0..n)
                .map(|j| op[(j, nu[0])] * op[(j, nu[1])] * op[(j, nu[2])] * op[(j, nu[3])])
                .collect();
            pairwise_sum(&terms)
        })
        .collect();

    let pulses = scaled_pulses(schedule, omega);
    let np = pulses.len();
    let tn = schedule.eval_time() * omega;

    let per_tuple: Vec<T> = (0..np * np * np * np)
        .into_par_iter()
        .map(|idx| {
            let pick = unpack4(idx, np);
            let theta = [
                pulses[pick[0]].1,
                pulses[pick[1]].1,
                pulses[pick[2]].1,
                pulses[pick[3]].1,
            ];
            let mut is = heaviside_decomposition(theta, tn);
            if is.is_empty() {
                return T::zero();
            }
            is.coalesce();
            if is.is_empty() {
                return T::zero();
            }
            let sites = [
                pulses[pick[0]].0,
                pulses[pick[1]].0,
                pulses[pick[2]].0,
                pulses[pick[3]].0,
            ];
            let mut acc = PairwiseAccumulator::with_capacity(n4);
            for (nidx, &w) in w_nu.iter().enumerate() {
                if w == T::zero() {
                    continue;
                }
                let nu = unpack4(nidx, n);
                let c = o[(sites[0], nu[0])] * o[(sites[1], nu[1])] * o[(sites[2], nu[2])] * o[(sites[3], nu[3])];
                if c == T::zero() {
                    continue;
                }
                let f = [freqs[nu[0]], freqs[nu[1]], freqs[nu[2]], freqs[nu[3]]];
                let integral = is.integrate(|a, b| trig_product_with_scale(f, theta, a, b, scale));
                acc.push(c * w * integral);
            }
            acc.sum()
        })
        .collect();

    let raw = pairwise_sum(&per_tuple);
    let f = quadratic_phase_chain(modes, &pulses, omega, schedule.strength());
    finish(raw, omega, f, schedule)
}

/// Reference implementation of [`phi_chain`]: the full nine-index loop over
/// pulse tuples, `j` and `ν` with no factoring.
pub fn phi_chain_naive<T: Real>(
    spec: &ChainSpec<T>,
    modes: &NormalModes<T>,
    schedule: &PulseSchedule<T>,
) -> Result<PhaseResult<T>> {
    check_chain(spec, modes, schedule)?;
    let n = spec.n_sites();
    let omega = spec.trap_freq();
    let o = modes.o_matrix();
    let op = modes.o_prime_matrix();
    let freqs: Vec<T> = modes.frequencies().iter().map(|&w| w / omega).collect();
    let scale = freqs.iter().fold(T::zero(), |m, &w| m.max(w));
    let tn = schedule.eval_time() * omega;

    let mut outer = PairwiseAccumulator::new();
    for i1 in 0..n {
        for a1 in 0..PULSES_PER_SITE {
            for i2 in 0..n {
                for a2 in 0..PULSES_PER_SITE {
                    for i3 in 0..n {
                        for a3 in 0..PULSES_PER_SITE {
                            for i4 in 0..n {
                                for a4 in 0..PULSES_PER_SITE {
                                    let sites = [i1, i2, i3, i4];
                                    let alphas = [a1, a2, a3, a4];
                                    let mut theta = [T::zero(); 4];
                                    for s in 0..4 {
                                        theta[s] = schedule.time_unchecked(sites[s], alphas[s]) * omega;
                                    }
                                    let is = heaviside_decomposition(theta, tn);
                                    let mut acc = PairwiseAccumulator::new();
                                    for j in 0..n {
                                        for nidx in 0..n * n * n * n {
                                            let nu = unpack4(nidx, n);
                                            let mut weight = T::one();
                                            for s in 0..4 {
                                                weight *= o[(sites[s], nu[s])] * op[(j, nu[s])];
                                            }
                                            let f = [freqs[nu[0]], freqs[nu[1]], freqs[nu[2]], freqs[nu[3]]];
                                            let v = is.integrate(|a, b| trig_product_with_scale(f, theta, a, b, scale));
                                            acc.push(weight * v);
                                        }
                                    }
                                    outer.push(acc.sum());
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let f = quadratic_phase_chain(modes, &scaled_pulses(schedule, omega), omega, schedule.strength());
    finish(outer.sum(), omega, f, schedule)
}

/// Chain and pulse parameters shared by every row of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTemplate<T> {
    pub mass: T,
    pub trap_freq: T,
    pub t0: T,
    pub strength: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow<T> {
    pub n: usize,
    pub omega_c: T,
    /// `None` when the row failed; see `failure`.
    pub phi: Option<T>,
    pub n_times_abs_phi1: T,
    pub failure: Option<Error>,
}

impl<T: Real> ScanRow<T> {
    pub fn abs_phi(&self) -> Option<T> {
        self.phi.map(|p| p.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanFit<T> {
    pub omega_c: T,
    /// `None` when fewer than two rows are usable.
    pub slope: Option<T>,
    pub residual: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult<T> {
    pub rows: Vec<ScanRow<T>>,
    pub fits: Vec<ScanFit<T>>,
}

/// `Φ(N)` over `n_range` for each coupling frequency, quarter-period spacing
/// with `τ = T/(2N)`. Rows are grouped by `Ω_c` and sorted by `N`.
pub fn scan_lattice<T: Real>(
    template: &ScanTemplate<T>,
    n_range: std::ops::RangeInclusive<usize>,
    omega_c_list: &[T],
) -> Result<ScanResult<T>> {
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(Error::InvalidInput(
            "n range must be non-empty and start at >= 1".into(),
        ));
    }
    if omega_c_list.is_empty() {
        return Err(Error::InvalidInput("coupling frequency list is empty".into()));
    }
    let single = ChainSpec::new(1, template.mass, template.trap_freq, T::zero())?;
    let phi1 = phi_chain(
        &single,
        &single.normal_modes()?,
        &PulseSchedule::quarter_period(1, template.trap_freq, template.t0, template.strength)?,
    )?
    .quartic_coefficient;

    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &omega_c in omega_c_list {
        let mut group = Vec::new();
        for n in n_range.clone() {
            let outcome = (|| {
                let spec = ChainSpec::new(n, template.mass, template.trap_freq, omega_c)?;
                let modes = spec.normal_modes()?;
                let schedule = PulseSchedule::quarter_period(n, template.trap_freq, template.t0, template.strength)?;
                phi_chain(&spec, &modes, &schedule)
            })();
            let (phi, failure) = match outcome {
                Ok(r) => (Some(r.quartic_coefficient), None),
                Err(e) => (None, Some(e)),
            };
            group.push(ScanRow {
                n,
                omega_c,
                phi,
                n_times_abs_phi1: T::from_count(n) * phi1.abs(),
                failure,
            });
        }
        let points: Vec<(usize, T)> = group.iter().filter_map(|r| r.phi.map(|p| (r.n, p))).collect();
        let (slope, residual) = match fit_scaling_exponent(&points) {
            Ok((s, r)) => (Some(s), Some(r)),
            Err(_) => (None, None),
        };
        fits.push(ScanFit {
            omega_c,
            slope,
            residual,
        });
        rows.extend(group);
    }
    Ok(ScanResult { rows, fits })
}

/// Least-squares slope of `log|Φ|` against `log N`, with the sum of squared residuals.
pub fn fit_scaling_exponent<T: Real>(rows: &[(usize, T)]) -> Result<(T, T)> {
    if rows.len() < 2 {
        return Err(Error::UndefinedFit(format!("need at least 2 rows, got {}", rows.len())));
    }
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for &(n, phi) in rows {
        if n == 0 {
            return Err(Error::UndefinedFit("N must be positive".into()));
        }
        let a = phi.abs();
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::UndefinedFit(format!("|phi| = {a} at N = {n}")));
        }
        xs.push(T::from_count(n).ln());
        ys.push(a.ln());
    }
    let k = T::from_count(rows.len());
    let mx = pairwise_sum(&xs) / k;
    let my = pairwise_sum(&ys) / k;
    let sxx: Vec<T> = xs.iter().map(|&x| (x - mx) * (x - mx)).collect();
    let sxy: Vec<T> = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).collect();
    let sxx = pairwise_sum(&sxx);
    if !(sxx > T::zero()) {
        return Err(Error::UndefinedFit("all rows share the same N".into()));
    }
    let slope = pairwise_sum(&sxy) / sxx;
    let intercept = my - slope * mx;
    let res: Vec<T> = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .collect();
    Ok((slope, pairwise_sum(&res)))
}
