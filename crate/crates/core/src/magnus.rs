//! Magnus-expansion phases for smooth coupling functions.
//!
//! The fifth-order term is an integral over the ordered simplex
//! `0 ≤ t₅ ≤ … ≤ t₁ ≤ t`. For every permutation in the table, all four
//! non-free times enter through the same function `s ↦ D_j(s, u)` of the free
//! time `u`, so the four-dimensional inner simplex collapses to powers of
//! `U_j(u) = ∫_u^t D_j(s, u) ds` and `L_j(u) = ∫_0^u D_j(s, u) ds`, and the
//! remaining integral over `u` is one-dimensional. Both cumulative integrals
//! are separable in the normal modes, so a single sweep over the panels
//! yields all of them.

use crate::error::{Error, Result};
use crate::lattice::{kernel_unchecked, ChainSpec, NormalModes};
use crate::pulsed::PulseSchedule;
use crate::quadrature::{GaussLegendre, Panel};
use crate::sum::pairwise_sum;
use crate::Real;

pub use crate::phase::{Method, PhaseResult};

/// Pulses of a Gaussian train are cut at this many widths.
const SUPPORT_WIDTHS: f64 = 8.0;
/// Half-width of the integration window around each pulse, in widths.
const WINDOW_WIDTHS: f64 = 6.0;
/// Panel length inside a pulse window, in widths.
const PANEL_WIDTHS: f64 = 3.0;
const AREA_TOL: f64 = 1e-10;
const PHI_TOL: f64 = 1e-3;
const QUADRATIC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
enum Shape<T> {
    Gaussian { centers: Vec<Vec<T>>, sigma: T, area: T },
    Constant { values: Vec<T>, start: T, end: T },
    Tabulated { times: Vec<T>, values: Vec<Vec<T>> },
}

/// Per-site coupling `g_i(t)`, identically zero outside `[t_min, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingFunction<T> {
    shape: Shape<T>,
    n_sites: usize,
    t_min: T,
    t_max: T,
}

impl<T: Real> CouplingFunction<T> {
    /// Normalized Gaussians of width `sigma` and area `area` at `centers[site]`.
    pub fn gaussian_train(centers: Vec<Vec<T>>, sigma: T, area: T) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidInput("coupling needs at least one site".into()));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "pulse width must be positive, got {sigma}"
            )));
        }
        if !area.is_finite() {
            return Err(Error::InvalidInput("pulse area must be finite".into()));
        }
        let all = centers.iter().flatten().copied();
        let lo = all.clone().fold(T::infinity(), T::min);
        let hi = all.fold(T::neg_infinity(), T::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput("pulse train has no finite centers".into()));
        }
        let reach = T::lit(SUPPORT_WIDTHS) * sigma;
        let g = Self {
            n_sites: centers.len(),
            shape: Shape::Gaussian { centers, sigma, area },
            t_min: lo - reach,
            t_max: hi + reach,
        };
        g.check_area()?;
        Ok(g)
    }

    /// Gaussian pulses at every time of `schedule`, with area `λ`.
    pub fn pulse_train(schedule: &PulseSchedule<T>, sigma: T) -> Result<Self> {
        let mut centers = vec![Vec::new(); schedule.n_sites()];
        for (site, _, t) in schedule.pulses() {
            centers[site].push(t);
        }
        Self::gaussian_train(centers, sigma, schedule.strength())
    }

    /// `g_i(t) = values[i]` on `[start, end]`.
    pub fn constant(values: Vec<T>, start: T, end: T) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("coupling needs at least one site".into()));
        }
        if !(end >= start) {
            return Err(Error::InvalidInput(format!("empty window [{start}, {end}]")));
        }
        Ok(Self {
            n_sites: values.len(),
            shape: Shape::Constant { values, start, end },
            t_min: start,
            t_max: end,
        })
    }

    pub fn zero(n_sites: usize) -> Result<Self> {
        Self::constant(vec![T::zero(); n_sites], T::zero(), T::zero())
    }

    /// Piecewise-linear through `(times[k], values[site][k])`; `times` strictly increasing.
    pub fn tabulated(times: Vec<T>, values: Vec<Vec<T>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("coupling needs at least one site".into()));
        }
        if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "tabulated times must be strictly increasing with at least two samples".into(),
            ));
        }
        if values.iter().any(|v| v.len() != times.len()) {
            return Err(Error::InvalidInput(
                "tabulated values do not match the time grid".into(),
            ));
        }
        Ok(Self {
            n_sites: values.len(),
            t_min: times[0],
            t_max: times[times.len() - 1],
            shape: Shape::Tabulated { times, values },
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn support(&self) -> (T, T) {
        (self.t_min, self.t_max)
    }

    /// Area per pulse for Gaussian trains.
    pub fn pulse_area(&self) -> Option<T> {
        match &self.shape {
            Shape::Gaussian { area, .. } => Some(*area),
            _ => None,
        }
    }

    pub fn sigma(&self) -> Option<T> {
        match &self.shape {
            Shape::Gaussian { sigma, .. } => Some(*sigma),
            _ => None,
        }
    }

    pub fn eval(&self, site: usize, t: T) -> T {
        if site >= self.n_sites || t < self.t_min || t > self.t_max {
            return T::zero();
        }
        match &self.shape {
            Shape::Gaussian { centers, sigma, area } => {
                let norm = *area / (*sigma * T::TAU().sqrt());
                let mut acc = T::zero();
                for &c in &centers[site] {
                    let z = (t - c) / *sigma;
                    acc += (-(z * z) / T::lit(2.0)).exp();
                }
                norm * acc
            }
            Shape::Constant { values, .. } => values[site],
            Shape::Tabulated { times, values } => {
                let k = match times.iter().position(|&x| x > t) {
                    Some(0) => return values[site][0],
                    Some(k) => k,
                    None => return values[site][times.len() - 1],
                };
                let (t0, t1) = (times[k - 1], times[k]);
                let (v0, v1) = (values[site][k - 1], values[site][k]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn eval_all(&self, t: T, out: &mut [T]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.eval(i, t);
        }
    }

    fn check_area(&self) -> Result<()> {
        let Shape::Gaussian { sigma, area, .. } = &self.shape else {
            return Ok(());
        };
        if *area == T::zero() {
            return Ok(());
        }
        let gl = GaussLegendre::<T>::new(24)?;
        let norm = *area / (*sigma * T::TAU().sqrt());
        let reach = T::lit(SUPPORT_WIDTHS);
        let mut parts = Vec::new();
        for k in 0..8 {
            let a = -reach + T::lit(2.0) * T::from_count(k);
            parts.push(gl.integrate(a, a + T::lit(2.0), |z| (-(z * z) / T::lit(2.0)).exp()));
        }
        let measured = norm * *sigma * pairwise_sum(&parts);
        if ((measured - *area) / *area).abs() > T::lit(AREA_TOL) {
            return Err(Error::NumericalFailure(format!(
                "pulse area {measured} does not match {area}"
            )));
        }
        Ok(())
    }

    /// Integration layout on `[0, t]`: panels flagged active where `g` may be nonzero.
    fn layout(&self, t: T, plan: &QuadraturePlan, max_gap: T) -> Vec<(Panel<T>, bool)> {
        let mut windows: Vec<(T, T, T)> = Vec::new();
        match &self.shape {
            Shape::Gaussian { centers, sigma, .. } if plan.window_restriction => {
                let half = T::lit(WINDOW_WIDTHS) * *sigma;
                let mut cs: Vec<T> = centers.iter().flatten().copied().collect();
                cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for c in cs {
                    let (a, b) = (c - half, c + half);
                    match windows.last_mut() {
                        Some(w) if a <= w.1 => w.1 = w.1.max(b),
                        _ => windows.push((a, b, T::zero())),
                    }
                }
                let step = (T::lit(PANEL_WIDTHS) * *sigma).min(max_gap);
                for w in &mut windows {
                    w.2 = step;
                }
            }
            Shape::Gaussian { sigma, .. } => {
                let step = (T::lit(PANEL_WIDTHS) * *sigma).min(max_gap);
                windows.push((self.t_min, self.t_max, step));
            }
            Shape::Constant { values, start, end } => {
                if values.iter().any(|v| *v != T::zero()) && end > start {
                    windows.push((*start, *end, max_gap));
                }
            }
            Shape::Tabulated { times, .. } => {
                for w in times.windows(2) {
                    windows.push((w[0], w[1], max_gap));
                }
            }
        }

        let mut out = Vec::new();
        let mut cursor = T::zero();
        let push_split = |out: &mut Vec<(Panel<T>, bool)>, a: T, b: T, step: T, active: bool| {
            if !(b > a) {
                return;
            }
            let pieces = ((b - a) / step).ceil().to_usize().unwrap_or(1).max(1);
            let h = (b - a) / T::from_count(pieces);
            for k in 0..pieces {
                let lo = a + h * T::from_count(k);
                let hi = if k + 1 == pieces {
                    b
                } else {
                    a + h * T::from_count(k + 1)
                };
                out.push((Panel { a: lo, b: hi }, active));
            }
        };
        for (a, b, step) in windows {
            let a = a.max(T::zero()).max(cursor);
            let b = b.min(t);
            if !(b > a) {
                continue;
            }
            push_split(&mut out, cursor, a, max_gap, false);
            push_split(&mut out, a, b, step, true);
            cursor = b;
        }
        push_split(&mut out, cursor, t, max_gap, false);
        out
    }

    /// Sum of `∫|g_i|` over all sites, used as a scale for tolerances.
    fn abs_mass(&self) -> T {
        match &self.shape {
            Shape::Gaussian { centers, area, .. } => T::from_count(centers.iter().map(Vec::len).sum()) * area.abs(),
            Shape::Constant { values, start, end } => values.iter().map(|v| v.abs()).sum::<T>() * (*end - *start),
            Shape::Tabulated { times, values } => {
                let mut acc = T::zero();
                for v in values {
                    for k in 1..times.len() {
                        acc += (v[k].abs() + v[k - 1].abs()) / T::lit(2.0) * (times[k] - times[k - 1]);
                    }
                }
                acc
            }
        }
    }
}

/// The four permutations of the fifth-order term with their coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationTable<T> {
    entries: [([usize; 5], T); 4],
}

impl<T: Real> PermutationTable<T> {
    /// `(σ, λ_σ)` with `σ` written 1-based as `(σ(1), …, σ(5))`.
    pub fn entries(&self) -> &[([usize; 5], T); 4] {
        &self.entries
    }

    pub fn coefficient(&self, sigma: [usize; 5]) -> Option<T> {
        self.entries.iter().find(|(s, _)| *s == sigma).map(|(_, c)| *c)
    }

    pub fn coefficient_sum(&self) -> T {
        self.entries.iter().map(|(_, c)| *c).sum()
    }
}

pub fn permutation_table<T: Real>() -> PermutationTable<T> {
    let thirtieth = T::one() / T::lit(30.0);
    PermutationTable {
        entries: [
            ([5, 4, 3, 2, 1], -thirtieth),
            ([1, 5, 4, 2, 3], T::lit(2.0) / T::lit(15.0)),
            ([1, 4, 3, 2, 5], -thirtieth),
            ([1, 5, 3, 2, 4], -thirtieth),
        ],
    }
}

/// Quadrature settings for the smooth-coupling engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraturePlan {
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Integrate only within ±6σ of pulse centers for Gaussian trains.
    pub window_restriction: bool,
    /// Also evaluate at `2 * order` and report that value with `|Δ|` as the error.
    pub richardson: bool,
}

impl Default for QuadraturePlan {
    fn default() -> Self {
        Self {
            order: 24,
            window_restriction: true,
            richardson: true,
        }
    }
}

impl QuadraturePlan {
    pub fn with_order(order: usize) -> Result<Self> {
        let plan = Self {
            order,
            ..Self::default()
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 4 {
            return Err(Error::InvalidInput(format!(
                "quadrature order must be >= 4, got {}",
                self.order
            )));
        }
        Ok(())
    }
}

fn panel_cap<T: Real>(omega_max: T) -> T {
    T::PI() / omega_max
}

/// Runs `f` at the plan order and, with refinement on, at twice the order.
/// Returns `(value, error estimate)`.
fn refine<T: Real>(
    plan: &QuadraturePlan,
    tol: T,
    floor: T,
    mut f: impl FnMut(usize) -> Result<T>,
) -> Result<(T, Option<T>)> {
    plan.validate()?;
    let coarse = f(plan.order)?;
    if !coarse.is_finite() {
        return Err(Error::NumericalFailure("non-finite quadrature value".into()));
    }
    if !plan.richardson {
        return Ok((coarse, None));
    }
    let fine = f(2 * plan.order)?;
    if !fine.is_finite() {
        return Err(Error::NumericalFailure("non-finite quadrature value".into()));
    }
    let delta = (fine - coarse).abs();
    if delta > tol * fine.abs().max(coarse.abs()) + floor {
        return Err(Error::NonConvergence {
            order: plan.order,
            fine: 2 * plan.order,
            coarse: coarse.to_f64_lossy(),
            fine_value: fine.to_f64_lossy(),
        });
    }
    Ok((fine, Some(delta)))
}

/// `F(t) = ½ ∫₀ᵗ (g' G'' - g'' G') ds` with `g' = g cos Ωs`, `g'' = g sin Ωs`.
pub fn quadratic_phase<T: Real>(g: &CouplingFunction<T>, omega: T, t: T, plan: &QuadraturePlan) -> Result<T> {
    quadratic_phase_with_error(g, omega, t, plan).map(|(f, _)| f)
}

/// As [`quadratic_phase`], also returning the refinement error estimate.
pub fn quadratic_phase_with_error<T: Real>(
    g: &CouplingFunction<T>,
    omega: T,
    t: T,
    plan: &QuadraturePlan,
) -> Result<(T, Option<T>)> {
    if g.n_sites() != 1 {
        return Err(Error::InvalidInput(format!(
            "quadratic phase needs a single-site coupling, got {} sites",
            g.n_sites()
        )));
    }
    if !(omega > T::zero()) {
        return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
    }
    if !(t >= T::zero()) {
        return Err(Error::InvalidInput(format!("t must be >= 0, got {t}")));
    }
    let panels = g.layout(t, plan, panel_cap(omega));
    let reference = g.support().0;
    let mass = g.abs_mass();
    let floor = T::lit(1e-14) * mass * mass;
    refine(plan, T::lit(QUADRATIC_TOL), floor, |order| {
        let gl = GaussLegendre::<T>::new(order)?;
        let mut gc = vec![T::zero(); order];
        let mut gs = vec![T::zero(); order];
        let mut cc = vec![T::zero(); order];
        let mut cs = vec![T::zero(); order];
        let (mut run_c, mut run_s) = (T::zero(), T::zero());
        let mut parts = Vec::new();
        for (p, active) in &panels {
            if !active {
                continue;
            }
            let xs: Vec<T> = gl.nodes_on(p.a, p.b).collect();
            for (k, &x) in xs.iter().enumerate() {
                let v = g.eval(0, x);
                let ph = omega * (x - reference);
                gc[k] = v * ph.cos();
                gs[k] = v * ph.sin();
            }
            gl.cumulate(p.a, p.b, &gc, &mut cc);
            gl.cumulate(p.a, p.b, &gs, &mut cs);
            let mut acc = T::zero();
            for (k, w) in gl.weights_on(p.a, p.b).enumerate() {
                acc += w * (gc[k] * (run_s + cs[k]) - gs[k] * (run_c + cc[k]));
            }
            parts.push(acc);
            run_c += weighted(&gl, p, &gc);
            run_s += weighted(&gl, p, &gs);
        }
        Ok(pairwise_sum(&parts) / T::lit(2.0))
    })
}

fn weighted<T: Real>(gl: &GaussLegendre<T>, p: &Panel<T>, samples: &[T]) -> T {
    let mut acc = T::zero();
    for (w, &s) in gl.weights_on(p.a, p.b).zip(samples) {
        acc += w * s;
    }
    acc
}

/// Raw fifth-order simplex integral `Σ_σ λ_σ ∫ Σ_j [Π D_j − swap]` at one order.
fn magnus5_raw<T: Real>(
    modes: &NormalModes<T>,
    g: &CouplingFunction<T>,
    panels: &[(Panel<T>, bool)],
    order: usize,
) -> Result<T> {
    let n = modes.n_modes();
    let o = modes.o_matrix();
    let op = modes.o_prime_matrix();
    let freqs = modes.frequencies();
    let reference = g.support().0;
    let gl = GaussLegendre::<T>::new(order)?;

    // Cumulative mode-projected integrals from 0 to each node, plus totals.
    let mut nodes: Vec<(T, T)> = Vec::with_capacity(panels.len() * order);
    let mut cum_c: Vec<T> = Vec::with_capacity(panels.len() * order * n);
    let mut cum_s: Vec<T> = Vec::with_capacity(panels.len() * order * n);
    let mut run_c = vec![T::zero(); n];
    let mut run_s = vec![T::zero(); n];
    let mut gi = vec![T::zero(); n];
    let mut sc = vec![vec![T::zero(); order]; n];
    let mut ss = vec![vec![T::zero(); order]; n];
    let mut out_c = vec![T::zero(); order];
    let mut out_s = vec![T::zero(); order];
    for (p, active) in panels {
        let xs: Vec<T> = gl.nodes_on(p.a, p.b).collect();
        let ws: Vec<T> = gl.weights_on(p.a, p.b).collect();
        if *active {
            for (m, &x) in xs.iter().enumerate() {
                g.eval_all(x, &mut gi);
                for k in 0..n {
                    let mut proj = T::zero();
                    for (i, &v) in gi.iter().enumerate() {
                        proj += v * o[(i, k)];
                    }
                    let ph = freqs[k] * (x - reference);
                    sc[k][m] = proj * ph.cos();
                    ss[k][m] = proj * ph.sin();
                }
            }
        }
        let base = cum_c.len();
        cum_c.resize(base + order * n, T::zero());
        cum_s.resize(base + order * n, T::zero());
        for k in 0..n {
            if *active {
                gl.cumulate(p.a, p.b, &sc[k], &mut out_c);
                gl.cumulate(p.a, p.b, &ss[k], &mut out_s);
            }
            for m in 0..order {
                let (dc, ds) = if *active {
                    (out_c[m], out_s[m])
                } else {
                    (T::zero(), T::zero())
                };
                cum_c[base + m * n + k] = run_c[k] + dc;
                cum_s[base + m * n + k] = run_s[k] + ds;
            }
            if *active {
                run_c[k] += weighted(&gl, p, &sc[k]);
                run_s[k] += weighted(&gl, p, &ss[k]);
            }
        }
        for m in 0..order {
            nodes.push((xs[m], ws[m]));
        }
    }

    let c24 = T::lit(24.0);
    let c6 = T::lit(6.0);
    let mut terms = Vec::with_capacity(nodes.len());
    let mut lower = vec![T::zero(); n];
    let mut upper = vec![T::zero(); n];
    for (idx, &(u, w)) in nodes.iter().enumerate() {
        let row = idx * n;
        lower.iter_mut().for_each(|x| *x = T::zero());
        upper.iter_mut().for_each(|x| *x = T::zero());
        for k in 0..n {
            let ph = freqs[k] * (u - reference);
            let (c, s) = (ph.cos(), ph.sin());
            let lk = c * cum_c[row + k] + s * cum_s[row + k];
            let uk = c * (run_c[k] - cum_c[row + k]) + s * (run_s[k] - cum_s[row + k]);
            for j in 0..n {
                lower[j] += op[(j, k)] * lk;
                upper[j] += op[(j, k)] * uk;
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
    Ok(pairwise_sum(&terms) / T::lit(30.0))
}

/// Fifth-order phase for a smooth coupling by simplex quadrature.
///
/// For Gaussian trains the result is normalized as `Φ = 30·raw/λ⁴`; for other
/// couplings `quartic_coefficient` is the raw simplex integral.
pub fn magnus5_quadrature<T: Real>(
    spec: &ChainSpec<T>,
    modes: &NormalModes<T>,
    g: &CouplingFunction<T>,
    t: T,
    plan: &QuadraturePlan,
) -> Result<PhaseResult<T>> {
    if modes.n_modes() != spec.n_sites() || g.n_sites() != spec.n_sites() {
        return Err(Error::ScheduleMismatch(format!(
            "chain has {} sites, modes {}, coupling {}",
            spec.n_sites(),
            modes.n_modes(),
            g.n_sites()
        )));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("t must be >= 0, got {t}")));
    }
    let panels = g.layout(t, plan, panel_cap(modes.max_frequency()));
    let mass = g.abs_mass();
    let floor = T::lit(1e-13) * mass * mass * mass * mass * (t + T::one() / spec.trap_freq());
    let (raw, err) = refine(plan, T::lit(PHI_TOL), floor, |order| {
        magnus5_raw(modes, g, &panels, order)
    })?;

    let (quartic, err) = match g.pulse_area() {
        Some(area) if area != T::zero() => {
            let s = T::lit(30.0) / (area * area * area * area);
            (raw * s, err.map(|e| e * s))
        }
        Some(_) => (T::zero(), err.map(|_| T::zero())),
        None => (raw, err),
    };
    let quadratic = if spec.n_sites() == 1 {
        Some(quadratic_phase(g, spec.trap_freq(), t, plan)?)
    } else {
        None
    };
    Ok(PhaseResult {
        quadratic_coefficient: quadratic,
        quartic_coefficient: quartic,
        evaluation_time: t,
        method: Method::Quadrature,
        error_estimate: err,
    })
}

fn coupling_kernel_at<T: Real>(modes: &NormalModes<T>, g: &CouplingFunction<T>, j: usize, t: T, tp: T) -> T {
    let mut acc = T::zero();
    for i in 0..modes.n_modes() {
        let v = g.eval(i, t);
        if v != T::zero() {
            acc += v * kernel_unchecked(modes, i, j, t - tp);
        }
    }
    acc
}

/// Pointwise integrand of one permutation at `times = (t₁, …, t₅)`:
/// `Σ_j [Π_{s≤4} D_j(t_{σ(s)}, t_{σ(5)}) - (t_{σ(4)} ↔ t_{σ(5)})]`, unweighted.
pub fn permutation_integrand<T: Real>(
    modes: &NormalModes<T>,
    g: &CouplingFunction<T>,
    sigma: [usize; 5],
    times: [T; 5],
) -> Result<T> {
    let mut seen = [false; 5];
    for &s in &sigma {
        if !(1..=5).contains(&s) || seen[s - 1] {
            return Err(Error::InvalidInput(format!("{sigma:?} is not a permutation of 1..=5")));
        }
        seen[s - 1] = true;
    }
    let at = |k: usize| times[sigma[k] - 1];
    let mut acc = T::zero();
    for j in 0..modes.n_modes() {
        let free = at(4);
        let mut direct = T::one();
        for s in 0..4 {
            direct *= coupling_kernel_at(modes, g, j, at(s), free);
        }
        let free = at(3);
        let mut swapped = T::one();
        for s in [0, 1, 2, 4] {
            swapped *= coupling_kernel_at(modes, g, j, at(s), free);
        }
        acc += direct - swapped;
    }
    Ok(acc)
}

/// `Σ_σ λ_σ` times [`permutation_integrand`].
pub fn magnus5_integrand<T: Real>(modes: &NormalModes<T>, g: &CouplingFunction<T>, times: [T; 5]) -> Result<T> {
    let table = permutation_table::<T>();
    let mut acc = T::zero();
    for (sigma, c) in table.entries() {
        acc += *c * permutation_integrand(modes, g, *sigma, times)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const CLOSED: f64 = 5.0 * (9.0 * PI - 16.0) / 32.0;

    fn single(omega: f64) -> (ChainSpec<f64>, NormalModes<f64>) {
        let spec = ChainSpec::new(1, 1.0, omega, 0.0).unwrap();
        let modes = spec.normal_modes().unwrap();
        (spec, modes)
    }

    #[test]
    fn table_examples() {
        let t = permutation_table::<f64>();
        assert_eq!(t.entries().len(), 4);
        assert_eq!(t.coefficient([1, 5, 4, 2, 3]), Some(2.0 / 15.0));
        assert!((t.coefficient_sum() - 1.0 / 30.0).abs() < 1e-16);
        assert_eq!(t.coefficient([1, 2, 3, 4, 5]), None);
    }

    #[test]
    fn plan_validation() {
        assert!(QuadraturePlan::with_order(3).is_err());
        assert_eq!(QuadraturePlan::default().order, 24);
    }

    #[test]
    fn coupling_shapes() {
        let g = CouplingFunction::gaussian_train(vec![vec![1.0]], 0.1, 2.0).unwrap();
        assert!((g.eval(0, 1.0) - 2.0 / (0.1 * (2.0 * PI).sqrt())).abs() < 1e-12);
        assert_eq!(g.eval(0, 1.9), 0.0);
        assert_eq!(g.eval(1, 1.0), 0.0);
        let c = CouplingFunction::constant(vec![3.0], 1.0, 2.0).unwrap();
        assert_eq!(c.eval(0, 1.5), 3.0);
        assert_eq!(c.eval(0, 2.5), 0.0);
        let tab = CouplingFunction::tabulated(vec![0.0f64, 1.0, 3.0], vec![vec![0.0, 2.0, 0.0]]).unwrap();
        assert!((tab.eval(0, 0.5) - 1.0).abs() < 1e-15);
        assert!((tab.eval(0, 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(tab.eval(0, 3.5), 0.0);
        assert!(CouplingFunction::tabulated(vec![0.0, 0.0], vec![vec![1.0, 1.0]]).is_err());
        assert!(CouplingFunction::<f64>::gaussian_train(vec![vec![0.0]], 0.0, 1.0).is_err());
    }

    #[test]
    fn zero_coupling_gives_zero() {
        let (spec, modes) = single(1.0);
        let g = CouplingFunction::zero(1).unwrap();
        let r = magnus5_quadrature(&spec, &modes, &g, 5.0, &QuadraturePlan::default()).unwrap();
        assert_eq!(r.quartic_coefficient, 0.0);
        assert_eq!(quadratic_phase(&g, 1.0, 5.0, &QuadraturePlan::default()).unwrap(), 0.0);
    }

    #[test]
    fn swap_antisymmetry_at_coincident_points() {
        let spec = ChainSpec::new(2, 1.0, 1.0, 0.6).unwrap();
        let modes = spec.normal_modes().unwrap();
        let g = CouplingFunction::constant(vec![0.7, -1.3], 0.0, 10.0).unwrap();
        for (sigma, _) in permutation_table::<f64>().entries() {
            let mut times = [4.1f64, 3.3, 2.2, 1.7, 0.9];
            times[sigma[3] - 1] = 2.5;
            times[sigma[4] - 1] = 2.5;
            let v = permutation_integrand(&modes, &g, *sigma, times).unwrap();
            assert!(v.abs() < 1e-12, "{v}");
        }
    }

    /// Direct nested Gauss–Legendre over the five-dimensional simplex.
    fn brute_simplex(modes: &NormalModes<f64>, g: &CouplingFunction<f64>, t: f64, m: usize) -> f64 {
        let gl = GaussLegendre::<f64>::new(m).unwrap();
        let mut total = 0.0;
        for (t1, w1) in gl.nodes_on(0.0, t).zip(gl.weights_on(0.0, t)) {
            for (t2, w2) in gl.nodes_on(0.0, t1).zip(gl.weights_on(0.0, t1)) {
                for (t3, w3) in gl.nodes_on(0.0, t2).zip(gl.weights_on(0.0, t2)) {
                    for (t4, w4) in gl.nodes_on(0.0, t3).zip(gl.weights_on(0.0, t3)) {
                        for (t5, w5) in gl.nodes_on(0.0, t4).zip(gl.weights_on(0.0, t4)) {
                            let v = magnus5_integrand(modes, g, [t1, t2, t3, t4, t5]).unwrap();
                            total += w1 * w2 * w3 * w4 * w5 * v;
                        }
                    }
                }
            }
        }
        total
    }

    #[test]
    fn reduction_matches_brute_force_simplex() {
        let spec = ChainSpec::new(2, 1.0, 1.0, 0.8).unwrap();
        let modes = spec.normal_modes().unwrap();
        let g = CouplingFunction::constant(vec![1.0, 0.4], 0.0, 2.5).unwrap();
        let t = 2.5;
        let plan = QuadraturePlan::default();
        let fast = magnus5_quadrature(&spec, &modes, &g, t, &plan)
            .unwrap()
            .quartic_coefficient;
        let brute = brute_simplex(&modes, &g, t, 10);
        assert!((fast - brute).abs() < 1e-9 * brute.abs().max(1e-3), "{fast} vs {brute}");
    }

    #[test]
    fn quartic_scales_with_fourth_power_of_coupling() {
        let (spec, modes) = single(1.0);
        let plan = QuadraturePlan::default();
        let tab =
            |c: f64| CouplingFunction::tabulated(vec![0.0, 1.0, 2.0, 4.0], vec![vec![0.0, c, 0.5 * c, 0.0]]).unwrap();
        let a = magnus5_quadrature(&spec, &modes, &tab(1.0), 5.0, &plan)
            .unwrap()
            .quartic_coefficient;
        let b = magnus5_quadrature(&spec, &modes, &tab(1.7), 5.0, &plan)
            .unwrap()
            .quartic_coefficient;
        assert!((b - 1.7f64.powi(4) * a).abs() < 1e-10 * b.abs());
    }

    #[test]
    fn gaussian_train_approaches_closed_form() {
        let omega = 1.0;
        let (spec, modes) = single(omega);
        let sched = PulseSchedule::quarter_period(1, omega, 2.0, 1.0).unwrap();
        let period = sched.period();
        let plan = QuadraturePlan::default();
        let mut errs = Vec::new();
        for div in [50.0, 100.0, 200.0, 400.0] {
            let g = CouplingFunction::pulse_train(&sched, period / div).unwrap();
            let r = magnus5_quadrature(&spec, &modes, &g, sched.eval_time(), &plan).unwrap();
            errs.push((r.quartic_coefficient * omega - CLOSED).abs() / CLOSED);
        }
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] < 0.02, "{errs:?}");
    }

    #[test]
    fn embedded_single_site_is_identical() {
        let omega = 1.4;
        let (spec, modes) = single(omega);
        let embedded = ChainSpec::new(1, 3.0, omega, 0.0).unwrap();
        let sched = PulseSchedule::quarter_period(1, omega, 2.0, 0.8).unwrap();
        let g = CouplingFunction::pulse_train(&sched, sched.period() / 100.0).unwrap();
        let plan = QuadraturePlan::default();
        let a = magnus5_quadrature(&spec, &modes, &g, sched.eval_time(), &plan).unwrap();
        let b = magnus5_quadrature(
            &embedded,
            &embedded.normal_modes().unwrap(),
            &g,
            sched.eval_time(),
            &plan,
        )
        .unwrap();
        assert!((a.quartic_coefficient - b.quartic_coefficient).abs() < 1e-12 * a.quartic_coefficient.abs());
    }

    #[test]
    fn quadratic_phase_of_single_and_four_pulses() {
        let omega = 1.0f64;
        let plan = QuadraturePlan::default();
        let sched = PulseSchedule::quarter_period(1, omega, 2.0, 0.5).unwrap();
        let g = CouplingFunction::pulse_train(&sched, sched.period() / 400.0).unwrap();
        let f = quadratic_phase(&g, omega, sched.eval_time(), &plan).unwrap();
        assert!((f + 0.25).abs() < 0.01 * 0.25, "{f}");

        let one = CouplingFunction::gaussian_train(vec![vec![1.0]], 0.002, 0.5).unwrap();
        let f1 = quadratic_phase(&one, omega, 3.0, &plan).unwrap();
        assert!(f1.abs() < 1e-3, "{f1}");
        let f2 = quadratic_phase(&one, omega, 5.0, &plan).unwrap();
        assert!((f1 - f2).abs() < 1e-14);
    }
}
