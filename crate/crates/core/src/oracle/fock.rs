//! Truncated Fock-space operator algebra in units with `ħ = m = Ω = 1`.
//!
//! The photon number is set to 1, so the interaction Hamiltonian at time
//! `t` reads `H(t) = g q(t) + (β/3) p(t)⁴`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::Real;

type CMatrix<T> = Matrix<Complex<T>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockTruncation {
    dimension: usize,
    inner_block: usize,
}

impl Default for FockTruncation {
    fn default() -> Self {
        Self {
            dimension: 40,
            inner_block: 20,
        }
    }
}

impl FockTruncation {
    pub fn new(dimension: usize, inner_block: usize) -> Result<Self> {
        if inner_block < 2 || inner_block > dimension {
            return Err(Error::InvalidInput(format!(
                "need 2 <= inner block <= dimension, got {inner_block} and {dimension}"
            )));
        }
        Ok(Self { dimension, inner_block })
    }

    /// Inner block defaults to half the dimension.
    pub fn with_dimension(dimension: usize) -> Result<Self> {
        Self::new(dimension, dimension / 2)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn inner_block(&self) -> usize {
        self.inner_block
    }
}

#[derive(Debug, Clone)]
pub struct FockOperators<T> {
    pub q: CMatrix<T>,
    pub p: CMatrix<T>,
    pub q_t: CMatrix<T>,
    pub p_t: CMatrix<T>,
}

fn ladder<T: Real>(d: usize) -> CMatrix<T> {
    Matrix::from_fn(d, d, |i, j| {
        if j == i + 1 {
            Complex::new(T::from_count(j).sqrt(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

fn quadratures<T: Real>(d: usize) -> (CMatrix<T>, CMatrix<T>) {
    let a = ladder::<T>(d);
    let ad = a.transpose();
    let r = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    let q = a.add(&ad).scale(r);
    let p = ad.sub(&a).scale(Complex::new(T::zero(), T::FRAC_1_SQRT_2()));
    (q, p)
}

fn rotated<T: Real>(q: &CMatrix<T>, p: &CMatrix<T>, angle: T) -> (CMatrix<T>, CMatrix<T>) {
    let (c, s) = (
        Complex::new(angle.cos(), T::zero()),
        Complex::new(angle.sin(), T::zero()),
    );
    let qt = q.scale(c).add(&p.scale(s));
    let pt = p.scale(c).sub(&q.scale(s));
    (qt, pt)
}

/// `q`, `p` and their free evolution to time `t` at trap frequency `omega`.
pub fn fock_operators<T: Real>(trunc: &FockTruncation, omega: T, t: T) -> FockOperators<T> {
    let (q, p) = quadratures::<T>(trunc.dimension);
    let (q_t, p_t) = rotated(&q, &p, omega * t);
    FockOperators { q, p, q_t, p_t }
}

fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn block_deviation<T: Real>(m: &CMatrix<T>, target: &CMatrix<T>, d: usize) -> T {
    m.block(d).sub(&target.block(d)).max_norm_by(|z: Complex<T>| z.norm())
}

/// Largest inner-block deviation of
/// `[q(t₁), q(t₂)] = i sin(Ω(t₂-t₁))` and `[q(t₁), p(t₂)ⁿ] = n i p(t₂)ⁿ⁻¹ cos(Ω(t₂-t₁))`.
pub fn check_commutator_identities<T: Real>(trunc: &FockTruncation, omega: T, t1: T, t2: T, n: u32) -> Result<T> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidInput(format!("power must be in 1..=4, got {n}")));
    }
    let dim = trunc.dimension;
    let d = trunc.inner_block;
    let (q, p) = quadratures::<T>(dim);
    let (q1, _) = rotated(&q, &p, omega * t1);
    let (q2, p2) = rotated(&q, &p, omega * t2);
    let dt = omega * (t2 - t1);
    let id = Matrix::<Complex<T>>::identity(dim);

    let lhs = q1.commutator(&q2);
    let rhs = id.scale(Complex::new(T::zero(), dt.sin()));
    let first = block_deviation(&lhs, &rhs, d);

    let lhs = q1.commutator(&p2.pow(n));
    let rhs = p2
        .pow(n - 1)
        .scale(Complex::new(T::zero(), T::from_count(n as usize) * dt.cos()));
    let second = block_deviation(&lhs, &rhs, d);
    Ok(first.max(second))
}

fn hamiltonian<T: Real>(q: &CMatrix<T>, p: &CMatrix<T>, omega: T, t: T, g: T, beta: T) -> CMatrix<T> {
    let (qt, pt) = rotated(q, p, omega * t);
    qt.scale(real(g)).add(&pt.pow(4).scale(real(beta / T::lit(3.0))))
}

fn hamiltonians<T: Real>(trunc: &FockTruncation, omega: T, times: [T; 5], g: [T; 5], beta: T) -> Vec<CMatrix<T>> {
    let (q, p) = quadratures::<T>(trunc.dimension);
    (0..5)
        .map(|k| hamiltonian(&q, &p, omega, times[k], g[k], beta))
        .collect()
}

/// `[H₁, [H₂, [H₃, [H₄, H₅]]]]` with `Hₖ = H(tₖ)`.
pub fn nested_commutator<T: Real>(trunc: &FockTruncation, omega: T, times: [T; 5], g: [T; 5], beta: T) -> CMatrix<T> {
    let h = hamiltonians(trunc, omega, times, g, beta);
    let inner = h[3].commutator(&h[4]);
    let inner = h[2].commutator(&inner);
    let inner = h[1].commutator(&inner);
    h[0].commutator(&inner)
}

/// Scalar value of the nested commutator at first order in `β`:
/// `(4!/3) β [g₁g₂g₃g₄ Π_{j≤4} cos(Ω(t₅-tⱼ)) - (t₄ ↔ t₅)]`.
pub fn nested_commutator_analytic<T: Real>(omega: T, times: [T; 5], g: [T; 5], beta: T) -> T {
    let eight = T::lit(8.0);
    let mut direct = T::one();
    for j in 0..4 {
        direct *= g[j] * (omega * (times[4] - times[j])).cos();
    }
    let mut swapped = T::one();
    for j in [0, 1, 2, 4] {
        swapped *= g[j] * (omega * (times[3] - times[j])).cos();
    }
    eight * beta * (direct - swapped)
}

/// Max inner-block deviation of the matrix nested commutator from the analytic
/// scalar, relative to `|analytic|` (absolute when the analytic value is 0).
pub fn check_nested_commutator<T: Real>(trunc: &FockTruncation, omega: T, times: [T; 5], g: [T; 5], beta: T) -> T {
    let m = nested_commutator(trunc, omega, times, g, beta);
    let a = nested_commutator_analytic(omega, times, g, beta);
    let target = Matrix::<Complex<T>>::identity(trunc.dimension).scale(real(a));
    let dev = block_deviation(&m, &target, trunc.inner_block);
    if a == T::zero() {
        dev
    } else {
        dev / a.abs()
    }
}

/// As [`check_nested_commutator`] but on the odd part `(M(β) - M(-β))/2`,
/// which cancels the even `O(β²)` residue and leaves `O(β³)`.
pub fn check_nested_commutator_odd<T: Real>(trunc: &FockTruncation, omega: T, times: [T; 5], g: [T; 5], beta: T) -> T {
    let plus = nested_commutator(trunc, omega, times, g, beta);
    let minus = nested_commutator(trunc, omega, times, g, -beta);
    let odd = plus.sub(&minus).scale(real(T::lit(0.5)));
    let a = nested_commutator_analytic(omega, times, g, beta);
    let target = Matrix::<Complex<T>>::identity(trunc.dimension).scale(real(a));
    let dev = block_deviation(&odd, &target, trunc.inner_block);
    if a == T::zero() {
        dev
    } else {
        dev / a.abs()
    }
}

fn block_norm<T: Real>(m: &CMatrix<T>, d: usize) -> T {
    m.block(d).max_norm_by(|z: Complex<T>| z.norm())
}

/// Inner-block size of the dropped term `[[H₅, H₁], [H₄, [H₂, H₃]]]`.
pub fn dropped_term_norm<T: Real>(trunc: &FockTruncation, omega: T, times: [T; 5], g: [T; 5], beta: T) -> T {
    let h = hamiltonians(trunc, omega, times, g, beta);
    let left = h[4].commutator(&h[0]);
    let right = h[3].commutator(&h[1].commutator(&h[2]));
    block_norm(&left.commutator(&right), trunc.inner_block)
}

/// Inner-block size of the kept term `[H₁, [H₂, [H₃, [H₄, H₅]]]]`.
pub fn kept_term_norm<T: Real>(trunc: &FockTruncation, omega: T, times: [T; 5], g: [T; 5], beta: T) -> T {
    block_norm(&nested_commutator(trunc, omega, times, g, beta), trunc.inner_block)
}

/// `value(2β) / value(β)` for the dropped and kept terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingRatios<T> {
    pub dropped: T,
    pub kept: T,
    pub dropped_at_beta: T,
    pub kept_at_beta: T,
}

pub fn check_dropped_terms_quadratic<T: Real>(
    trunc: &FockTruncation,
    omega: T,
    times: [T; 5],
    g: [T; 5],
    beta: T,
) -> Result<DoublingRatios<T>> {
    let two = T::lit(2.0);
    let d1 = dropped_term_norm(trunc, omega, times, g, beta);
    let d2 = dropped_term_norm(trunc, omega, times, g, two * beta);
    let k1 = kept_term_norm(trunc, omega, times, g, beta);
    let k2 = kept_term_norm(trunc, omega, times, g, two * beta);
    let floor = T::lit(1e-300).max(T::min_positive_value());
    if !(d1 > floor) || !(k1 > floor) {
        return Err(Error::NumericalFailure(format!(
            "term below noise floor at beta = {beta}: dropped {d1:e}, kept {k1:e}"
        )));
    }
    Ok(DoublingRatios {
        dropped: d2 / d1,
        kept: k2 / k1,
        dropped_at_beta: d1,
        kept_at_beta: k1,
    })
}
