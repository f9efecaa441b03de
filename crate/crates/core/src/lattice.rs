//! Mechanical model of the trapped, nearest-neighbour coupled chain.
//!
//! Sites are indexed from 0. All kernels here return the real factor of the
//! unequal-time commutators; the `iħ` is attached by the phase prefactors.

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::Real;

/// Relative symmetry tolerance for an explicit Hessian.
const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue relative to the largest.
const STABILITY_RATIO: f64 = 1e-12;

/// Physical description of an `N`-site chain of identical masses.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec<T> {
    n_sites: usize,
    mass: T,
    trap_freq: T,
    coupling_freq: T,
    hessian: Option<Matrix<T>>,
}

impl<T: Real> ChainSpec<T> {
    /// Open chain with Hessian `Ω² I + Ω_c² L`.
    pub fn new(n_sites: usize, mass: T, trap_freq: T, coupling_freq: T) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidInput("n_sites must be >= 1".into()));
        }
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
        }
        if !(trap_freq > T::zero()) || !trap_freq.is_finite() {
            return Err(Error::InvalidInput(format!(
                "trap frequency must be positive, got {trap_freq}"
            )));
        }
        if !(coupling_freq >= T::zero()) || !coupling_freq.is_finite() {
            return Err(Error::InvalidInput(format!(
                "coupling frequency must be non-negative, got {coupling_freq}"
            )));
        }
        Ok(Self {
            n_sites,
            mass,
            trap_freq,
            coupling_freq,
            hessian: None,
        })
    }

    /// Replaces the nearest-neighbour construction with an explicit Hessian (rad²/s²).
    ///
    /// `trap_freq` is kept as the reference frequency for nondimensionalization.
    pub fn with_hessian(mut self, h: Matrix<T>) -> Result<Self> {
        if h.rows() != self.n_sites || h.cols() != self.n_sites {
            return Err(Error::InvalidInput(format!(
                "explicit Hessian is {}x{}, chain has {} sites",
                h.rows(),
                h.cols(),
                self.n_sites
            )));
        }
        let scale = h.max_norm_by(|x: T| x.abs());
        let tol = T::lit(SYMMETRY_TOL) * scale;
        for i in 0..self.n_sites {
            for j in (i + 1)..self.n_sites {
                if (h[(i, j)] - h[(j, i)]).abs() > tol {
                    return Err(Error::InvalidInput(format!(
                        "explicit Hessian not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if !is_positive_definite(&h) {
            return Err(Error::InvalidInput("explicit Hessian is not positive definite".into()));
        }
        self.hessian = Some(h);
        Ok(self)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn trap_freq(&self) -> T {
        self.trap_freq
    }

    pub fn coupling_freq(&self) -> T {
        self.coupling_freq
    }

    pub fn explicit_hessian(&self) -> Option<&Matrix<T>> {
        self.hessian.as_ref()
    }

    /// The Hessian in use: the explicit override, or the nearest-neighbour one.
    pub fn hessian(&self) -> Matrix<T> {
        match &self.hessian {
            Some(h) => h.clone(),
            None => build_hessian(self),
        }
    }

    pub fn normal_modes(&self) -> Result<NormalModes<T>> {
        decompose_normal_modes(&self.hessian(), self.mass)
    }
}

fn is_positive_definite<T: Real>(h: &Matrix<T>) -> bool {
    let n = h.rows();
    let mut l = Matrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = h[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    true
}

/// Nearest-neighbour Hessian `h = Ω² I + Ω_c² L`, `L` the open path-graph Laplacian.
pub fn build_hessian<T: Real>(spec: &ChainSpec<T>) -> Matrix<T> {
    let n = spec.n_sites;
    let w2 = spec.trap_freq * spec.trap_freq;
    let c2 = spec.coupling_freq * spec.coupling_freq;
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = w2;
    }
    for i in 0..n.saturating_sub(1) {
        h[(i, i)] += c2;
        h[(i + 1, i + 1)] += c2;
        h[(i, i + 1)] -= c2;
        h[(i + 1, i)] -= c2;
    }
    h
}

/// Eigenfrequencies and the scaled normal-mode transforms of a chain.
///
/// `x = O φ` and `p = O' π` map positions and momenta onto decoupled
/// oscillators, with `O = P ω^{-1/2} / √m` and `O' = √m P ω^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModes<T> {
    frequencies: Vec<T>,
    p_matrix: Matrix<T>,
    o_matrix: Matrix<T>,
    o_prime_matrix: Matrix<T>,
    mass: T,
}

impl<T: Real> NormalModes<T> {
    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// Ascending, rad/s.
    pub fn frequencies(&self) -> &[T] {
        &self.frequencies
    }

    pub fn p_matrix(&self) -> &Matrix<T> {
        &self.p_matrix
    }

    pub fn o_matrix(&self) -> &Matrix<T> {
        &self.o_matrix
    }

    pub fn o_prime_matrix(&self) -> &Matrix<T> {
        &self.o_prime_matrix
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn max_frequency(&self) -> T {
        self.frequencies.iter().copied().fold(T::zero(), T::max)
    }

    /// Max-entry deviation of `PᵀP` from the identity.
    pub fn orthogonality_defect(&self) -> T {
        let n = self.n_modes();
        self.p_matrix
            .transpose()
            .matmul(&self.p_matrix)
            .sub(&Matrix::identity(n))
            .max_norm_by(|x: T| x.abs())
    }

    /// Max-entry deviation of `O O'ᵀ` from the identity.
    pub fn canonical_defect(&self) -> T {
        let n = self.n_modes();
        self.o_matrix
            .matmul(&self.o_prime_matrix.transpose())
            .sub(&Matrix::identity(n))
            .max_norm_by(|x: T| x.abs())
    }

    /// Rebuilds the transforms from an arbitrary orthonormal `p`, e.g. a rotated
    /// basis inside a degenerate eigenspace.
    pub fn from_parts(frequencies: Vec<T>, p_matrix: Matrix<T>, mass: T) -> Result<Self> {
        let n = frequencies.len();
        if p_matrix.rows() != n || p_matrix.cols() != n {
            return Err(Error::InvalidInput("mode matrix shape mismatch".into()));
        }
        if frequencies.iter().any(|w| !(*w > T::zero())) {
            return Err(Error::InvalidInput("frequencies must be positive".into()));
        }
        let sm = mass.sqrt();
        let o = Matrix::from_fn(n, n, |i, k| p_matrix[(i, k)] / (sm * frequencies[k].sqrt()));
        let op = Matrix::from_fn(n, n, |i, k| p_matrix[(i, k)] * sm * frequencies[k].sqrt());
        Ok(Self {
            frequencies,
            p_matrix,
            o_matrix: o,
            o_prime_matrix: op,
            mass,
        })
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.n_modes() {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.n_modes(),
            })
        } else {
            Ok(())
        }
    }

    /// `O_ik O'_jk` for every mode `k`.
    pub fn kernel_weights(&self, i: usize, j: usize) -> Vec<T> {
        (0..self.n_modes())
            .map(|k| self.o_matrix[(i, k)] * self.o_prime_matrix[(j, k)])
            .collect()
    }
}

pub fn decompose_normal_modes<T: Real>(h: &Matrix<T>, mass: T) -> Result<NormalModes<T>> {
    if !(mass > T::zero()) {
        return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
    }
    let eig = symmetric_eigen(h)?;
    let max = eig.values.iter().copied().fold(T::zero(), |a, b| a.max(b.abs()));
    let min = eig.values.first().copied().unwrap_or(T::zero());
    if !(min > T::lit(STABILITY_RATIO) * max) {
        return Err(Error::UnstableChain {
            min: min.to_f64_lossy(),
            max: max.to_f64_lossy(),
        });
    }
    let frequencies = eig.values.iter().map(|v| v.sqrt()).collect();
    NormalModes::from_parts(frequencies, eig.vectors, mass)
}

/// Real factor `Σ_k O_ik O'_jk cos(ω_k dt)` of `[x̃_i(t₁), p̃_j(t₂)] / iħ`, `dt = t₁ - t₂`.
pub fn commutator_kernel<T: Real>(modes: &NormalModes<T>, i: usize, j: usize, dt: T) -> Result<T> {
    modes.check(i)?;
    modes.check(j)?;
    Ok(kernel_unchecked(modes, i, j, dt))
}

#[inline]
pub(crate) fn kernel_unchecked<T: Real>(modes: &NormalModes<T>, i: usize, j: usize, dt: T) -> T {
    let mut acc = T::zero();
    for (k, &w) in modes.frequencies.iter().enumerate() {
        acc += modes.o_matrix[(i, k)] * modes.o_prime_matrix[(j, k)] * (w * dt).cos();
    }
    acc
}

/// `D_j(t, t') = Σ_i g_i(t) C_ij(t - t')`, with `g_at_t[i] = g_i(t)`.
pub fn coupling_kernel<T: Real>(modes: &NormalModes<T>, g_at_t: &[T], j: usize, t: T, t_prime: T) -> Result<T> {
    modes.check(j)?;
    if g_at_t.len() != modes.n_modes() {
        return Err(Error::InvalidInput(format!(
            "coupling has {} sites, chain has {}",
            g_at_t.len(),
            modes.n_modes()
        )));
    }
    let dt = t - t_prime;
    let mut acc = T::zero();
    for (i, &g) in g_at_t.iter().enumerate() {
        if g != T::zero() {
            acc += g * kernel_unchecked(modes, i, j, dt);
        }
    }
    Ok(acc)
}

/// Per-site momenta with the deformation parameter `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSample<T> {
    momenta: Vec<T>,
    beta: T,
}

impl<T: Real> MomentumSample<T> {
    pub fn new(momenta: Vec<T>, beta: T) -> Result<Self> {
        if momenta.is_empty() {
            return Err(Error::InvalidInput("momentum sample needs at least one site".into()));
        }
        Ok(Self { momenta, beta })
    }

    pub fn momenta(&self) -> &[T] {
        &self.momenta
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn total(&self) -> T {
        self.momenta.iter().copied().sum()
    }
}

/// `[X, P] / iħ` for the center of mass of `N` equal subsystems under `[x, p] = iħ(1 + βp²)`.
pub fn com_commutator_factor<T: Real>(sample: &MomentumSample<T>) -> T {
    let n = T::from_count(sample.momenta.len());
    let p = sample.total();
    let p2n2 = p * p / (n * n);
    let spread: T = sample.momenta.iter().map(|&pk| pk * pk - p2n2).sum();
    T::one() + sample.beta * p2n2 + sample.beta / n * spread
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn chain(n: usize, w: f64, c: f64) -> ChainSpec<f64> {
        ChainSpec::new(n, 1.0, w, c).unwrap()
    }

    #[test]
    fn hessian_examples() {
        assert_eq!(build_hessian(&chain(1, 1.0, 0.5)), Matrix::from_rows(&[vec![1.0]]));
        assert_eq!(
            build_hessian(&chain(2, 1.0, 1.0)),
            Matrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]])
        );
        assert_eq!(build_hessian(&chain(3, 2.0, 0.0)), Matrix::identity(3).scale(4.0));
    }

    #[test]
    fn chain_validation() {
        assert!(ChainSpec::new(0, 1.0, 1.0, 0.0).is_err());
        assert!(ChainSpec::new(2, 1.0, 0.0, 0.0).is_err());
        assert!(ChainSpec::new(2, 1.0, -1.0, 0.0).is_err());
        assert!(ChainSpec::new(2, 0.0, 1.0, 0.0).is_err());
        assert!(ChainSpec::new(2, 1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn explicit_hessian_checks() {
        let base = chain(2, 1.0, 0.0);
        let asym = Matrix::from_rows(&[vec![2.0, -1.0], vec![-0.9, 2.0]]);
        assert!(base.clone().with_hessian(asym).is_err());
        let indefinite = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(base.clone().with_hessian(indefinite).is_err());
        let ok = Matrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let spec = base.with_hessian(ok.clone()).unwrap();
        assert_eq!(spec.hessian(), ok);
    }

    #[test]
    fn unstable_chain_rejected() {
        let h = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(
            decompose_normal_modes(&h, 1.0),
            Err(Error::UnstableChain { .. })
        ));
    }

    #[test]
    fn single_site_modes() {
        let (w, m) = (3.0f64, 2.0f64);
        let modes = decompose_normal_modes(&Matrix::from_rows(&[vec![w * w]]), m).unwrap();
        assert!((modes.frequencies()[0] - w).abs() < 1e-15);
        assert!((modes.o_matrix()[(0, 0)] - 1.0 / (m * w).sqrt()).abs() < 1e-15);
        assert!((modes.o_prime_matrix()[(0, 0)] - (m * w).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_site_modes_match_closed_form() {
        let (w, c) = (1.3, 0.7);
        let modes = chain(2, w, c).normal_modes().unwrap();
        let f = modes.frequencies();
        assert!((f[0] - w).abs() < 1e-14);
        assert!((f[1] - (w * w + 2.0 * c * c).sqrt()).abs() < 1e-14);
        let r = 0.5f64.sqrt();
        let p = modes.p_matrix();
        assert!((p[(0, 0)] - r).abs() < 1e-14 && (p[(1, 0)] - r).abs() < 1e-14);
        assert!((p[(0, 1)] - r).abs() < 1e-14 && (p[(1, 1)] + r).abs() < 1e-14);
    }

    #[test]
    fn uncoupled_modes_degenerate() {
        let modes = chain(4, 2.0, 0.0).normal_modes().unwrap();
        assert!(modes.frequencies().iter().all(|&w| (w - 2.0).abs() < 1e-15));
        assert!(modes.canonical_defect() < 1e-15);
    }

    #[test]
    fn kernel_examples() {
        let one = chain(1, 1.7, 0.0).normal_modes().unwrap();
        let k = commutator_kernel(&one, 0, 0, 0.4).unwrap();
        assert!((k - (1.7f64 * 0.4).cos()).abs() < 1e-15);

        let two = chain(2, 1.0, 1.0).normal_modes().unwrap();
        assert!(commutator_kernel(&two, 0, 1, 0.0).unwrap().abs() < 1e-15);
        assert!((commutator_kernel(&two, 1, 1, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let expected = 0.5 * (PI.cos() + (3f64.sqrt() * PI).cos());
        let k = commutator_kernel(&two, 0, 0, PI).unwrap();
        assert!((k - expected).abs() < 1e-14);
        assert!((k - (-0.166935)).abs() < 1e-6);

        assert!(matches!(
            commutator_kernel(&two, 2, 0, 0.0),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn coupling_kernel_examples() {
        let one = chain(1, 1.7, 0.0).normal_modes().unwrap();
        let d = coupling_kernel(&one, &[2.5], 0, 1.0, 0.3).unwrap();
        assert!((d - 2.5 * (1.7f64 * 0.7).cos()).abs() < 1e-14);

        let two = chain(2, 1.0, 1.0).normal_modes().unwrap();
        assert_eq!(coupling_kernel(&two, &[0.0, 0.0], 1, 0.2, 0.9).unwrap(), 0.0);
        assert!(coupling_kernel(&two, &[1.0, 0.0], 1, 0.5, 0.5).unwrap().abs() < 1e-15);
        assert!(coupling_kernel(&two, &[1.0], 1, 0.5, 0.5).is_err());
        assert!(coupling_kernel(&two, &[1.0, 0.0], 2, 0.5, 0.5).is_err());
    }

    #[test]
    fn com_factor_examples() {
        let f = com_commutator_factor(&MomentumSample::new(vec![1.0f64, 1.0], 0.01).unwrap());
        assert!((f - 1.01).abs() < 1e-15);
        let f = com_commutator_factor(&MomentumSample::new(vec![1.0f64, -1.0], 0.01).unwrap());
        assert!((f - 1.01).abs() < 1e-15);
        let f = com_commutator_factor(&MomentumSample::new(vec![3.0f64], 0.2).unwrap());
        assert!((f - (1.0 + 0.2 * 9.0)).abs() < 1e-15);
        assert!(MomentumSample::<f64>::new(vec![], 0.1).is_err());
    }
}
