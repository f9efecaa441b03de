//! Monte-Carlo estimate of the ordered-simplex fraction for coincident times.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::Real;

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 0x5eed_c01c;

/// A Heaviside chain `x₀ ≥ x₁ ≥ …` of at most five slots.
///
/// Slots are jittered i.i.d. around their centers, except an optional fixed
/// leading time (the evaluation time), which stays put.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidencePattern<T> {
    pub fixed_top: Option<T>,
    pub centers: Vec<T>,
}

impl<T: Real> CoincidencePattern<T> {
    pub fn new(fixed_top: Option<T>, centers: Vec<T>) -> Result<Self> {
        let slots = centers.len() + usize::from(fixed_top.is_some());
        if centers.is_empty() || slots > 5 {
            return Err(Error::InvalidInput(format!("pattern needs 1..=5 slots, got {slots}")));
        }
        if centers.iter().chain(fixed_top.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("pattern centers must be finite".into()));
        }
        Ok(Self { fixed_top, centers })
    }

    /// `m` jittered slots sharing one center.
    pub fn tie(m: usize) -> Result<Self> {
        Self::new(None, vec![T::zero(); m])
    }

    fn sequence(&self) -> Vec<T> {
        self.fixed_top.iter().chain(&self.centers).copied().collect()
    }

    /// Closed-form fraction: 0 for a strict violation, `1/m!` per block of `m`
    /// equal jittered slots, and `(1/2)^m / m!` for `m` slots tied with the fixed top.
    pub fn rule(&self) -> T {
        let seq = self.sequence();
        if seq.windows(2).any(|w| w[1] > w[0]) {
            return T::zero();
        }
        let mut w = T::one();
        let mut k = 0;
        while k < seq.len() {
            let mut end = k + 1;
            while end < seq.len() && seq[end] == seq[k] {
                end += 1;
            }
            let fixed_block = k == 0 && self.fixed_top.is_some();
            let jittered = if fixed_block { end - k - 1 } else { end - k };
            for r in 1..=jittered {
                w /= T::from_count(r);
                if fixed_block {
                    w /= T::lit(2.0);
                }
            }
            k = end;
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceEstimate<T> {
    pub fraction: T,
    pub rule: T,
    pub samples: usize,
    pub seed: u64,
}

/// Fraction of jittered draws that satisfy the strict chain ordering.
///
/// The jitter is uniform with half-width a quarter of the smallest nonzero gap
/// between centers, so only coincident slots can exchange order.
pub fn coincidence_weight_oracle<T: Real>(
    pattern: &CoincidencePattern<T>,
    samples: usize,
    seed: u64,
) -> Result<CoincidenceEstimate<T>> {
    if samples == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let seq = pattern.sequence();
    let mut gap = f64::INFINITY;
    for (a, x) in seq.iter().enumerate() {
        for y in &seq[a + 1..] {
            let d = (*x - *y).abs().to_f64_lossy();
            if d > 0.0 {
                gap = gap.min(d);
            }
        }
    }
    let half = if gap.is_finite() { gap / 4.0 } else { 1.0 };
    let jitter = Uniform::new(-half, half);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let fixed = pattern.fixed_top.map(|t| t.to_f64_lossy());
    let centers: Vec<f64> = pattern.centers.iter().map(|c| c.to_f64_lossy()).collect();
    let mut draw = vec![0.0f64; centers.len()];
    let mut hits = 0usize;
    for _ in 0..samples {
        for (slot, &c) in draw.iter_mut().zip(&centers) {
            *slot = c + jitter.sample(&mut rng);
        }
        let top_ok = fixed.is_none_or(|t| draw[0] < t);
        if top_ok && draw.windows(2).all(|w| w[1] < w[0]) {
            hits += 1;
        }
    }
    Ok(CoincidenceEstimate {
        fraction: T::from_count(hits) / T::from_count(samples),
        rule: pattern.rule(),
        samples,
        seed,
    })
}
