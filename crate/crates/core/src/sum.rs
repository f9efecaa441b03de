//! Deterministic pairwise (tree) summation.
//!
//! The reduction tree depends only on the length of the input, so the result
//! is bit-identical for a given sequence no matter how the terms were produced.

use crate::Real;

const BLOCK: usize = 8;

pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    if values.len() <= BLOCK {
        let mut acc = T::zero();
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Collects terms in canonical order and reduces them pairwise on demand.
#[derive(Debug, Clone, Default)]
pub struct PairwiseAccumulator<T> {
    terms: Vec<T>,
}

impl<T: Real> PairwiseAccumulator<T> {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            terms: Vec::with_capacity(n),
        }
    }

    #[inline]
    pub fn push(&mut self, v: T) {
        self.terms.push(v);
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sum(&self) -> T {
        pairwise_sum(&self.terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_and_empty() {
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn beats_left_fold_on_many_small_terms() {
        let n = 1 << 20;
        let v = vec![0.1f32; n];
        let naive: f32 = v.iter().fold(0.0, |a, &b| a + b);
        let tree = pairwise_sum(&v);
        let exact = 0.1f64 * n as f64;
        assert!((tree as f64 - exact).abs() < (naive as f64 - exact).abs());
        assert!((tree as f64 - exact).abs() / exact < 1e-5);
    }

    #[test]
    fn accumulator_matches_slice() {
        let mut acc = PairwiseAccumulator::new();
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        for &x in &v {
            acc.push(x);
        }
        assert_eq!(acc.sum().to_bits(), pairwise_sum(&v).to_bits());
    }
}
