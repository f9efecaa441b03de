//! Gauss–Legendre rules, composite panels and interpolatory cumulative integration.

use crate::error::{Error, Result};
use crate::Real;

/// An `M`-point Gauss–Legendre rule on `[-1, 1]`, together with the spectral
/// integration matrix `S[i][j] = ∫_{-1}^{x_i} l_j(x) dx` of its Lagrange basis.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    cumulative: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidInput("Gauss-Legendre order must be positive".into()));
        }
        let (x, w) = nodes_and_weights(order);
        let m = order;
        let mut s = vec![0.0f64; m * m];
        // l_j(x) = w_j Σ_k (2k+1)/2 P_k(x_j) P_k(x), exact by discrete orthogonality.
        // ∫_{-1}^{y} P_0 = y + 1, ∫_{-1}^{y} P_k = (P_{k+1}(y) - P_{k-1}(y)) / (2k+1).
        let p_at_nodes: Vec<Vec<f64>> = x.iter().map(|&xi| legendre_all(m, xi)).collect();
        for i in 0..m {
            let pi = &p_at_nodes[i];
            for j in 0..m {
                let pj = &p_at_nodes[j];
                let mut acc = 0.5 * (x[i] + 1.0);
                for k in 1..m {
                    acc += 0.5 * pj[k] * (pi[k + 1] - pi[k - 1]);
                }
                s[i * m + j] = w[j] * acc;
            }
        }
        Ok(Self {
            nodes: x.into_iter().map(T::lit).collect(),
            weights: w.into_iter().map(T::lit).collect(),
            cumulative: s.into_iter().map(T::lit).collect(),
        })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Nodes mapped to `[a, b]`.
    pub fn nodes_on(&self, a: T, b: T) -> impl Iterator<Item = T> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes.iter().map(move |&x| mid + half * x)
    }

    /// Weights mapped to `[a, b]`.
    pub fn weights_on(&self, a: T, b: T) -> impl Iterator<Item = T> + '_ {
        let half = (b - a) * T::lit(0.5);
        self.weights.iter().map(move |&w| half * w)
    }

    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Given samples `f(x_j)` at the nodes of `[a, b]`, writes `∫_a^{x_i} f` into `out`.
    pub fn cumulate(&self, a: T, b: T, samples: &[T], out: &mut [T]) {
        let m = self.order();
        debug_assert_eq!(samples.len(), m);
        debug_assert_eq!(out.len(), m);
        let half = (b - a) * T::lit(0.5);
        for (slot, row) in out.iter_mut().zip(self.cumulative.chunks_exact(m)) {
            let mut acc = T::zero();
            for (&s, &f) in row.iter().zip(samples) {
                acc += s * f;
            }
            *slot = acc * half;
        }
    }
}

/// A closed integration panel `[a, b]`, `a <= b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> Panel<T> {
    pub fn len(&self) -> T {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        !(self.b > self.a)
    }
}

/// Splits each consecutive breakpoint gap into equal panels no longer than `max_len`.
///
/// Breakpoints are sorted and deduplicated; empty gaps are dropped.
pub fn panelize<T: Real>(breakpoints: &[T], max_len: Option<T>) -> Vec<Panel<T>> {
    let mut pts: Vec<T> = breakpoints.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut out = Vec::new();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = match max_len {
            Some(h) if h > T::zero() => ((b - a) / h).ceil().to_usize().unwrap_or(1).max(1),
            _ => 1,
        };
        let step = (b - a) / T::from_count(pieces);
        for k in 0..pieces {
            let lo = a + step * T::from_count(k);
            let hi = if k + 1 == pieces {
                b
            } else {
                a + step * T::from_count(k + 1)
            };
            out.push(Panel { a: lo, b: hi });
        }
    }
    out
}

/// Legendre polynomials `P_0..=P_m` at `x`.
fn legendre_all(m: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; m + 1];
    p[0] = 1.0;
    if m >= 1 {
        p[1] = x;
    }
    for k in 1..m {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
    }
    p
}

fn nodes_and_weights(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let p = legendre_all(m, z);
            dp = mf * (z * p[m] - p[m - 1]) / (z * z - 1.0);
            let dz = p[m] / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let p = legendre_all(m, z);
        dp = if dp == 0.0 {
            1.0
        } else {
            mf * (z * p[m] - p[m - 1]) / (z * z - 1.0)
        };
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_integrate_polynomials() {
        for m in [1, 2, 5, 24, 48] {
            let g = GaussLegendre::<f64>::new(m).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "m={m}");
            let deg = 2 * m - 1;
            let v = g.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn cumulative_matrix_exact_on_low_degree() {
        let g = GaussLegendre::<f64>::new(12).unwrap();
        let (a, b) = (0.5, 2.0);
        let xs: Vec<f64> = g.nodes_on(a, b).collect();
        let f: Vec<f64> = xs.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        let mut out = vec![0.0; 12];
        g.cumulate(a, b, &f, &mut out);
        for (x, c) in xs.iter().zip(&out) {
            let exact = |y: f64| y * y * y - 0.5 * y * y + 2.0 * y;
            assert!((c - (exact(*x) - exact(a))).abs() < 1e-13);
        }
    }

    #[test]
    fn cumulative_spectral_on_smooth_function() {
        let g = GaussLegendre::<f64>::new(24).unwrap();
        let xs: Vec<f64> = g.nodes_on(-3.0, 3.0).collect();
        let f: Vec<f64> = xs.iter().map(|x| (-x * x / 2.0).exp()).collect();
        let mut out = vec![0.0; 24];
        g.cumulate(-3.0, 3.0, &f, &mut out);
        let last = out[23];
        let total = g.integrate(-3.0, 3.0, |x| (-x * x / 2.0).exp());
        // the last node is interior, so compare monotonicity and the full integral separately
        assert!(out.windows(2).all(|w| w[1] > w[0]));
        assert!(last < total);
        let mid = out[11] + out[12];
        assert!((mid - total).abs() < 1e-12, "symmetry: {mid} vs {total}");
    }

    #[test]
    fn panelize_respects_max_len() {
        let p = panelize(&[0.0, 1.0, 1.0, 3.5], Some(1.0));
        assert_eq!(p.len(), 1 + 3);
        assert!(p.iter().all(|q| q.len() <= 1.0 + 1e-15));
        assert_eq!(p.last().unwrap().b, 3.5);
    }
}
