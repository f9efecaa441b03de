//! Cyclic Jacobi eigensolver for small real symmetric matrices.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::Real;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Ascending.
    pub values: Vec<T>,
    /// Column `k` is the unit eigenvector of `values[k]`.
    pub vectors: Matrix<T>,
}

/// Diagonalizes `a` with cyclic Jacobi rotations.
///
/// Eigenvalues come back ascending. Each eigenvector is normalized so that its
/// largest-magnitude entry is positive, ties going to the lowest index.
pub fn symmetric_eigen<T: Real>(a: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    if !a.is_square() {
        return Err(Error::InvalidInput("eigensolver needs a square matrix".into()));
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::<T>::identity(n);

    let norm = frobenius(&m);
    let tol = T::epsilon() * norm;
    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal(&m).sqrt() <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal(&m).sqrt() > tol {
        return Err(Error::NumericalFailure(format!(
            "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .partial_cmp(&m[(j, j)])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&k| m[(k, k)]).collect();
    let mut vectors = Matrix::from_fn(n, n, |i, c| v[(i, order[c])]);
    for c in 0..n {
        let mut lead = 0;
        for i in 1..n {
            if vectors[(i, c)].abs() > vectors[(lead, c)].abs() {
                lead = i;
            }
        }
        if vectors[(lead, c)] < T::zero() {
            for i in 0..n {
                vectors[(i, c)] = -vectors[(i, c)];
            }
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

fn frobenius<T: Real>(m: &Matrix<T>) -> T {
    m.as_slice().iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn off_diagonal<T: Real>(m: &Matrix<T>) -> T {
    let n = m.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s
}

fn rotate<T: Real>(m: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == T::zero() {
        return;
    }
    let two = T::lit(2.0);
    let theta = (m[(q, q)] - m[(p, p)]) / (two * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    let n = m.rows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = T::zero();
    m[(q, p)] = T::zero();
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
