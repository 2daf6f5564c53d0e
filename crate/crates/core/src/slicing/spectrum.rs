//! Symmetric eigendecomposition by cyclic Jacobi rotations, and eigengap model selection.

use super::SlicingError;
use crate::scalar::Real;

/// Eigenpairs sorted by ascending eigenvalue; `vectors[i]` pairs with `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSpectrum<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

/// Eigenpairs of the symmetric row-major `n × n` matrix `a`.
pub fn symmetric_eigen<T: Real>(a: &[T], n: usize) -> Result<LaplacianSpectrum<T>, SlicingError> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let frob = m.iter().map(|&x| x * x).fold(T::zero(), |s, x| s + x).sqrt();
    let thresh = T::epsilon() * T::lit(n.max(1) as f64) * frob;
    let off = |m: &[T]| {
        let mut s = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[i * n + j] * m[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut converged = n < 2 || off(&m) <= thresh;
    for _sweep in 0..100 {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (kp, kq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * kp - s * kq;
                    m[k * n + q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * pk - s * qk;
                    m[q * n + k] = s * pk + c * qk;
                }
                m[p * n + q] = T::zero();
                m[q * n + p] = T::zero();
                for k in 0..n {
                    let (kp, kq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * kp - s * kq;
                    v[k * n + q] = s * kp + c * kq;
                }
            }
        }
        converged = off(&m) <= thresh;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).expect("finite eigenvalues").then(i.cmp(&j)));
    let values: Vec<T> = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors: Vec<Vec<T>> = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();

    if !converged {
        let mut residual = T::zero();
        for (lam, vec) in values.iter().zip(&vectors) {
            let mut r = T::zero();
            for i in 0..n {
                let av: T = (0..n).map(|j| a[i * n + j] * vec[j]).fold(T::zero(), |s, x| s + x);
                r += (av - *lam * vec[i]).powi(2);
            }
            residual = residual.max(r.sqrt());
        }
        return Err(SlicingError::NoConvergence { residual: residual.as_f64() });
    }
    Ok(LaplacianSpectrum { values, vectors })
}

/// Index `i` (1-based) of the largest gap `χ_{i+1} − χ_i`, ties to the smallest `i`.
///
/// Eigenvalues with `|χ| < 1e-9·χ_max` count as zero. An all-zero spectrum
/// means every vertex is isolated, so `k = n`.
pub fn choose_k<T: Real>(values: &[T]) -> Result<usize, SlicingError> {
    let n = values.len();
    if n < 2 {
        return Err(SlicingError::InsufficientSpectrum(n));
    }
    let max = values.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    if max == T::zero() {
        return Ok(n);
    }
    let eps = T::lit(1e-9) * max;
    let clean: Vec<T> = values.iter().map(|&x| if x.abs() < eps { T::zero() } else { x }).collect();
    let mut best = (T::neg_infinity(), 1);
    for i in 0..n - 1 {
        let gap = clean[i + 1] - clean[i];
        if gap > best.0 {
            best = (gap, i + 1);
        }
    }
    Ok(best.1)
}
