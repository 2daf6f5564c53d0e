use crate::mobility::{ring_distance, Point};
use crate::model::VehicleId;
use crate::scalar::Real;

/// Pairwise similarity `exp(−‖p_v − p_v′‖ / (2σ²))` over candidate vehicles.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T> {
    pub ids: Vec<VehicleId>,
    /// Row-major `n × n`.
    pub entries: Vec<T>,
    pub sigma: T,
}

impl<T: Real> SimilarityMatrix<T> {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.ids.len() + j]
    }

    /// Unnormalized Laplacian `D − W`, where `W` drops the diagonal and entries below `floor`.
    pub fn laplacian(&self, floor: T) -> Vec<T> {
        let n = self.len();
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            let mut deg = T::zero();
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = self.get(i, j);
                if w >= floor && w > T::zero() {
                    l[i * n + j] = -w;
                    deg += w;
                }
            }
            l[i * n + i] = deg;
        }
        l
    }
}

/// Builds the similarity matrix. `ring` wraps the x axis when given;
/// `squared` switches to the squared-distance kernel.
pub fn build_similarity<T: Real>(
    points: &[(VehicleId, Point<T>)],
    sigma: T,
    squared: bool,
    ring: Option<T>,
) -> SimilarityMatrix<T> {
    let n = points.len();
    let denom = T::lit(2.0) * sigma * sigma;
    let mut entries = vec![T::one(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (p, q) = (points[i].1, points[j].1);
            let d = match ring {
                Some(len) => ring_distance(p, q, len),
                None => (q.x - p.x).hypot(q.y - p.y),
            };
            let d = if squared { d * d } else { d };
            let s = (-d / denom).exp();
            entries[i * n + j] = s;
            entries[j * n + i] = s;
        }
    }
    SimilarityMatrix { ids: points.iter().map(|p| p.0).collect(), entries, sigma }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[f64]) -> Vec<(VehicleId, Point<f64>)> {
        xs.iter().enumerate().map(|(i, &x)| (i, Point::new(x, 0.0))).collect()
    }

    #[test]
    fn kernel_examples() {
        let s = build_similarity(&pts(&[5.0, 5.0]), 3.0, false, None);
        assert_eq!(s.get(0, 1), 1.0);
        let sigma = 10.0;
        let s = build_similarity(&pts(&[0.0, 2.0 * sigma * sigma]), sigma, false, None);
        assert!((s.get(0, 1) - (-1f64).exp()).abs() < 1e-15);
        let s = build_similarity(&pts(&[0.0, 200.0]), 10.0, false, None);
        assert!((s.get(1, 0) - 0.367_879_441).abs() < 1e-9);
    }

    #[test]
    fn squared_kernel_option() {
        let s = build_similarity(&pts(&[0.0, 10.0]), 10.0, true, None);
        assert!((s.get(0, 1) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn symmetric_with_unit_diagonal() {
        let s = build_similarity(&pts(&[0.0, 3.0, 40.0, 7.5]), 4.0, false, None);
        for i in 0..4 {
            assert_eq!(s.get(i, i), 1.0);
            for j in 0..4 {
                assert_eq!(s.get(i, j), s.get(j, i));
            }
        }
    }

    #[test]
    fn ring_wraps() {
        let p = vec![(0, Point::new(1.0, 0.0)), (1, Point::new(999.0, 0.0))];
        let s = build_similarity(&p, 1.0, false, Some(1000.0));
        assert!((s.get(0, 1) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let s = build_similarity(&pts(&[0.0, 1.0, 2.5]), 1.0, false, None);
        let l = s.laplacian(1e-6);
        for i in 0..3 {
            let r: f64 = l[i * 3..i * 3 + 3].iter().sum();
            assert!(r.abs() < 1e-15);
        }
    }
}
