use rand::Rng;

use crate::scalar::Real;

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).fold(T::zero(), |s, x| s + x)
}

fn seed_plus_plus<T: Real, R: Rng + ?Sized>(rows: &[Vec<T>], k: usize, rng: &mut R) -> Vec<Vec<T>> {
    let n = rows.len();
    let mut centers = vec![rows[rng.random_range(0..n)].clone()];
    let mut d2: Vec<T> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total = d2.iter().fold(T::zero(), |s, &x| s + x);
        let pick = if total > T::zero() {
            let target = T::lit(rng.random::<f64>()) * total;
            let mut acc = T::zero();
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    idx = i;
                    break;
                }
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(rows[pick].clone());
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn lloyd<T: Real>(rows: &[Vec<T>], mut centers: Vec<Vec<T>>) -> (Vec<usize>, T) {
    let (n, k, dim) = (rows.len(), centers.len(), rows[0].len());
    let mut labels = vec![usize::MAX; n];
    for _ in 0..300 {
        let mut changed = false;
        for (i, r) in rows.iter().enumerate() {
            let mut best = (T::infinity(), 0);
            for (c, ctr) in centers.iter().enumerate() {
                let d = sq_dist(r, ctr);
                if d < best.0 {
                    best = (d, c);
                }
            }
            if labels[i] != best.1 {
                labels[i] = best.1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (i, r) in rows.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, &x) in sums[labels[i]].iter_mut().zip(r) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = T::one() / T::lit(counts[c] as f64);
                centers[c] = sums[c].iter().map(|&s| s * inv).collect();
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&rows[a], &centers[labels[a]])
                            .partial_cmp(&sq_dist(&rows[b], &centers[labels[b]]))
                            .expect("finite")
                            .then(b.cmp(&a))
                    })
                    .expect("non-empty");
                centers[c] = rows[far].clone();
            }
        }
    }
    let inertia = rows
        .iter()
        .zip(&labels)
        .map(|(r, &l)| sq_dist(r, &centers[l]))
        .fold(T::zero(), |s, x| s + x);
    (labels, inertia)
}

/// k-means with k-means++ seeding; keeps the lowest-inertia run among `restarts`.
/// Labels are renumbered in order of first appearance.
pub fn kmeans<T: Real, R: Rng + ?Sized>(rows: &[Vec<T>], k: usize, restarts: usize, rng: &mut R) -> Vec<usize> {
    let n = rows.len();
    assert!(k >= 1 && k <= n, "k = {k} outside 1..={n}");
    if k == n {
        return (0..n).collect();
    }
    let mut best: Option<(Vec<usize>, T)> = None;
    for _ in 0..restarts.max(1) {
        let (labels, inertia) = lloyd(rows, seed_plus_plus(rows, k, rng));
        if best.as_ref().is_none_or(|b| inertia < b.1) {
            best = Some((labels, inertia));
        }
    }
    let labels = best.expect("at least one restart").0;
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    labels
        .into_iter()
        .map(|l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect()
}
