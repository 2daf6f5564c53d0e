//! Empirical distributions, quality histograms, bootstrap intervals and rank correlation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Level;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no samples")]
    Empty,
    #[error("non-finite sample {0}")]
    NonFinite(f64),
    #[error("length mismatch: {0} vs {1}")]
    Mismatch(usize, usize),
}

/// Sorted samples with step-function CDF and CCDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self, MetricsError> {
        if samples.is_empty() {
            return Err(MetricsError::Empty);
        }
        if let Some(&x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(MetricsError::NonFinite(x));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Fraction of samples `> x`.
    pub fn ccdf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Nearest-rank quantile for `p ∈ [0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        percentile_sorted(&self.sorted, p)
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// `(x, F(x))` at `points` evenly spaced quantiles, the curve written to disk.
    pub fn curve(&self, points: usize) -> Vec<(f64, f64)> {
        let n = points.max(2);
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);
        for i in 0..n {
            let x = self.quantile(i as f64 / (n - 1) as f64);
            if out.last().is_none_or(|l| l.0 != x) {
                out.push((x, self.cdf(x)));
            }
        }
        out
    }
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p.clamp(0.0, 1.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Nearest-rank percentile of unsorted samples.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64, MetricsError> {
    Ok(EmpiricalDistribution::new(samples.to_vec())?.quantile(p))
}

/// Fraction of chunk decisions per level, with an idle bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityHistogram {
    pub counts: Vec<u64>,
    pub idle: u64,
}

impl QualityHistogram {
    pub fn new(levels: usize) -> Self {
        Self { counts: vec![0; levels], idle: 0 }
    }

    pub fn from_levels<'a>(levels: usize, decisions: impl IntoIterator<Item = &'a Level>) -> Self {
        let mut h = Self::new(levels);
        for l in decisions {
            h.add(*l);
        }
        h
    }

    pub fn add(&mut self, l: Level) {
        match l {
            Some(j) => self.counts[j] += 1,
            None => self.idle += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.idle
    }

    /// Per-level fractions followed by the idle fraction; all zero when empty.
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.total();
        let f = |c: u64| if n == 0 { 0.0 } else { c as f64 / n as f64 };
        self.counts.iter().map(|&c| f(c)).chain([f(self.idle)]).collect()
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.idle += other.idle;
    }
}

/// Percentile bootstrap interval for the `p`-quantile of pooled samples.
///
/// Each replication is resampled with replacement within itself, so the
/// pooled resample keeps every replication's weight.
pub fn bootstrap_quantile_ci<R: Rng + ?Sized>(
    replications: &[Vec<f64>],
    p: f64,
    resamples: usize,
    level: f64,
    rng: &mut R,
) -> Result<(f64, f64), MetricsError> {
    if replications.iter().all(Vec::is_empty) {
        return Err(MetricsError::Empty);
    }
    let total: usize = replications.iter().map(Vec::len).sum();
    let mut stats = Vec::with_capacity(resamples);
    let mut pooled = Vec::with_capacity(total);
    for _ in 0..resamples {
        pooled.clear();
        for r in replications.iter().filter(|r| !r.is_empty()) {
            pooled.extend((0..r.len()).map(|_| r[rng.random_range(0..r.len())]));
        }
        pooled.sort_by(f64::total_cmp);
        stats.push(percentile_sorted(&pooled, p));
    }
    stats.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    Ok((percentile_sorted(&stats, a), percentile_sorted(&stats, 1.0 - a)))
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `None` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::Mismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricsError::Empty);
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    Ok((sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt()))
}
