use serde::{Deserialize, Serialize};

use crate::model::{Level, ScenarioConfig};

/// `e^{−αΔ} / (1 + e^{−αΔ})` with `Δ = now − prev`, evaluated without overflow.
pub fn sigmoid_penalty(now: f64, prev: f64, alpha: f64) -> f64 {
    let u = -alpha * (now - prev);
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Switching penalty between consecutive chunks; idle on either side is exempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Penalty {
    /// `𝟙(Z_i < Z_{i−1})`
    Indicator,
    /// The s-curve with slope `α`.
    Sigmoid,
}

/// Per-level weights `γ^j`, or `γ^(J−1−j)` when reversed.
pub fn level_weights(cfg: &ScenarioConfig, levels: usize) -> Vec<f64> {
    (0..levels).map(|j| cfg.level_weight(j, levels)).collect()
}

/// Score of one chunk: `Σ_{j ≤ level} w_j − β·penalty`.
pub fn chunk_score(level: Level, prev: Option<Level>, weights: &[f64], beta: f64, alpha: f64, penalty: Penalty) -> f64 {
    let gain: f64 = level.map_or(0.0, |l| weights[..=l].iter().sum());
    let pen = match (level, prev.flatten()) {
        (Some(now), Some(before)) => match penalty {
            Penalty::Indicator => f64::from(u8::from(now < before)),
            Penalty::Sigmoid => sigmoid_penalty(now as f64, before as f64, alpha),
        },
        _ => 0.0,
    };
    gain - beta * pen
}

/// QoE per vehicle (mean chunk score) and for the network (sum over vehicles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoeScore {
    pub per_vehicle: Vec<f64>,
    pub network: f64,
}

/// Scores chunk histories `history[v][i]`.
pub fn qoe_objective(history: &[Vec<Level>], cfg: &ScenarioConfig, levels: usize, penalty: Penalty) -> QoeScore {
    let w = level_weights(cfg, levels);
    let per_vehicle: Vec<f64> = history
        .iter()
        .map(|chunks| {
            if chunks.is_empty() {
                return 0.0;
            }
            let total: f64 = chunks
                .iter()
                .enumerate()
                .map(|(i, &l)| chunk_score(l, (i > 0).then(|| chunks[i - 1]), &w, cfg.beta, cfg.alpha, penalty))
                .sum();
            total / chunks.len() as f64
        })
        .collect();
    let network = per_vehicle.iter().sum();
    QoeScore { per_vehicle, network }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid_penalty(1.0, 1.0, 10.0), 0.5);
        assert!((sigmoid_penalty(0.0, 2.0, 10.0) - 1.0).abs() < 1e-8);
        let e = (-10f64).exp();
        assert!((sigmoid_penalty(2.0, 1.0, 10.0) - e / (1.0 + e)).abs() < 1e-18);
        assert!((sigmoid_penalty(2.0, 1.0, 10.0) - 4.54e-5).abs() < 1e-7);
        assert!(sigmoid_penalty(1e6, 0.0, 1e3).is_finite());
        assert!(sigmoid_penalty(-1e6, 0.0, 1e3).is_finite());
    }

    #[test]
    fn cumulative_weight_sum() {
        let cfg = ScenarioConfig { gamma: 0.9, beta: 1.0, ..Default::default() };
        let w = level_weights(&cfg, 3);
        let s = chunk_score(Some(2), Some(Some(2)), &w, cfg.beta, cfg.alpha, Penalty::Indicator);
        assert!((s - 2.71).abs() < 1e-12);
    }

    #[test]
    fn drop_costs_beta() {
        let w = [1.0, 0.5, 0.25];
        let a = chunk_score(Some(1), Some(Some(2)), &w, 1.0, 10.0, Penalty::Indicator);
        assert!((a - (1.5 - 1.0)).abs() < 1e-12);
        assert_eq!(chunk_score(Some(1), Some(None), &w, 1.0, 10.0, Penalty::Indicator), 1.5);
        assert_eq!(chunk_score(None, Some(Some(2)), &w, 1.0, 10.0, Penalty::Indicator), 0.0);
    }

    #[test]
    fn constant_quality_has_no_penalty() {
        let cfg = ScenarioConfig::default();
        let h = vec![vec![Some(1); 20]];
        let q = qoe_objective(&h, &cfg, 3, Penalty::Indicator);
        assert!((q.network - (1.0 + cfg.gamma)).abs() < 1e-12);
    }

    #[test]
    fn reversed_weights() {
        let cfg = ScenarioConfig { gamma: 0.5, reversed_quality_weights: true, ..Default::default() };
        assert_eq!(level_weights(&cfg, 3), vec![0.25, 0.5, 1.0]);
    }
}
