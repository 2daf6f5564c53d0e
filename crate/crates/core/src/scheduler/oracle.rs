use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSnapshot;
use crate::model::{Node, QualityLevel, RandomSource, ScenarioConfig, SlicePartition, VideoCatalog};
use crate::queueing::QueueState;
use crate::scalar::Real;

use super::ccp::{ccp_solve, initial_anchor, true_objective, Assignment};
use super::coefficients::{pool_coefficients, DppCoefficients};
use super::SchedulerError;

/// Largest search space the oracle accepts.
pub const ORACLE_LIMIT: u128 = 1 << 20;

/// Number of feasible binary points: `(V+1)^M · (J+1)^V`, or `(V+1)^M` with frozen quality.
pub fn search_space<T: Real>(c: &DppCoefficients<T>) -> u128 {
    let n = c.len() as u128;
    let x = (n + 1).checked_pow(c.num_rbs as u32).unwrap_or(u128::MAX);
    let z = if c.frozen.is_some() { 1 } else { (c.levels as u128 + 1).checked_pow(c.len() as u32).unwrap_or(u128::MAX) };
    x.saturating_mul(z)
}

/// Exhaustive minimizer of the true objective.
///
/// Points are visited in lexicographic order of (owner of RB 0, …, owner of
/// RB M−1, level of vehicle 0, …), with "none" first in each position; the
/// first minimizer found is returned.
pub fn oracle_solve<T: Real>(c: &DppCoefficients<T>) -> Result<(Assignment, T), SchedulerError> {
    let size = search_space(c);
    if size > ORACLE_LIMIT {
        return Err(SchedulerError::InstanceTooLarge { size });
    }
    let n = c.len();
    let mut digits = vec![0usize; c.num_rbs + if c.frozen.is_some() { 0 } else { n }];
    let radix: Vec<usize> = (0..digits.len()).map(|i| if i < c.num_rbs { n + 1 } else { c.levels + 1 }).collect();
    let decode = |d: &[usize]| Assignment {
        owner: d[..c.num_rbs].iter().map(|&o| o.checked_sub(1)).collect(),
        level: match &c.frozen {
            Some(l) => l.clone(),
            None => d[c.num_rbs..].iter().map(|&l| l.checked_sub(1)).collect(),
        },
    };
    let mut best: Option<(Assignment, T)> = None;
    loop {
        let a = decode(&digits);
        let t = true_objective(c, &a);
        if best.as_ref().is_none_or(|b| t < b.1) {
            best = Some((a, t));
        }
        // Increment with the last position varying fastest.
        let mut i = digits.len();
        loop {
            if i == 0 {
                return Ok(best.expect("at least one point"));
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < radix[i] {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// A random single-cell problem with at most 3 vehicles, 3 RBs and 3 levels,
/// built from a random queue and channel state through the regular
/// coefficient path.
pub fn micro_instance<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> DppCoefficients<f64> {
    let (n, m, levels) = (rng.random_range(1..=3), rng.random_range(1..=3), rng.random_range(1..=3));
    let catalog = VideoCatalog {
        levels: (0..levels).map(|j| QualityLevel { label: format!("L{j}"), rate: 400e3 * (j + 1) as f64 }).collect(),
        ..VideoCatalog::default()
    };
    // Received SNR per RB between −5 and 25 dB at unit power and noise.
    let gains: Vec<f64> = (0..n * m).map(|_| 10f64.powf(rng.random_range(-0.5..2.5))).collect();
    let snap = ChannelSnapshot::from_v2i_gains(gains, 1, n, m, 1.0, 1.0, cfg.rb_bandwidth);
    let q0 = (cfg.playback_threshold + catalog.chunk_duration) * catalog.levels[0].rate;
    let mut q = QueueState::new(n, q0, m, levels);
    for v in 0..n {
        q.q_b[v] = rng.random_range(0.0..2.0) * q0;
        q.virt[v] = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..5.0) * q0 };
        let top = rng.random_range(0..=levels);
        for j in 0..levels {
            q.z_av[v][j] = if j < top { rng.random_range(0.5..1.0) } else { rng.random_range(0.0..0.5) };
        }
    }
    let p = SlicePartition::all_compelled(&(0..n).map(|v| (v, 0)).collect());
    pool_coefficients(Node::Rsu(0), (0..n).collect(), &q, &snap, &p, &catalog, cfg)
}

/// Agreement between the CCP scheduler and exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub instances: usize,
    /// Instances where CCP reached the optimal value.
    pub exact: usize,
    /// Instances within 5% of the optimal value.
    pub within_5pct: usize,
    pub worst_gap: f64,
}

/// `(ccp − opt) / |opt|`, zero when both vanish.
pub fn relative_gap(ccp: f64, opt: f64) -> f64 {
    let d = ccp - opt;
    if d <= 1e-9 * opt.abs().max(1.0) {
        0.0
    } else if opt == 0.0 {
        f64::INFINITY
    } else {
        d / opt.abs()
    }
}

/// Solves `instances` random micro-problems both ways.
pub fn equivalence_suite(cfg: &ScenarioConfig, instances: usize, seed: u64) -> Result<EquivalenceReport, SchedulerError> {
    let mut rng = RandomSource::new(seed, crate::model::stream::INSTANCES).rng();
    let mut r = EquivalenceReport { instances, exact: 0, within_5pct: 0, worst_gap: 0.0 };
    for _ in 0..instances {
        let c = micro_instance(cfg, &mut rng);
        let (_, opt) = oracle_solve(&c)?;
        let out = ccp_solve(&c, initial_anchor(&c), cfg.ccp_max_iters, cfg.ccp_tolerance);
        let gap = relative_gap(out.objective, opt);
        r.exact += usize::from(gap == 0.0);
        r.within_5pct += usize::from(gap <= 0.05);
        r.worst_gap = r.worst_gap.max(gap);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Node;

    #[test]
    fn single_vehicle_single_rb() {
        let mut c = DppCoefficients::<f64>::zeros(Node::Rsu(0), vec![0], 1, 1);
        assert_eq!(search_space(&c), 4);
        c.theta[0] = -1.0;
        c.phi[0] = 0.5;
        c.zeta[0] = 1.0;
        let (a, t) = oracle_solve(&c).unwrap();
        assert_eq!(a.owner, vec![Some(0)]);
        assert_eq!(a.level, vec![Some(0)]);
        assert_eq!(t, -1.5);
    }

    #[test]
    fn zero_coefficients_return_first_point() {
        let c = DppCoefficients::<f64>::zeros(Node::Rsu(0), vec![0, 1], 2, 2);
        let (a, t) = oracle_solve(&c).unwrap();
        assert_eq!(a, Assignment::idle(2, 2));
        assert_eq!(t, 0.0);
    }

    #[test]
    fn micro_instances_fit_the_oracle() {
        let cfg = ScenarioConfig::default();
        let mut rng = RandomSource::new(2, 5).rng();
        for _ in 0..50 {
            assert!(search_space(&micro_instance(&cfg, &mut rng)) <= 4u128.pow(3) * 4u128.pow(3));
        }
    }

    #[test]
    fn gap_definition() {
        assert_eq!(relative_gap(-10.0, -10.0), 0.0);
        assert_eq!(relative_gap(-9.0, -10.0), 0.1);
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
        assert_eq!(relative_gap(1.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn refuses_large_instances() {
        let c = DppCoefficients::<f64>::zeros(Node::Rsu(0), (0..8).collect(), 8, 3);
        assert!(matches!(oracle_solve(&c), Err(SchedulerError::InstanceTooLarge { .. })));
    }
}
