//! Concave-convex procedure for the per-slot drift-plus-penalty program.
//!
//! The bilinear term `−Σ x z ζ` is written as `Σ ζ/4 [(x − z)² − (x + z)²]`.
//! Linearizing `(x + z)²` at the anchor `(a, b)` gives a convex majorizer
//! `S(x, z; a, b) = Σ xϑ + Σ zΦ − Γ(x, z; a, b)` that touches the true
//! objective at the anchor. Each iteration minimizes `S` over feasible binary
//! points and moves the anchor there, so the true objective never increases.

use crate::model::Level;
use crate::scalar::Real;

use super::coefficients::DppCoefficients;

/// A feasible point: at most one owner per RB and a prefix level per vehicle (local indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub owner: Vec<Option<usize>>,
    pub level: Vec<Level>,
}

impl Assignment {
    pub fn idle(num_rbs: usize, vehicles: usize) -> Self {
        Self { owner: vec![None; num_rbs], level: vec![None; vehicles] }
    }

    #[inline]
    pub fn x(&self, v: usize, m: usize) -> bool {
        self.owner[m] == Some(v)
    }

    #[inline]
    pub fn z(&self, v: usize, j: usize) -> bool {
        self.level[v].is_some_and(|l| j <= l)
    }
}

fn b2t<T: Real>(b: bool) -> T {
    if b { T::one() } else { T::zero() }
}

/// `Σ xϑ + Σ zΦ − Σ x z ζ`.
pub fn true_objective<T: Real>(c: &DppCoefficients<T>, a: &Assignment) -> T {
    let mut total = T::zero();
    for (m, o) in a.owner.iter().enumerate() {
        if let Some(v) = *o {
            total += c.theta(v, m);
            for j in 0..c.levels {
                if a.z(v, j) {
                    total -= c.zeta(v, m, j);
                }
            }
        }
    }
    for v in 0..c.len() {
        for j in 0..c.levels {
            if a.z(v, j) {
                total += c.phi(v, j);
            }
        }
    }
    total
}

/// `Σ xϑ + Σ zΦ − Γ(x, z; a, b)` with `Γ` the first-order expansion of the cross term at the anchor.
pub fn surrogate<T: Real>(c: &DppCoefficients<T>, p: &Assignment, anchor: &Assignment) -> T {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mut total = T::zero();
    for v in 0..c.len() {
        for m in 0..c.num_rbs {
            let (x, a) = (b2t::<T>(p.x(v, m)), b2t::<T>(anchor.x(v, m)));
            total += x * c.theta(v, m);
            for j in 0..c.levels {
                let (z, b) = (b2t::<T>(p.z(v, j)), b2t::<T>(anchor.z(v, j)));
                let s = a + b;
                let gamma = c.zeta(v, m, j) / four
                    * (s * s + two * (x - a) * s + two * (z - b) * s - (x - z) * (x - z));
                total -= gamma;
            }
        }
        for j in 0..c.levels {
            if p.z(v, j) {
                total += c.phi(v, j);
            }
        }
    }
    total
}

/// Starting point when no previous decision exists: no RBs, lowest level
/// (or the frozen levels).
pub fn initial_anchor<T: Real>(c: &DppCoefficients<T>) -> Assignment {
    Assignment {
        owner: vec![None; c.num_rbs],
        level: c.frozen.clone().unwrap_or_else(|| vec![Some(0); c.len()]),
    }
}

/// Per-RB argmin of `cost(v, m)` over vehicles, keeping the RB idle unless strictly negative.
fn argmin_owner<T: Real>(n: usize, num_rbs: usize, cost: impl Fn(usize, usize) -> T) -> Vec<Option<usize>> {
    (0..num_rbs)
        .map(|m| {
            let mut best = (T::zero(), None);
            for v in 0..n {
                let x = cost(v, m);
                if x < best.0 {
                    best = (x, Some(v));
                }
            }
            best.1
        })
        .collect()
}

/// Cheapest prefix by scanning cumulative costs; idle unless strictly better.
fn prefix_scan<T: Real>(levels: usize, cost: impl Fn(usize) -> T) -> Level {
    let (mut acc, mut best) = (T::zero(), (T::zero(), None));
    for j in 0..levels {
        acc += cost(j);
        if acc < best.0 {
            best = (acc, Some(j));
        }
    }
    best.1
}

/// Best RB owners for fixed quality.
pub fn exact_owners<T: Real>(c: &DppCoefficients<T>, level: &[Level]) -> Vec<Option<usize>> {
    argmin_owner(c.len(), c.num_rbs, |v, m| {
        let mut x = c.theta(v, m);
        if let Some(l) = level[v] {
            for j in 0..=l {
                x -= c.zeta(v, m, j);
            }
        }
        x
    })
}

/// Best quality for fixed RB owners.
pub fn exact_levels<T: Real>(c: &DppCoefficients<T>, owner: &[Option<usize>]) -> Vec<Level> {
    (0..c.len())
        .map(|v| {
            prefix_scan(c.levels, |j| {
                let mut x = c.phi(v, j);
                for (m, o) in owner.iter().enumerate() {
                    if *o == Some(v) {
                        x -= c.zeta(v, m, j);
                    }
                }
                x
            })
        })
        .collect()
}

/// Result of one pool solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CcpOutcome<T> {
    pub assignment: Assignment,
    /// Majorizer value at the returned point around the last anchor.
    pub surrogate_value: T,
    /// True objective at the returned point.
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
    /// True objective at each successive anchor.
    pub history: Vec<T>,
}

fn candidates<T: Real>(c: &DppCoefficients<T>, anchor: &Assignment) -> Vec<Assignment> {
    let (n, half) = (c.len(), T::lit(0.5));
    let cx = |v: usize, m: usize| {
        let mut x = c.theta(v, m);
        let a = b2t::<T>(anchor.x(v, m));
        for j in 0..c.levels {
            x -= c.zeta(v, m, j) * (a + b2t::<T>(anchor.z(v, j))) * half;
        }
        x
    };
    let cz = |v: usize, j: usize| {
        let mut x = c.phi(v, j);
        let b = b2t::<T>(anchor.z(v, j));
        for m in 0..c.num_rbs {
            x -= c.zeta(v, m, j) * (b2t::<T>(anchor.x(v, m)) + b) * half;
        }
        x
    };
    let lin = Assignment {
        owner: argmin_owner(n, c.num_rbs, cx),
        level: (0..n).map(|v| prefix_scan(c.levels, |j| cz(v, j))).collect(),
    };

    let mut out = vec![anchor.clone(), lin.clone()];
    for v in 0..n {
        let l = lin.level[v];
        let down = match l {
            Some(0) => Some(None),
            Some(k) => Some(Some(k - 1)),
            None => None,
        };
        let up = match l {
            None => Some(Some(0)),
            Some(k) if k + 1 < c.levels => Some(Some(k + 1)),
            _ => None,
        };
        for alt in [down, up].into_iter().flatten() {
            let mut p = lin.clone();
            p.level[v] = alt;
            out.push(p);
        }
    }
    out.push(Assignment { owner: exact_owners(c, &lin.level), level: lin.level.clone() });
    out.push(Assignment { owner: lin.owner.clone(), level: exact_levels(c, &lin.owner) });
    let mut p = lin;
    for _ in 0..10 {
        let owner = exact_owners(c, &p.level);
        let level = exact_levels(c, &owner);
        let next = Assignment { owner, level };
        if next == p {
            break;
        }
        p = next;
    }
    out.push(p);
    out
}

/// Runs the procedure from `anchor` until the majorizer improves by less than
/// `tol` (relative) or `max_iters` is reached. Frozen-quality problems are
/// linear in the RB variables and solved exactly in one step.
pub fn ccp_solve<T: Real>(c: &DppCoefficients<T>, anchor: Assignment, max_iters: usize, tol: f64) -> CcpOutcome<T> {
    if let Some(levels) = &c.frozen {
        let a = Assignment { owner: exact_owners(c, levels), level: levels.clone() };
        let obj = true_objective(c, &a);
        return CcpOutcome { assignment: a, surrogate_value: obj, objective: obj, iterations: 1, converged: true, history: vec![obj] };
    }
    let mut anchor = anchor;
    let mut history = vec![true_objective(c, &anchor)];
    let mut s_best = history[0];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let at_anchor = history[history.len() - 1];
        let mut best: Option<(T, Assignment)> = None;
        for cand in candidates(c, &anchor) {
            let s = surrogate(c, &cand, &anchor);
            if best.as_ref().is_none_or(|b| s < b.0) {
                best = Some((s, cand));
            }
        }
        let (s, next) = best.expect("anchor is always a candidate");
        s_best = s;
        let improvement = at_anchor - s;
        let moved = next != anchor;
        if moved {
            anchor = next;
            history.push(true_objective(c, &anchor));
        }
        if !moved || improvement <= T::lit(tol) * at_anchor.abs().max(T::one()) {
            converged = true;
            break;
        }
    }
    let objective = true_objective(c, &anchor);
    CcpOutcome { assignment: anchor, surrogate_value: s_best, objective, iterations, converged, history }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Node;

    fn random_problem(seed: u64) -> DppCoefficients<f64> {
        use rand::Rng;
        let mut r = crate::model::RandomSource::new(seed, 9).rng();
        let (n, m, l) = (r.random_range(1..=3), r.random_range(1..=3), r.random_range(1..=3));
        let mut c = DppCoefficients::zeros(Node::Rsu(0), (0..n).collect(), m, l);
        for x in c.theta.iter_mut().chain(c.phi.iter_mut()) {
            *x = r.random_range(-5.0..5.0);
        }
        for x in c.zeta.iter_mut() {
            *x = r.random_range(0.0..3.0);
        }
        c
    }

    fn all_points(c: &DppCoefficients<f64>) -> Vec<Assignment> {
        let mut pts = vec![Assignment::idle(c.num_rbs, c.len())];
        for m in 0..c.num_rbs {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    (0..=c.len()).map(move |o| {
                        let mut q = p.clone();
                        q.owner[m] = o.checked_sub(1);
                        q
                    })
                })
                .collect();
        }
        for v in 0..c.len() {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    (0..=c.levels).map(move |l| {
                        let mut q = p.clone();
                        q.level[v] = l.checked_sub(1);
                        q
                    })
                })
                .collect();
        }
        pts
    }

    #[test]
    fn majorizer_touches_and_bounds() {
        for seed in 0..20 {
            let c = random_problem(seed);
            let pts = all_points(&c);
            for anchor in pts.iter().step_by(7) {
                assert!((surrogate(&c, anchor, anchor) - true_objective(&c, anchor)).abs() < 1e-9);
                for p in &pts {
                    let s = surrogate(&c, p, anchor);
                    let t = true_objective(&c, p);
                    assert!(s >= t - 1e-9);
                    // On binary points the gap is Σ ζ/4 (x + z − a − b)².
                    let mut gap = 0.0;
                    for v in 0..c.len() {
                        for m in 0..c.num_rbs {
                            for j in 0..c.levels {
                                let d = p.x(v, m) as i32 + p.z(v, j) as i32 - anchor.x(v, m) as i32 - anchor.z(v, j) as i32;
                                gap += c.zeta(v, m, j) / 4.0 * f64::from(d * d);
                            }
                        }
                    }
                    assert!((s - t - gap).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn objective_never_increases() {
        for seed in 0..50 {
            let c = random_problem(seed);
            let out = ccp_solve(&c, initial_anchor(&c), 20, 1e-6);
            for w in out.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", out.history);
            }
            assert_eq!(out.objective, *out.history.last().unwrap());
        }
    }

    #[test]
    fn frozen_quality_is_exact() {
        for seed in 0..30 {
            let mut c = random_problem(seed);
            c.frozen = Some(vec![Some(0); c.len()]);
            let out = ccp_solve(&c, initial_anchor(&c), 20, 1e-6);
            let best = all_points(&c)
                .into_iter()
                .filter(|p| p.level == vec![Some(0); c.len()])
                .map(|p| true_objective(&c, &p))
                .fold(f64::INFINITY, f64::min);
            assert!((out.objective - best).abs() < 1e-9);
        }
    }

    #[test]
    fn square_difference_identity() {
        for x in [0.0f64, 1.0] {
            for z in [0.0f64, 1.0] {
                assert_eq!((x - z).powi(2) - (x + z).powi(2), -4.0 * x * z);
            }
        }
    }
}
