//! Scheduler comparisons on short runs with common random numbers.

use vslice::harness::{run_slot_loop, RunSummary};
use vslice::model::{derive_seed, SchedulerKind, SimConfig};

fn run(ivd: f64, kind: SchedulerKind, duration: f64, edit: impl Fn(&mut SimConfig)) -> RunSummary {
    let mut c = SimConfig::default();
    c.scenario.inter_vehicle_distance = ivd;
    c.run.scheduler = kind;
    c.run.duration = duration;
    c.run.trace_level = 0;
    edit(&mut c);
    run_slot_loop(&c, None).unwrap().summary
}

fn top_fraction(s: &RunSummary) -> f64 {
    // Fractions end with the idle bucket.
    s.quality_fractions[s.quality_fractions.len() - 2]
}

#[test]
fn clusters_shrink_with_neighborhood_size() {
    let counts: Vec<f64> = [1.0, 10.0, 100.0, 1e3, 1e4]
        .iter()
        .map(|&sigma| run(800.0, SchedulerKind::Proposed, 2.0, |c| c.scenario.neighborhood_size = sigma).mean_clusters)
        .collect();
    assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    assert!(counts[0] > counts[4]);
}

#[test]
fn proposed_streams_more_top_quality_at_light_load() {
    let mean = |kind| {
        (0..3).map(|r| top_fraction(&run(2000.0, kind, 20.0, |c| c.scenario.seed = derive_seed(1, &[r])))).sum::<f64>() / 3.0
    };
    let (p, b) = (mean(SchedulerKind::Proposed), mean(SchedulerKind::Baseline1));
    assert!(p > b, "{p} vs {b}");
}

#[test]
#[ignore = "does not hold: the proposed scheduler idles while its virtual queues pay back, the baselines never idle"]
fn proposed_qoe_at_least_baseline1() {
    let p = run(800.0, SchedulerKind::Proposed, 10.0, |_| {});
    let b = run(800.0, SchedulerKind::Baseline1, 10.0, |_| {});
    assert!(p.network_qoe >= b.network_qoe, "{} vs {}", p.network_qoe, b.network_qoe);
}
