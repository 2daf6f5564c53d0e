//! Drift-plus-penalty weight sweep: raising `eta` buys QoE with backlog.

use vslice::harness::run_slot_loop;
use vslice::metrics::spearman;
use vslice::model::{derive_seed, SchedulerKind, SimConfig};

const ETAS: [f64; 6] = [1e12, 1e13, 1e14, 1e15, 1e16, 1e17];
const REPS: u64 = 3;

#[test]
fn qoe_and_backlog_rise_with_eta() {
    let mut qoe = Vec::new();
    let mut backlog = Vec::new();
    for eta in ETAS {
        let (mut q, mut b) = (0.0, 0.0);
        for r in 0..REPS {
            let mut cfg = SimConfig::default();
            cfg.scenario.inter_vehicle_distance = 2000.0;
            cfg.scenario.eta = eta;
            cfg.scenario.seed = derive_seed(1, &[r]);
            cfg.run.scheduler = SchedulerKind::Proposed;
            cfg.run.duration = 10.0;
            cfg.run.trace_level = 0;
            let s = run_slot_loop(&cfg, None).unwrap().summary;
            q += s.network_qoe / REPS as f64;
            b += s.mean_backlog_bits / REPS as f64;
        }
        qoe.push(q);
        backlog.push(b);
    }
    let log_eta: Vec<f64> = ETAS.iter().map(|e| e.log10()).collect();
    let rq = spearman(&log_eta, &qoe).unwrap().unwrap();
    let rb = spearman(&log_eta, &backlog).unwrap().unwrap();
    println!("qoe {qoe:?} rho {rq:.3}\nbacklog {backlog:?} rho {rb:.3}");
    assert!(rq > 0.8, "QoE trend {rq}: {qoe:?}");
    assert!(rb > 0.8, "backlog trend {rb}: {backlog:?}");
}
