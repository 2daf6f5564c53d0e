//! Experiment runner: the slot loop, run traces and reports, sweep campaigns.

pub mod plan;
pub mod sim;
pub mod traces;

pub use plan::{config_hash, run_cell, run_plan, Cell, CellRecord, ExperimentPlan, Manifest, Sweep};
pub use sim::{run_slot_loop, RunOutput};
pub use traces::{summarize, write_reports, RunSummary, Traces};
