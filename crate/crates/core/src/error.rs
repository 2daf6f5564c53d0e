use thiserror::Error;

use crate::model::config::ConfigErrors;
use crate::model::partition::PartitionErrors;

/// Top-level error for library entry points that cross module boundaries.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Partition(#[from] PartitionErrors),
    #[error("mobility: {0}")]
    Mobility(#[from] crate::mobility::MobilityError),
    #[error("slicing: {0}")]
    Slicing(#[from] crate::slicing::SlicingError),
    #[error("scheduler: {0}")]
    Scheduler(#[from] crate::scheduler::SchedulerError),
    #[error("metrics: {0}")]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("slot {slot}, {module}: {source}")]
    Slot {
        slot: u64,
        module: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("plan: {0}")]
    Plan(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml parse: {0}")]
    TomlDe(#[from] toml::de::Error),
    #[error("toml write: {0}")]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn at(slot: u64, module: &'static str, e: impl Into<Error>) -> Self {
        Error::Slot { slot, module, source: Box::new(e.into()) }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
