//! Data ingestion, synthetic case-study generation, and the CLI pipeline.

pub mod casegen;
pub mod cli;
pub mod network;
pub mod pipeline;
pub mod timeseries;

pub use casegen::{generate_case_study, three_node_network, CaseStudyConfig};
pub use cli::{run_pipeline, Cli};
pub use network::{load_network, save_network};
pub use pipeline::{analyze, Analysis};
pub use timeseries::{load_timeseries, save_timeseries};
