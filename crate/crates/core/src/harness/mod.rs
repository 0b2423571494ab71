//! Experiment configuration, packet-level simulation and CSV output.

pub mod config;
pub mod csv_out;
pub mod exchange;
pub mod experiments;

pub use config::{ExperimentConfig, ExperimentKind, FadingKind};
pub use csv_out::{table_to_string, write_table};
pub use exchange::{simulate_point, PointSpec, Tally};
pub use experiments::{run, PerRow, QueueRow, SelectRow, SerRow, Table};
