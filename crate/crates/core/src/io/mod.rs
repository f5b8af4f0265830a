//! File formats, presets, sweeps and the command-line front end.

pub mod cli;
pub mod config;
pub mod series;
pub mod sweep;

pub use config::{load_config, parse_config, MetricSettings, RunConfig};
pub use series::{read_any_series, read_series, read_trajectory, write_series, write_trajectory};
pub use sweep::{illuminance_scale, run_sweep, SweepOutput, SweepPoints, SweepSpec, SweepTable};
