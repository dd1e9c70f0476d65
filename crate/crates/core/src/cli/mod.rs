//! Command-line driver: configuration files, sweeps, time series, collapse
//! fits and their CSV/JSON outputs.

mod commands;
mod config;
mod io;

pub use commands::{
    cmd_classical, cmd_collapse, cmd_sweep, cmd_timeseries, collapse_points, Axis, CollapseArgs, CollapseReport,
    TimeSeriesFitReport,
};
pub use config::{parse_grid_arg, parse_range, parse_sizes_arg, Grid, Overrides, RunConfig, CONFIG_KEYS};
pub use io::{
    fmt_f64, read_raw, read_summary, write_raw, write_summary, write_timeseries, CellKey, CellResult, CellSeries,
    Manifest, RawRow, SummaryRow,
};
