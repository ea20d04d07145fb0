//! Inequality reports, parameter sweeps and their CSV/JSON emission.

mod report;
mod sweep;

pub use report::{format_float, parse_float, InequalityReport, Provenance};
pub use sweep::{
    emit, expand, render, run_sweep, write_csv, write_json, Cell, CellOverride, FailedCell, FloatSpec, Format,
    QuadOverride, SkippedCell, SweepKind, SweepResult, SweepSpec, CSV_COLUMNS,
};
