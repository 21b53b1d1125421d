//! Command-line front end and file output (CSV, SVG, JSON sidecars).

pub mod cli;
pub mod csv;
pub mod svg;

pub use self::csv::{emit_csv, read_sweep_csv, sweep_rows, to_csv_string, CsvTable, SweepRow};
pub use self::svg::{emit_svg, heatmap_svg, sweep_svg};
pub use cli::{parse_cli, run, CliError, Command, Formats, RunManifest};
