//! Batch driver: TOML scenario files, parameter sweeps, CSV tables and the
//! command-line interface.

pub mod cli;
mod config;
mod output;
mod sweep;

pub use config::{
    ChannelSection, ConfigFile, EeForm, EnvironmentSection, Method, OutputSection, PowerSection,
    QuadratureSection, ScenarioSection, SimulationSection, SweepSection, SweepVariable, Units,
};
pub use output::{csv_string, emit_csv, write_csv, HEADER};
pub use sweep::{
    check_point, placement, run_points, run_sweep, scenario_at, sweep_points, Metrics, Overrides,
    Point, Row,
};

use crate::error::{Error, Result};

/// Sweep files shipped with the binary.
pub const PRESETS: [(&str, &str); 4] = [
    (
        "capacity_vs_radius",
        include_str!("../../configs/capacity_vs_radius.toml"),
    ),
    (
        "policy_comparison",
        include_str!("../../configs/policy_comparison.toml"),
    ),
    (
        "ee_vs_radius",
        include_str!("../../configs/ee_vs_radius.toml"),
    ),
    (
        "ee_vs_altitude",
        include_str!("../../configs/ee_vs_altitude.toml"),
    ),
];

pub const EXAMPLE_CONFIG: &str = include_str!("../../configs/example.toml");

pub fn preset(name: &str) -> Result<ConfigFile> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        Error::Config(format!(
            "unknown preset `{name}` (available: {})",
            names.join(", ")
        ))
    })?;
    ConfigFile::parse(text)
}
