//! File formats and commands around `adtrap-core`: scenario loading with
//! located errors, CSV/JSON artifacts, and the `validate`/`run`/`sweep`
//! entry points used by the binary.

pub mod artifacts;
pub mod commands;
pub mod error;
pub mod load;

pub use commands::{
    cmd_run, cmd_sweep, cmd_validate, parse_grid, parse_seeds, run_loaded, RunOutput, SweepOutput,
    ValidationReport,
};
pub use error::CliError;
pub use load::{load_scenario, parse_scenario};
