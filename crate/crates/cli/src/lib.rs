//! Scenario runner: presets for the four large-order categories, the spectrum
//! comparison and the valley profile, with CSV/JSON artifacts.

pub mod error;
pub mod plot;
pub mod run;
pub mod scenario;

pub use error::{CliError, CliResult};
pub use plot::{emit_plotdata, PlotKind};
pub use run::{run, RunSummary};
pub use scenario::{resolve, ConfigFile, Overrides, Scenario, ScenarioName};
