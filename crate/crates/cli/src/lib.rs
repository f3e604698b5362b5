//! Scenario runner: flat configs in, CSV/JSON/SVG artifacts and an invariant summary out.

pub mod config;
pub mod report;
pub mod scenarios;
pub mod svg;

pub use config::{ConfigError, Scenario, ScenarioConfig};
pub use report::{verify, Check, Summary, Verdict};
pub use scenarios::{run_scenario, RunError};
