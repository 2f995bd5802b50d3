//! Scenario runner for the robinlab checks.

pub mod compare;
pub mod runner;
pub mod scenario;

pub use compare::{compare, compare_text, format_rows, CompareError, DiffRow};
pub use runner::{run, RunError, RunOutcome};
pub use scenario::{Check, Scenario, ScenarioError};
