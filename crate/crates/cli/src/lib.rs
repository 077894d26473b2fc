//! Command-line front end for the `histories` engine.
//!
//! A scenario file describes one family of histories; the verbs in
//! [`cli::Command`] query it. [`cli::run`] is the whole program minus
//! process I/O, which keeps it testable in-process.

pub mod cli;
pub mod commands;
pub mod report;
pub mod scenario;

pub use cli::{run, Invocation};
pub use scenario::{parse_scenario, Scenario, ScenarioError, ScenarioErrors};
