//! Benchmark scenarios, the run loop, run directories and the exact
//! Riemann solution used to check the fluid limit.

pub mod output;
pub mod riemann;
pub mod runner;
pub mod scenario;

pub use output::{compare_runs, read_manifest, read_snapshot, run_to_dir, CompareRow, Manifest, RunWriter};
pub use riemann::{exact_riemann, star_state, StarState};
pub use runner::{run, run_collect, BackendKind, ControllerChoice, RunConfig, RunSummary, Snapshot};
pub use scenario::{build_scenario, Scenario, ScenarioName};
