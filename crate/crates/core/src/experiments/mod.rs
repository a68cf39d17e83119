//! Declarative scenarios, theorem-by-theorem verification campaigns,
//! parameter sweeps, and report emission.
//!
//! A scenario is a JSON document (schema version 1) naming the initial
//! condition, model parameters, grid, horizon and checks; campaigns force
//! the check set appropriate to the claim they verify and gate on its
//! admissibility conditions. Scenario runs are independent jobs; sweeps
//! execute them on the rayon worker pool and write per-scenario output
//! directories.

mod campaign;
mod checks;
mod oracle;
mod report;
mod scenario;
mod sweeps;

pub use campaign::{
    run_scenario, run_scenario_with_overrides, verify_theorem1, verify_theorem3,
    verify_theorem_rlarge, CampaignResult, TrajectorySummary,
};
pub use checks::{CheckContext, CheckName, CheckSpec, CheckStatus, Verdict};
pub use oracle::run_oracle_battery;
pub use report::{output_files, persist_campaign, resume_scenario};
pub use scenario::{apply_override, InitialCondition, ScenarioSpec, SCHEMA_VERSION};
pub use sweeps::{
    explore_subcritical, sweep_resolution, sweep_viscosity, CellClass, ResolutionSweep,
    SubcriticalCell, ViscositySweep, DEFAULT_EPS_LIST, DEFAULT_N_LIST,
};
