//! Scenario configuration, built-in systems, and batch execution.

mod builtins;
mod config;
mod runner;

pub use builtins::{
    builtin_config, builtin_config_with, compile_builtin_field, dsl_equivalent, is_builtin,
    list_builtins, BUILTIN_IDS,
};
pub use config::{
    compile_derivator, compile_field_spec, load_derivator, load_scenario, CandidateSpec,
    CompiledScenario, DerivatorSpec, DomainConfig, FieldSpec, InitialSpec, JumpSpec, OutputSpec,
    PieceSpec, ScenarioConfig, StabilitySpec, SystemSpec,
};
pub use runner::{
    certificate_grid, certificate_options, fmt17, render_csv, run_certificate, run_probe,
    run_scenario, RunArtifacts, TrajectoryOutcome,
};
