//! Scenario loading and the closed planning/control loop.

pub mod config;
pub mod interface;
pub mod trial;

pub use config::{DesiredValue, Mode, Scenario, ScenarioConfig, ScheduledDisturbance, WorldConfig, SCENARIO_FORMAT_VERSION};
pub use interface::{plan_interface, spec_for, COST_KEYS};
pub use trial::{
    benchmark, filter_plans, observe, read_trace, run_batch, run_trial, success_predicate, summarize, write_trace, BatchSummary,
    BenchmarkReport, Stat, TraceRecord, TrialOptions, TrialOutcome, TrialSummary,
};
