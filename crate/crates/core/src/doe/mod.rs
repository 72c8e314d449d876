//! Two-level, three-factor full-factorial experiments: design, effects,
//! Pareto ranking, OK-criterion verdicts and the iteration ledger.
//!
//! Effects are mean differences, `(sum(+) - sum(-)) / 4`, and coefficients
//! are half the effects. The ABC interaction is always computed; Pareto
//! charts leave it out unless a plan asks for it, and predictions include
//! it only on request.

mod criterion;
mod design;
mod effects;
mod ledger;
mod pareto;
mod plan;

pub use criterion::{evaluate_ok, Comparator, OkCriterion};
pub use design::{design_matrix, DesignMatrix, Signs, Term, RUNS};
pub use effects::{aggregate_rounds, compute_effects, predict, Direction, EffectsReport, ResponseTable, RoundStats};
pub use ledger::{
    run_plan, run_seed, Executor, Iteration, IterationLedger, IterationStatus, RunContext, LEDGER_SCHEMA_VERSION,
};
pub use pareto::{pareto, ParetoEntry, ParetoReport, VITAL_FEW_LINE};
pub use plan::{
    next_iteration, set_pointer, AdjustRange, Binding, Decisions, ExperimentPlan, Factor, FactorId, FixFactor,
    FixedVariable, Level, NewFactor, SettingValue, PLAN_SCHEMA_VERSION,
};
