//! Campaign ledger and plan execution.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::criterion::evaluate_ok;
use super::design::{design_matrix, Signs, RUNS};
use super::effects::{EffectsReport, ResponseTable, RoundStats};
use super::pareto::{pareto, ParetoReport};
use super::plan::{Binding, ExperimentPlan};
use crate::error::{Error, Result};

pub const LEDGER_SCHEMA_VERSION: u32 = 1;

/// Everything an executor needs to produce one response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunContext {
    /// 1-based, standard order.
    pub experiment: usize,
    /// 1-based.
    pub round: usize,
    pub signs: Signs,
    pub seed: u64,
    pub bindings: Vec<Binding>,
}

/// Produces the response of one experiment in one round.
pub trait Executor: Sync {
    fn execute(&self, plan: &ExperimentPlan, run: &RunContext) -> Result<f64>;
}

impl<F> Executor for F
where
    F: Fn(&ExperimentPlan, &RunContext) -> Result<f64> + Sync,
{
    fn execute(&self, plan: &ExperimentPlan, run: &RunContext) -> Result<f64> {
        self(plan, run)
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one (experiment, round) cell; distinct cells get independent seeds.
pub fn run_seed(plan_seed: u64, experiment: usize, round: usize) -> u64 {
    mix(mix(plan_seed) ^ ((experiment as u64) << 32 | round as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum IterationStatus {
    Completed,
    Aborted { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub number: usize,
    pub plan: ExperimentPlan,
    pub status: IterationStatus,
    /// `responses[experiment][round]`; `None` where a run failed or never ran.
    pub responses: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effects: Option<EffectsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pareto: Option<ParetoReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<Vec<bool>>,
    #[serde(default)]
    pub note: String,
}

impl Iteration {
    /// Analyzes a complete response table (used both after execution and for replays).
    pub fn from_table(plan: ExperimentPlan, table: &ResponseTable) -> Result<Iteration> {
        let effects = EffectsReport::from_table(table)?;
        let pareto = match pareto(&effects, plan.pareto_include_abc) {
            Ok(p) => Some(p),
            Err(Error::EmptyPareto) => None,
            Err(e) => return Err(e),
        };
        let verdicts = match &plan.ok {
            Some(ok) => Some(evaluate_ok(ok, table.metric, &effects.averages())?),
            None => None,
        };
        Ok(Iteration {
            number: 0,
            note: plan.rationale.clone(),
            plan,
            status: IterationStatus::Completed,
            responses: table
                .responses
                .iter()
                .map(|r| r.iter().map(|&v| Some(v)).collect())
                .collect(),
            effects: Some(effects),
            pareto,
            verdicts,
        })
    }

    pub fn round_stats(&self) -> Option<&[RoundStats]> {
        self.effects.as_ref().map(|e| e.round_stats.as_slice())
    }

    pub fn is_completed(&self) -> bool {
        self.status == IterationStatus::Completed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLedger {
    pub schema_version: u32,
    pub campaign: String,
    pub iterations: Vec<Iteration>,
}

impl IterationLedger {
    pub fn new(campaign: impl Into<String>) -> Self {
        IterationLedger {
            schema_version: LEDGER_SCHEMA_VERSION,
            campaign: campaign.into(),
            iterations: Vec::new(),
        }
    }

    /// Appends an iteration, numbering it after the last one.
    pub fn append(&mut self, mut iteration: Iteration) -> &Iteration {
        iteration.number = self.iterations.len() + 1;
        self.iterations.push(iteration);
        self.iterations.last().expect("just pushed")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ledger: IterationLedger = serde_json::from_str(text)?;
        if ledger.schema_version != LEDGER_SCHEMA_VERSION {
            return Err(Error::MalformedFile(format!(
                "unsupported ledger schema {}",
                ledger.schema_version
            )));
        }
        for (i, it) in ledger.iterations.iter().enumerate() {
            if it.number != i + 1 {
                return Err(Error::MalformedFile(format!(
                    "iteration {} is numbered {}",
                    i + 1,
                    it.number
                )));
            }
        }
        Ok(ledger)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Loads `path` if it exists, otherwise starts a new ledger.
    pub fn load_or_new(path: &Path, campaign: &str) -> Result<Self> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::new(campaign))
        }
    }
}

/// Executes all 8 x R runs of `plan`, analyzes them and appends the outcome.
///
/// Runs execute in parallel but each has its own seed and results are placed
/// back in standard order. A failing run aborts the iteration; responses that
/// did complete are kept.
pub fn run_plan<'a, E: Executor + ?Sized>(
    plan: &ExperimentPlan,
    executor: &E,
    ledger: &'a mut IterationLedger,
) -> Result<&'a Iteration> {
    plan.validate()?;
    let design = design_matrix();
    let cells: Vec<RunContext> = (0..RUNS)
        .flat_map(|e| {
            let signs = design.rows()[e];
            (0..plan.rounds).map(move |r| (e, r, signs))
        })
        .map(|(e, r, signs)| RunContext {
            experiment: e + 1,
            round: r + 1,
            signs,
            seed: run_seed(plan.seed, e + 1, r + 1),
            bindings: plan.bindings(signs),
        })
        .collect();
    let outcomes: Vec<Result<f64>> = cells.par_iter().map(|ctx| executor.execute(plan, ctx)).collect();

    let mut responses = vec![vec![None; plan.rounds]; RUNS];
    let mut first_error = None;
    for (ctx, outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(v) if v.is_finite() => responses[ctx.experiment - 1][ctx.round - 1] = Some(v),
            Ok(v) => {
                first_error.get_or_insert_with(|| {
                    format!("experiment {} round {}: non-finite response {v}", ctx.experiment, ctx.round)
                });
            }
            Err(e) => {
                first_error.get_or_insert_with(|| format!("experiment {} round {}: {e}", ctx.experiment, ctx.round));
            }
        }
    }

    let iteration = match first_error {
        Some(error) => Iteration {
            number: 0,
            plan: plan.clone(),
            status: IterationStatus::Aborted { error },
            responses,
            effects: None,
            pareto: None,
            verdicts: None,
            note: plan.rationale.clone(),
        },
        None => {
            let values = responses
                .iter()
                .map(|r| r.iter().map(|v| v.expect("all runs succeeded")).collect())
                .collect();
            let table = ResponseTable::new(values, plan.direction, plan.metric)?;
            Iteration::from_table(plan.clone(), &table)?
        }
    };
    Ok(ledger.append(iteration))
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use serde_json::json;

    use super::*;
    use crate::analysis::MetricId;
    use crate::doe::{Direction, Factor, FactorId, SettingValue, Term};

    fn plan(rounds: usize) -> ExperimentPlan {
        let f = |id, p: &str| Factor {
            id,
            name: p.into(),
            parameter: format!("/{p}"),
            low: SettingValue::Int(0),
            high: SettingValue::Int(1),
        };
        ExperimentPlan {
            schema_version: 1,
            name: "toy".into(),
            metric: MetricId::CorrPeak,
            direction: Direction::Maximize,
            factors: vec![f(FactorId::A, "a"), f(FactorId::B, "b"), f(FactorId::C, "c")],
            fixed: vec![],
            pipeline: json!({}),
            rounds,
            seed: 9,
            ok: None,
            pareto_include_abc: false,
            rationale: String::new(),
        }
    }

    /// Response 10 + 5A - B, independent of round and seed.
    fn linear(_: &ExperimentPlan, run: &RunContext) -> Result<f64> {
        Ok(10.0 + 5.0 * run.signs.a as f64 - run.signs.b as f64)
    }

    #[test]
    fn deterministic_executor_gives_zero_spread() {
        let mut ledger = IterationLedger::new("c");
        let it = run_plan(&plan(3), &linear, &mut ledger).unwrap();
        assert!(it.is_completed());
        assert_eq!(it.number, 1);
        for s in it.round_stats().unwrap() {
            assert_eq!(s.std_dev, Some(0.0));
        }
        let eff = it.effects.as_ref().unwrap();
        assert!((eff.effect(Term::A) - 10.0).abs() < 1e-12);
        assert!((eff.effect(Term::B) + 2.0).abs() < 1e-12);
        assert_eq!(it.pareto.as_ref().unwrap().vital_few, vec![Term::A]);
    }

    #[test]
    fn single_round_has_no_std_dev() {
        let mut ledger = IterationLedger::new("c");
        let it = run_plan(&plan(1), &linear, &mut ledger).unwrap();
        assert!(it.round_stats().unwrap().iter().all(|s| s.std_dev.is_none()));
    }

    #[test]
    fn seeded_runs_are_reproducible_and_in_order() {
        let noisy = |_: &ExperimentPlan, run: &RunContext| -> Result<f64> {
            Ok((run.seed % 1000) as f64 + run.experiment as f64 * 1e6)
        };
        let mut a = IterationLedger::new("c");
        let mut b = IterationLedger::new("c");
        run_plan(&plan(3), &noisy, &mut a).unwrap();
        run_plan(&plan(3), &noisy, &mut b).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        for (e, row) in a.iterations[0].responses.iter().enumerate() {
            for v in row {
                assert_eq!((v.unwrap() / 1e6).floor() as usize, e + 1);
            }
        }
    }

    #[test]
    fn run_seeds_are_distinct() {
        let seeds: HashSet<u64> = (1..=8).flat_map(|e| (1..=5).map(move |r| run_seed(3, e, r))).collect();
        assert_eq!(seeds.len(), 40);
        assert_ne!(run_seed(3, 1, 1), run_seed(4, 1, 1));
    }

    #[test]
    fn failing_run_aborts_but_keeps_partial_responses() {
        let flaky = |_: &ExperimentPlan, run: &RunContext| -> Result<f64> {
            if run.experiment == 6 && run.round == 2 {
                Err(Error::Executor("scope disconnected".into()))
            } else {
                Ok(1.0)
            }
        };
        let mut ledger = IterationLedger::new("c");
        let it = run_plan(&plan(3), &flaky, &mut ledger).unwrap();
        match &it.status {
            IterationStatus::Aborted { error } => assert!(error.contains("experiment 6 round 2"), "{error}"),
            other => panic!("{other:?}"),
        }
        assert!(it.effects.is_none());
        assert_eq!(it.responses[5][1], None);
        assert_eq!(it.responses[5][0], Some(1.0));
        assert_eq!(ledger.iterations.len(), 1);
    }

    #[test]
    fn non_finite_response_aborts() {
        let nan = |_: &ExperimentPlan, _: &RunContext| -> Result<f64> { Ok(f64::NAN) };
        let mut ledger = IterationLedger::new("c");
        assert!(!run_plan(&plan(1), &nan, &mut ledger).unwrap().is_completed());
    }

    #[test]
    fn invalid_plan_is_not_recorded() {
        let mut ledger = IterationLedger::new("c");
        assert!(run_plan(&plan(0), &linear, &mut ledger).is_err());
        assert!(ledger.iterations.is_empty());
    }

    #[test]
    fn ledger_roundtrip_and_numbering_check() {
        let mut ledger = IterationLedger::new("c");
        run_plan(&plan(2), &linear, &mut ledger).unwrap();
        run_plan(&plan(2), &linear, &mut ledger).unwrap();
        let text = ledger.to_json().unwrap();
        assert_eq!(IterationLedger::from_json(&text).unwrap(), ledger);

        let mut broken = ledger.clone();
        broken.iterations[1].number = 5;
        assert!(matches!(
            IterationLedger::from_json(&broken.to_json().unwrap()),
            Err(Error::MalformedFile(_))
        ));
    }

    #[test]
    fn all_zero_effects_leave_pareto_empty() {
        let flat = |_: &ExperimentPlan, _: &RunContext| -> Result<f64> { Ok(0.5) };
        let mut ledger = IterationLedger::new("c");
        let it = run_plan(&plan(2), &flat, &mut ledger).unwrap();
        assert!(it.is_completed());
        assert!(it.pareto.is_none());
    }
}
