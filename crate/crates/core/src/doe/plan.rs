//! Experiment plans: factor definitions bound to pipeline parameters, the
//! fixed-variable table, and construction of the next iteration.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::criterion::OkCriterion;
use super::design::Signs;
use super::effects::Direction;
use super::ledger::IterationLedger;
use crate::analysis::MetricId;
use crate::error::{Error, Result};

pub const PLAN_SCHEMA_VERSION: u32 = 1;

/// A value a factor level or fixed variable assigns to a pipeline parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SettingValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

impl SettingValue {
    fn kind(&self) -> &'static str {
        match self {
            SettingValue::Bool(_) => "boolean",
            SettingValue::Int(_) | SettingValue::Real(_) => "number",
            SettingValue::Text(_) => "text",
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            SettingValue::Bool(b) => Value::Bool(*b),
            SettingValue::Int(i) => Value::from(*i),
            SettingValue::Real(r) => Value::from(*r),
            SettingValue::Text(s) => Value::String(s.clone()),
        }
    }
}

impl fmt::Display for SettingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingValue::Bool(b) => write!(f, "{b}"),
            SettingValue::Int(i) => write!(f, "{i}"),
            SettingValue::Real(r) => write!(f, "{r}"),
            SettingValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FactorId {
    A,
    B,
    C,
}

impl FactorId {
    pub const ALL: [FactorId; 3] = [FactorId::A, FactorId::B, FactorId::C];

    pub fn sign(self, s: Signs) -> i8 {
        match self {
            FactorId::A => s.a,
            FactorId::B => s.b,
            FactorId::C => s.c,
        }
    }
}

impl fmt::Display for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub id: FactorId,
    pub name: String,
    /// JSON pointer into the plan's pipeline document.
    pub parameter: String,
    pub low: SettingValue,
    pub high: SettingValue,
}

impl Factor {
    pub fn level(&self, sign: i8) -> &SettingValue {
        if sign > 0 {
            &self.high
        } else {
            &self.low
        }
    }

    pub fn value_at(&self, level: Level) -> &SettingValue {
        match level {
            Level::Low => &self.low,
            Level::High => &self.high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedVariable {
    pub name: String,
    /// Pipeline parameter the value is written to; informational rows have none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    pub value: SettingValue,
}

fn default_schema() -> u32 {
    PLAN_SCHEMA_VERSION
}

fn default_rounds() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub name: String,
    pub metric: MetricId,
    pub direction: Direction,
    pub factors: Vec<Factor>,
    #[serde(default)]
    pub fixed: Vec<FixedVariable>,
    /// Pipeline document the factor and fixed bindings are written into.
    #[serde(default)]
    pub pipeline: Value,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ok: Option<OkCriterion>,
    #[serde(default)]
    pub pareto_include_abc: bool,
    /// Why this iteration was set up the way it is.
    #[serde(default)]
    pub rationale: String,
}

/// A parameter assignment for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub parameter: String,
    pub value: SettingValue,
}

impl ExperimentPlan {
    /// Checks everything serde cannot, reporting the offending field as a JSON pointer.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != PLAN_SCHEMA_VERSION {
            return Err(Error::schema("/schema_version", format!("unsupported version {}", self.schema_version)));
        }
        if self.factors.len() != 3 {
            return Err(Error::schema(
                "/factors",
                format!("a 2^3 design needs exactly 3 factors, got {}", self.factors.len()),
            ));
        }
        for (i, f) in self.factors.iter().enumerate() {
            if self.factors[..i].iter().any(|g| g.id == f.id) {
                return Err(Error::schema(format!("/factors/{i}/id"), format!("duplicate factor id {}", f.id)));
            }
            if f.low == f.high {
                return Err(Error::schema(format!("/factors/{i}/high"), "high level equals low level"));
            }
            if f.low.kind() != f.high.kind() {
                return Err(Error::schema(
                    format!("/factors/{i}/high"),
                    format!("level types differ ({} vs {})", f.low.kind(), f.high.kind()),
                ));
            }
            if !f.parameter.starts_with('/') {
                return Err(Error::schema(format!("/factors/{i}/parameter"), "parameter must be a JSON pointer"));
            }
        }
        for (i, v) in self.fixed.iter().enumerate() {
            if let Some(p) = &v.parameter {
                if !p.starts_with('/') {
                    return Err(Error::schema(format!("/fixed/{i}/parameter"), "parameter must be a JSON pointer"));
                }
            }
        }
        if self.rounds == 0 {
            return Err(Error::schema("/rounds", "at least one round is required"));
        }
        if let Some(ok) = &self.ok {
            if ok.metric != self.metric {
                return Err(Error::schema("/ok/metric", "criterion metric differs from plan metric"));
            }
            ok.validate().map_err(|e| Error::schema("/ok/comparator", e.to_string()))?;
        }
        Ok(())
    }

    pub fn factor(&self, id: FactorId) -> Option<&Factor> {
        self.factors.iter().find(|f| f.id == id)
    }

    /// Parameter assignments for one run: fixed variables first, then factor levels.
    pub fn bindings(&self, signs: Signs) -> Vec<Binding> {
        let fixed = self.fixed.iter().filter_map(|v| {
            v.parameter.as_ref().map(|p| Binding {
                parameter: p.clone(),
                value: v.value.clone(),
            })
        });
        let levels = self.factors.iter().map(|f| Binding {
            parameter: f.parameter.clone(),
            value: f.level(f.id.sign(signs)).clone(),
        });
        fixed.chain(levels).collect()
    }

    /// The pipeline document with `bindings` written in.
    pub fn bound_pipeline(&self, bindings: &[Binding]) -> Result<Value> {
        let mut doc = self.pipeline.clone();
        for b in bindings {
            set_pointer(&mut doc, &b.parameter, b.value.to_json())?;
        }
        Ok(doc)
    }
}

/// Writes `value` at `pointer`, creating the last key of an existing object.
pub fn set_pointer(doc: &mut Value, pointer: &str, value: Value) -> Result<()> {
    if let Some(slot) = doc.pointer_mut(pointer) {
        *slot = value;
        return Ok(());
    }
    let (parent, key) = pointer
        .rsplit_once('/')
        .ok_or_else(|| Error::invalid(format!("'{pointer}' is not a JSON pointer")))?;
    let key = key.replace("~1", "/").replace("~0", "~");
    match doc.pointer_mut(parent) {
        Some(Value::Object(map)) => {
            map.insert(key, value);
            Ok(())
        }
        _ => Err(Error::invalid(format!("pipeline has no parameter at '{pointer}'"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixFactor {
    pub factor: FactorId,
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustRange {
    pub factor: FactorId,
    pub low: SettingValue,
    pub high: SettingValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewFactor {
    pub name: String,
    pub parameter: String,
    pub low: SettingValue,
    pub high: SettingValue,
}

/// What the analyst decided after looking at an iteration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Decisions {
    pub fix: Vec<FixFactor>,
    pub adjust: Vec<AdjustRange>,
    pub new_factors: Vec<NewFactor>,
    pub note: String,
}

/// Builds the next plan from the latest iteration. Fixed factors move into
/// the fixed-variable table; new factors take the first slots, followed by
/// the retained ones, relabelled A, B, C.
pub fn next_iteration(ledger: &IterationLedger, decisions: &Decisions) -> Result<ExperimentPlan> {
    let last = ledger
        .iterations
        .last()
        .ok_or_else(|| Error::invalid("ledger has no iterations"))?;
    let prev = &last.plan;
    let mut plan = prev.clone();

    for (i, fix) in decisions.fix.iter().enumerate() {
        if prev.factor(fix.factor).is_none() {
            return Err(Error::invalid(format!("fix[{i}]: factor {} is not in the plan", fix.factor)));
        }
        if decisions.fix[..i].iter().any(|f| f.factor == fix.factor) {
            return Err(Error::invalid(format!("factor {} fixed twice", fix.factor)));
        }
    }
    for adj in &decisions.adjust {
        if prev.factor(adj.factor).is_none() || decisions.fix.iter().any(|f| f.factor == adj.factor) {
            return Err(Error::invalid(format!("cannot adjust factor {}", adj.factor)));
        }
    }

    for fix in &decisions.fix {
        let f = prev.factor(fix.factor).expect("checked above");
        plan.fixed.retain(|v| v.parameter.as_deref() != Some(f.parameter.as_str()));
        plan.fixed.push(FixedVariable {
            name: f.name.clone(),
            parameter: Some(f.parameter.clone()),
            value: f.value_at(fix.level).clone(),
        });
    }

    let retained = prev
        .factors
        .iter()
        .filter(|f| !decisions.fix.iter().any(|x| x.factor == f.id))
        .map(|f| {
            let mut f = f.clone();
            if let Some(adj) = decisions.adjust.iter().find(|a| a.factor == f.id) {
                f.low = adj.low.clone();
                f.high = adj.high.clone();
            }
            f
        });
    let fresh = decisions.new_factors.iter().map(|n| Factor {
        id: FactorId::A,
        name: n.name.clone(),
        parameter: n.parameter.clone(),
        low: n.low.clone(),
        high: n.high.clone(),
    });
    let factors: Vec<Factor> = fresh.chain(retained).collect();
    if factors.is_empty() {
        return Err(Error::invalid("every factor is fixed; nothing left to design over"));
    }
    if factors.len() != 3 {
        return Err(Error::invalid(format!(
            "the next iteration needs exactly 3 factors, decisions leave {}",
            factors.len()
        )));
    }
    plan.factors = factors
        .into_iter()
        .zip(FactorId::ALL)
        .map(|(mut f, id)| {
            f.id = id;
            f
        })
        .collect();
    // a factor that is designed over again must not also sit in the fixed table
    plan.fixed
        .retain(|v| !plan.factors.iter().any(|f| Some(&f.parameter) == v.parameter.as_ref()));
    plan.rationale = decisions.note.clone();
    plan.validate()?;
    Ok(plan)
}
