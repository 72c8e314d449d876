use serde::{Deserialize, Serialize};

use crate::analysis::MetricId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Ge(f64),
    Le(f64),
    Outside { lo: f64, hi: f64 },
}

/// Quantified goal an experiment must reach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OkCriterion {
    pub metric: MetricId,
    pub comparator: Comparator,
}

impl OkCriterion {
    pub fn new(metric: MetricId, comparator: Comparator) -> Result<Self> {
        let c = OkCriterion { metric, comparator };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self.comparator {
            Comparator::Outside { lo, hi } if !(lo < hi) => {
                Err(Error::invalid(format!("outside criterion needs lo < hi, got {lo} and {hi}")))
            }
            _ => Ok(()),
        }
    }

    pub fn passes(&self, value: f64) -> bool {
        match self.comparator {
            Comparator::Ge(t) => value >= t,
            Comparator::Le(t) => value <= t,
            Comparator::Outside { lo, hi } => value < lo || value > hi,
        }
    }
}

pub fn evaluate_ok(criterion: &OkCriterion, metric: MetricId, averages: &[f64]) -> Result<Vec<bool>> {
    criterion.validate()?;
    if criterion.metric != metric {
        return Err(Error::invalid(format!(
            "criterion is for {:?}, responses are {:?}",
            criterion.metric, metric
        )));
    }
    Ok(averages.iter().map(|&v| criterion.passes(v)).collect())
}
