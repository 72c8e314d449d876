//! Distinguishers and leakage-assessment statistics.

mod classifier;
mod cpa;
mod poi;
pub mod stats;
mod template;
mod tvla;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use classifier::{
    binomial_la_test, logistic_loss_and_grad, train_classifier, ClassifierConfig, ClassifierModel,
};
pub use cpa::{cpa, fisher_ci_threshold, ConfidenceThreshold, LeakageModel};
pub use poi::{select_poi, PoiScore, PoiSelection, PoiSelector};
pub use stats::t_to_neglog10p;
pub use template::{build_templates, template_attack_rank, ClassMode, TemplateModel};
pub use tvla::{chi2_test, leakage_test, welch_t, welch_t_neglog10p, LeakageTest, WelchCurves, DEFAULT_CHI2_BINS};

/// Which statistic a result (or a DoE response) carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    CorrPeak,
    TPeak,
    Chi2NegLogP,
    TemplateRank,
    ClassifierNegLogP,
    /// `-log10 p` of whichever leakage test a plan selects, so the test
    /// itself can be a factor.
    LeakageNegLogP,
}

impl MetricId {
    pub fn has_curve(self) -> bool {
        !matches!(self, MetricId::TemplateRank | MetricId::ClassifierNegLogP)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub metric_id: MetricId,
    pub summary: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<f64>>,
    /// Sample indices where the statistic was undefined and reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flagged: Vec<usize>,
}

impl AnalysisResult {
    pub(crate) fn from_curve(metric_id: MetricId, curve: Vec<f64>, flagged: Vec<usize>) -> Self {
        let summary = curve.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        AnalysisResult {
            metric_id,
            summary,
            curve: Some(curve),
            flagged,
        }
    }

    pub(crate) fn scalar(metric_id: MetricId, summary: f64) -> Self {
        AnalysisResult {
            metric_id,
            summary,
            curve: None,
            flagged: Vec::new(),
        }
    }

    pub fn curve(&self) -> Result<&[f64]> {
        self.curve.as_deref().ok_or(Error::CurveAbsent)
    }

    /// Index of the largest absolute curve value.
    pub fn peak_index(&self) -> Result<usize> {
        let c = self.curve()?;
        Ok(c.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v.abs() > best.1 {
                    (i, v.abs())
                } else {
                    best
                }
            })
            .0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,value")?;
        for (i, v) in self.curve()?.iter().enumerate() {
            writeln!(out, "{i},{v}")?;
        }
        Ok(())
    }
}
