use serde::{Deserialize, Serialize};

use super::stats::{normal_quantile, pearson};
use super::{AnalysisResult, MetricId};
use crate::error::{Error, Result};
use crate::trace::{hamming_weight, TraceSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakageModel {
    /// Hamming weight of the data byte.
    #[default]
    #[serde(alias = "hw")]
    HammingWeight,
    /// The raw byte value.
    Identity,
}

/// Correlation power analysis: Pearson r between the leakage prediction and
/// every sample. The summary is the peak absolute correlation.
pub fn cpa(set: &TraceSet, model: LeakageModel, byte_index: usize) -> Result<AnalysisResult> {
    let predictor: Vec<f64> = set
        .data_bytes(byte_index)?
        .into_iter()
        .map(|b| match model {
            LeakageModel::HammingWeight => hamming_weight(&[b]) as f64,
            LeakageModel::Identity => b as f64,
        })
        .collect();
    let first = predictor[0];
    if predictor.iter().all(|&p| p == first) {
        return Err(Error::DegenerateInput("leakage predictor is constant across traces".into()));
    }
    let mut flagged = Vec::new();
    let curve = (0..set.sample_count())
        .map(|t| match pearson(&predictor, &set.column(t)) {
            Some(r) => r,
            None => {
                flagged.push(t);
                0.0
            }
        })
        .collect();
    Ok(AnalysisResult::from_curve(MetricId::CorrPeak, curve, flagged))
}

/// Symmetric significance band for a correlation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceThreshold {
    pub n: usize,
    pub r_obs: f64,
    pub confidence: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ConfidenceThreshold {
    /// True when `r` lies outside the band.
    pub fn is_significant(&self, r: f64) -> bool {
        r < self.lo || r > self.hi
    }
}

/// Upper confidence bound on r from the Fisher z-transform, mirrored about zero.
pub fn fisher_ci_threshold(n: usize, r_obs: f64, confidence: f64) -> Result<ConfidenceThreshold> {
    if n < 4 {
        return Err(Error::invalid(format!("need at least 4 samples, got {n}")));
    }
    if !(r_obs.abs() < 1.0) {
        return Err(Error::invalid(format!("|r_obs| must be below 1, got {r_obs}")));
    }
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::invalid(format!("confidence must lie in [0, 1), got {confidence}")));
    }
    let z = normal_quantile((1.0 + confidence) / 2.0);
    let hi = (r_obs.abs().atanh() + z / ((n - 3) as f64).sqrt()).tanh();
    Ok(ConfidenceThreshold {
        n,
        r_obs,
        confidence,
        lo: -hi,
        hi,
    })
}
