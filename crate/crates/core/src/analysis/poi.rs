//! Points-of-interest scoring (SOSD, SOST, SNR, correlation).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, pearson, population_variance, sample_variance};
use crate::error::{Error, Result};
use crate::trace::TraceSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoiScore {
    #[serde(alias = "SOST")]
    Sost,
    #[serde(alias = "SOSD")]
    Sosd,
    #[serde(alias = "SNR")]
    Snr,
    #[serde(alias = "CORRELATION")]
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoiSelector {
    pub score: PoiScore,
    pub n_poi: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoiSelection {
    /// Selected sample indices in ascending order.
    pub indices: Vec<usize>,
    /// Score of every sample.
    pub scores: Vec<f64>,
    /// Set when even the best sample shows no class separation.
    pub low_score: bool,
}

const LOW_SCORE: f64 = 1e-10;

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

struct ClassMoments {
    n: f64,
    mean: f64,
    sample_var: f64,
    pop_var: f64,
}

fn score_column(column: &[f64], classes: &BTreeMap<u16, Vec<usize>>, labels: &[f64], score: PoiScore) -> f64 {
    if score == PoiScore::Correlation {
        return pearson(labels, column).map_or(0.0, f64::abs);
    }
    let moments: Vec<ClassMoments> = classes
        .values()
        .map(|idx| {
            let xs: Vec<f64> = idx.iter().map(|&i| column[i]).collect();
            ClassMoments {
                n: xs.len() as f64,
                mean: mean(&xs),
                sample_var: sample_variance(&xs),
                pop_var: population_variance(&xs),
            }
        })
        .collect();
    let k = moments.len() as f64;
    match score {
        PoiScore::Sosd => {
            // sum over pairs of squared differences = k * sum(m^2) - (sum m)^2
            let s: f64 = moments.iter().map(|m| m.mean).sum();
            let s2: f64 = moments.iter().map(|m| m.mean * m.mean).sum();
            (k * s2 - s * s).max(0.0)
        }
        PoiScore::Sost => {
            let mut total = 0.0;
            for (i, a) in moments.iter().enumerate() {
                for b in &moments[i + 1..] {
                    let d = a.mean - b.mean;
                    total += ratio(d * d, a.sample_var / a.n + b.sample_var / b.n);
                }
            }
            total
        }
        PoiScore::Snr => {
            let means: Vec<f64> = moments.iter().map(|m| m.mean).collect();
            let noise = moments.iter().map(|m| m.pop_var).sum::<f64>() / k;
            ratio(population_variance(&means), noise)
        }
        PoiScore::Correlation => unreachable!(),
    }
}

/// Scores every sample by class separation and returns the `n_poi` best,
/// ties going to the lower index.
pub fn select_poi(profiling: &TraceSet, labels: &[u16], selector: PoiSelector) -> Result<PoiSelection> {
    if labels.len() != profiling.len() {
        return Err(Error::LengthMismatch {
            expected: profiling.len(),
            actual: labels.len(),
        });
    }
    let m = profiling.sample_count();
    if selector.n_poi == 0 || selector.n_poi > m {
        return Err(Error::invalid(format!("n_poi {} must lie in 1..={m}", selector.n_poi)));
    }
    let mut classes: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        classes.entry(l).or_default().push(i);
    }
    if classes.len() < 2 {
        return Err(Error::DegenerateInput("POI selection needs at least two classes".into()));
    }
    let label_values: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let scores: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|t| score_column(&profiling.column(t), &classes, &label_values, selector.score))
        .collect();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut indices = order[..selector.n_poi].to_vec();
    let low_score = !(scores[indices[0]] > LOW_SCORE);
    indices.sort_unstable();
    Ok(PoiSelection {
        indices,
        scores,
        low_score,
    })
}
