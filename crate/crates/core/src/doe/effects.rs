//! Round aggregation, effects and coefficients, and the prediction equation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::design::{design_matrix, Signs, Term, RUNS};
use crate::analysis::stats::{mean, sample_variance};
use crate::analysis::MetricId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

/// Responses of the eight experiments over `R` rounds, in standard order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseTable {
    pub responses: Vec<Vec<f64>>,
    pub direction: Direction,
    pub metric: MetricId,
}

impl ResponseTable {
    pub fn new(responses: Vec<Vec<f64>>, direction: Direction, metric: MetricId) -> Result<Self> {
        if responses.len() != RUNS {
            return Err(Error::invalid(format!("need {RUNS} experiments, got {}", responses.len())));
        }
        let rounds = responses[0].len();
        if rounds == 0 {
            return Err(Error::invalid("need at least one round"));
        }
        for (i, row) in responses.iter().enumerate() {
            if row.len() != rounds {
                return Err(Error::invalid(format!(
                    "experiment {} has {} rounds, expected {rounds}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("experiment {} has a non-finite response", i + 1)));
            }
        }
        Ok(ResponseTable {
            responses,
            direction,
            metric,
        })
    }

    pub fn rounds(&self) -> usize {
        self.responses[0].len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub average: f64,
    /// Bessel-corrected; absent with a single round.
    pub std_dev: Option<f64>,
}

pub fn aggregate_rounds(table: &ResponseTable) -> Vec<RoundStats> {
    table
        .responses
        .iter()
        .map(|row| RoundStats {
            average: mean(row),
            std_dev: (row.len() >= 2).then(|| sample_variance(row).sqrt()),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectsReport {
    pub mean: f64,
    pub effects: BTreeMap<Term, f64>,
    pub coefficients: BTreeMap<Term, f64>,
    pub round_stats: Vec<RoundStats>,
}

/// Effect of each term: mean response where its column is `+` minus mean
/// where it is `-`. Coefficients are half the effects.
pub fn compute_effects(averages: &[f64]) -> Result<EffectsReport> {
    if averages.len() != RUNS {
        return Err(Error::invalid(format!("need {RUNS} averages, got {}", averages.len())));
    }
    if averages.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("averages must be finite"));
    }
    let design = design_matrix();
    let mut effects = BTreeMap::new();
    let mut coefficients = BTreeMap::new();
    for term in Term::ALL {
        let contrast: f64 = design
            .column(term)
            .iter()
            .zip(averages)
            .map(|(&s, y)| s as f64 * y)
            .sum();
        let effect = contrast / (RUNS / 2) as f64;
        effects.insert(term, effect);
        coefficients.insert(term, effect / 2.0);
    }
    Ok(EffectsReport {
        mean: mean(averages),
        effects,
        coefficients,
        round_stats: averages
            .iter()
            .map(|&average| RoundStats { average, std_dev: None })
            .collect(),
    })
}

impl EffectsReport {
    pub fn from_table(table: &ResponseTable) -> Result<EffectsReport> {
        let stats = aggregate_rounds(table);
        let averages: Vec<f64> = stats.iter().map(|s| s.average).collect();
        let mut report = compute_effects(&averages)?;
        report.round_stats = stats;
        Ok(report)
    }

    pub fn effect(&self, term: Term) -> f64 {
        self.effects[&term]
    }

    pub fn coefficient(&self, term: Term) -> f64 {
        self.coefficients[&term]
    }

    pub fn averages(&self) -> Vec<f64> {
        self.round_stats.iter().map(|s| s.average).collect()
    }
}

/// Response predicted by the coded model. Without `include_abc` this is the
/// six-term equation; with it the model interpolates all eight runs.
pub fn predict(report: &EffectsReport, signs: Signs, include_abc: bool) -> f64 {
    report.mean
        + Term::ALL
            .iter()
            .filter(|&&t| include_abc || t != Term::ABC)
            .map(|&t| report.coefficient(t) * t.sign(signs) as f64)
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    const UC1_REF: [[f64; 3]; 8] = [
        [0.0724, 0.0808, 0.0685],
        [0.0726, 0.0811, 0.0612],
        [0.0570, 0.0748, 0.0631],
        [0.0597, 0.0645, 0.0664],
        [0.1424, 0.2098, 0.1703],
        [0.1428, 0.2112, 0.1707],
        [0.1292, 0.1634, 0.1353],
        [0.1294, 0.1645, 0.1351],
    ];

    fn uc1_ref() -> ResponseTable {
        ResponseTable::new(UC1_REF.iter().map(|r| r.to_vec()).collect(), Direction::Maximize, MetricId::CorrPeak)
            .unwrap()
    }

    #[test]
    fn aggregate_first_row() {
        let stats = aggregate_rounds(&uc1_ref());
        assert!((stats[0].average - 0.0739).abs() < 1e-4);
        assert!((stats[0].std_dev.unwrap() - 0.0063).abs() < 1e-4);
    }

    #[test]
    fn single_round_has_no_std_dev() {
        let t = ResponseTable::new(vec![vec![2.0]; 8], Direction::Maximize, MetricId::CorrPeak).unwrap();
        let s = aggregate_rounds(&t);
        assert_eq!(s[3], RoundStats { average: 2.0, std_dev: None });
    }

    #[test]
    fn uc2_ref_second_row() {
        let row = vec![3.0, 2.0, 4.0, 1.0];
        let mut rows = vec![vec![1.0; 4]; 8];
        rows[1] = row;
        let t = ResponseTable::new(rows, Direction::Minimize, MetricId::TemplateRank).unwrap();
        let s = aggregate_rounds(&t);
        assert_eq!(s[1].average, 2.5);
        assert!((s[1].std_dev.unwrap() - 1.2910).abs() < 1e-4);
    }

    #[test]
    fn uc1_ref_effects() {
        let r = EffectsReport::from_table(&uc1_ref()).unwrap();
        assert!((r.effect(Term::A) - 0.0901).abs() < 3e-4);
        assert!((r.coefficient(Term::A) - 0.0451).abs() < 2e-4);
        assert!((r.effect(Term::AB) + 0.0116).abs() < 3e-4);
        assert!((r.effect(Term::B) + 0.0201).abs() < 3e-4);
        for t in Term::ALL {
            assert_eq!(r.coefficient(t), r.effect(t) / 2.0);
        }
    }

    #[test]
    fn constant_averages() {
        let r = compute_effects(&[4.5; 8]).unwrap();
        assert_eq!(r.mean, 4.5);
        assert!(r.effects.values().all(|&e| e == 0.0));
    }

    #[test]
    fn wrong_length() {
        assert!(compute_effects(&[1.0; 7]).is_err());
        assert!(ResponseTable::new(vec![vec![1.0]; 7], Direction::Maximize, MetricId::CorrPeak).is_err());
        assert!(ResponseTable::new(vec![vec![f64::NAN]; 8], Direction::Maximize, MetricId::CorrPeak).is_err());
    }

    #[test]
    fn prediction_examples() {
        let r = EffectsReport::from_table(&uc1_ref()).unwrap();
        let avg5 = r.averages()[4];
        let full = predict(&r, Signs::new(1, -1, -1), true);
        assert!((full - avg5).abs() < 1e-9);
        let six = predict(&r, Signs::new(1, -1, -1), false);
        assert!(((six - full).abs() - r.coefficient(Term::ABC).abs()).abs() < 1e-12);
        let zero = compute_effects(&[0.3; 8]).unwrap();
        assert_eq!(predict(&zero, Signs::new(-1, 1, -1), false), 0.3);
    }
}
