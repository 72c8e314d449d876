use serde::{Deserialize, Serialize};

use super::design::Term;
use super::effects::EffectsReport;
use crate::error::{Error, Result};

/// Cumulative share at which the vital few end.
pub const VITAL_FEW_LINE: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoEntry {
    pub term: Term,
    pub abs_coefficient: f64,
    pub percent: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoReport {
    pub entries: Vec<ParetoEntry>,
    pub vital_few: Vec<Term>,
    pub include_abc: bool,
}

impl ParetoReport {
    pub fn entry(&self, term: Term) -> Option<&ParetoEntry> {
        self.entries.iter().find(|e| e.term == term)
    }
}

/// Ranks terms by |coefficient|. ABC is left out unless `include_abc`.
pub fn pareto(report: &EffectsReport, include_abc: bool) -> Result<ParetoReport> {
    let mut terms: Vec<(Term, f64)> = Term::ALL
        .iter()
        .filter(|&&t| include_abc || t != Term::ABC)
        .map(|&t| (t, report.coefficient(t).abs()))
        .collect();
    let total: f64 = terms.iter().map(|(_, c)| c).sum();
    if !(total > 0.0) {
        return Err(Error::EmptyPareto);
    }
    // stable: equal bars keep A, B, C, AB, ... order
    terms.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut cumulative = 0.0;
    let mut entries = Vec::with_capacity(terms.len());
    for (term, abs_coefficient) in terms {
        let percent = abs_coefficient / total * 100.0;
        cumulative += percent;
        entries.push(ParetoEntry {
            term,
            abs_coefficient,
            percent,
            cumulative,
        });
    }
    let mut vital_few = Vec::new();
    for e in &entries {
        vital_few.push(e.term);
        if e.cumulative >= VITAL_FEW_LINE - 1e-9 {
            break;
        }
    }
    Ok(ParetoReport {
        entries,
        vital_few,
        include_abc,
    })
}
