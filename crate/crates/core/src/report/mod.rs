//! Charts and campaign documents.
//!
//! Rendering is split into pure functions returning strings
//! ([`pareto_svg`], [`curve_svg`], [`campaign_markdown`]) and thin wrappers
//! that write them to disk.

mod campaign;
mod svg;

use std::fs;
use std::path::Path;

use crate::analysis::AnalysisResult;
use crate::doe::{IterationLedger, ParetoReport};
use crate::error::Result;

pub use campaign::{campaign_markdown, parse_effects_tables};
pub use svg::{curve_svg, pareto_ascii, pareto_chart, pareto_svg, ChartSpec, Threshold};

pub fn render_pareto(report: &ParetoReport, path: &Path) -> Result<()> {
    fs::write(path, pareto_svg(report)?)?;
    Ok(())
}

pub fn render_curve(result: &AnalysisResult, thresholds: &[Threshold], path: &Path) -> Result<()> {
    fs::write(path, curve_svg(result, thresholds)?)?;
    Ok(())
}

pub fn render_campaign_report(ledger: &IterationLedger, path: &Path) -> Result<()> {
    fs::write(path, campaign_markdown(ledger)?)?;
    Ok(())
}
