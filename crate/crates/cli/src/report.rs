use std::path::PathBuf;

use clap::Args;
use sca_doe::analysis::AnalysisResult;
use sca_doe::doe::IterationLedger;
use sca_doe::report::{render_campaign_report, render_curve, render_pareto, Threshold};

use crate::exit::{CliResult, Failure, WithPath};
use crate::util::{ensure_parent, read_json};

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["ledger", "result"]))]
pub struct ReportArgs {
    /// Render the campaign document (and one Pareto chart per iteration) from a ledger.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Render the curve of an analysis result.
    #[arg(long)]
    result: Option<PathBuf>,
    /// Output file: Markdown for a ledger, SVG for a result.
    #[arg(long)]
    out: PathBuf,
    /// Reference lines on a curve chart (repeatable).
    #[arg(long)]
    threshold: Vec<f64>,
}

pub fn run(args: ReportArgs) -> CliResult<()> {
    ensure_parent(&args.out)?;
    if let Some(path) = &args.ledger {
        let ledger = IterationLedger::load(path).at(path)?;
        render_campaign_report(&ledger, &args.out).at(&args.out)?;
        let mut charts = 0;
        for it in &ledger.iterations {
            if let Some(p) = &it.pareto {
                let svg = args.out.with_file_name(format!("iteration-{}-pareto.svg", it.number));
                render_pareto(p, &svg).at(&svg)?;
                charts += 1;
            }
        }
        println!(
            "campaign {}: {} iterations, {charts} Pareto charts -> {}",
            ledger.campaign,
            ledger.iterations.len(),
            args.out.display()
        );
        return Ok(());
    }
    let path = args.result.as_ref().ok_or_else(|| Failure::usage("give --ledger or --result"))?;
    let result: AnalysisResult = read_json(path)?;
    let lines: Vec<Threshold> = args.threshold.iter().map(|&v| Threshold::new(v, format!("{v}"))).collect();
    render_curve(&result, &lines, &args.out).at(&args.out)?;
    println!("curve of {:?} -> {}", result.metric_id, args.out.display());
    Ok(())
}
