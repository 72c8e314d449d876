//! Markdown campaign document with embedded Pareto charts.

use std::fmt::Write as _;

use super::svg::pareto_svg;
use crate::doe::{design_matrix, Comparator, Direction, Iteration, IterationLedger, IterationStatus, Term};
use crate::error::{Error, Result};

const NOTE_PLACEHOLDER: &str = "_No decision note recorded._";

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn comparator_text(c: &Comparator) -> String {
    match c {
        Comparator::Ge(x) => format!(">= {x}"),
        Comparator::Le(x) => format!("<= {x}"),
        Comparator::Outside { lo, hi } => format!("outside [{lo}, {hi}]"),
    }
}

fn cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

fn sign_char(s: i8) -> char {
    if s > 0 { '+' } else { '-' }
}

fn write_iteration(out: &mut String, it: &Iteration, total: usize) -> Result<()> {
    let plan = &it.plan;
    let n = it.number;
    let _ = writeln!(out, "<a id=\"iteration-{n}\"></a>\n");
    let _ = writeln!(out, "## Iteration {n}: {}\n", plan.name);

    let mut nav = Vec::new();
    if n > 1 {
        nav.push(format!("previous: [Iteration {}](#iteration-{})", n - 1, n - 1));
    }
    if n < total {
        nav.push(format!("next: [Iteration {}](#iteration-{})", n + 1, n + 1));
    }
    if !nav.is_empty() {
        let _ = writeln!(out, "Navigation: {}\n", nav.join(", "));
    }

    let direction = match plan.direction {
        Direction::Maximize => "maximize",
        Direction::Minimize => "minimize",
    };
    let status = match &it.status {
        IterationStatus::Completed => "completed".to_string(),
        IterationStatus::Aborted { error } => format!("aborted ({})", cell(error)),
    };
    let _ = writeln!(
        out,
        "- Status: {status}\n- Metric: `{}` ({direction})\n- Rounds: {}\n- Seed: {}\n",
        serde_json::to_value(plan.metric)?.as_str().unwrap_or("?"),
        plan.rounds,
        plan.seed
    );

    out.push_str("### Factors\n\n| Factor | Name | Parameter | Low (-) | High (+) |\n|---|---|---|---|---|\n");
    for f in &plan.factors {
        let _ = writeln!(
            out,
            "| {:?} | {} | `{}` | {} | {} |",
            f.id,
            cell(&f.name),
            cell(&f.parameter),
            cell(&f.low.to_string()),
            cell(&f.high.to_string())
        );
    }
    out.push('\n');

    out.push_str("### Fixed variables\n\n");
    if plan.fixed.is_empty() {
        out.push_str("_None._\n\n");
    } else {
        out.push_str("| Variable | Fixed value |\n|---|---|\n");
        for f in &plan.fixed {
            let _ = writeln!(out, "| {} | {} |", cell(&f.name), cell(&f.value.to_string()));
        }
        out.push('\n');
    }

    out.push_str("### Responses\n\n| Exp | A | B | C |");
    for r in 1..=plan.rounds {
        let _ = write!(out, " Round {r} |");
    }
    out.push_str(" Std. Dev. | Average | OK |\n|---|---|---|---|");
    out.push_str(&"---|".repeat(plan.rounds + 3));
    out.push('\n');
    let design = design_matrix();
    for (e, signs) in design.rows().iter().enumerate() {
        let _ = write!(
            out,
            "| {} | {} | {} | {} |",
            e + 1,
            sign_char(signs.a),
            sign_char(signs.b),
            sign_char(signs.c)
        );
        for r in 0..plan.rounds {
            let v = it.responses.get(e).and_then(|row| row.get(r)).copied().flatten();
            let _ = write!(out, " {} |", v.map(fmt4).unwrap_or_else(|| "n/a".into()));
        }
        let stats = it.round_stats().and_then(|s| s.get(e));
        let sd = stats.and_then(|s| s.std_dev).map(fmt4).unwrap_or_else(|| "n/a".into());
        let avg = stats.map(|s| fmt4(s.average)).unwrap_or_else(|| "n/a".into());
        let ok = match it.verdicts.as_ref().and_then(|v| v.get(e)) {
            Some(true) => "yes",
            Some(false) => "no",
            None => "-",
        };
        let _ = writeln!(out, " {sd} | {avg} | {ok} |");
    }
    out.push('\n');

    out.push_str("### Effects\n\n");
    match &it.effects {
        Some(eff) => {
            out.push_str("| |");
            for t in Term::ALL {
                let _ = write!(out, " {t} |");
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(Term::ALL.len()));
            out.push_str("\n| Effect |");
            for t in Term::ALL {
                let _ = write!(out, " {} |", fmt4(eff.effect(t)));
            }
            out.push_str("\n| Coefficient |");
            for t in Term::ALL {
                let _ = write!(out, " {} |", fmt4(eff.coefficient(t)));
            }
            let _ = writeln!(out, "\n\nGrand mean: {}\n", fmt4(eff.mean));
        }
        None => out.push_str("_Not available: the iteration did not complete._\n\n"),
    }

    out.push_str("### Pareto\n\n");
    match &it.pareto {
        Some(p) => {
            out.push_str(&pareto_svg(p)?);
            out.push_str("\n| Term | Contribution | Cumulative |\n|---|---|---|\n");
            for e in &p.entries {
                let _ = writeln!(out, "| {} | {:.2}% | {:.2}% |", e.term, e.percent, e.cumulative);
            }
            let few: Vec<&str> = p.vital_few.iter().map(|t| t.name()).collect();
            let _ = writeln!(out, "\nVital few: {}\n", few.join(", "));
        }
        None => out.push_str("_No Pareto chart: all coefficients are zero or the iteration did not complete._\n\n"),
    }

    out.push_str("### OK-criterion\n\n");
    match (&plan.ok, &it.verdicts) {
        (Some(ok), Some(v)) => {
            let passing: Vec<String> = v
                .iter()
                .enumerate()
                .filter(|(_, &p)| p)
                .map(|(i, _)| (i + 1).to_string())
                .collect();
            let _ = writeln!(
                out,
                "Criterion: average {}. Passing experiments: {}.\n",
                comparator_text(&ok.comparator),
                if passing.is_empty() { "none".to_string() } else { passing.join(", ") }
            );
        }
        (Some(ok), None) => {
            let _ = writeln!(out, "Criterion: average {}. Not evaluated.\n", comparator_text(&ok.comparator));
        }
        (None, _) => out.push_str("_No criterion defined._\n\n"),
    }

    out.push_str("### Decision note\n\n");
    if it.note.trim().is_empty() {
        let _ = writeln!(out, "{NOTE_PLACEHOLDER}\n");
    } else {
        let _ = writeln!(out, "{}\n", it.note.trim());
    }
    Ok(())
}

/// Renders the whole ledger as one Markdown document.
pub fn campaign_markdown(ledger: &IterationLedger) -> Result<String> {
    if ledger.iterations.is_empty() {
        return Err(Error::invalid("ledger has no iterations"));
    }
    let mut out = String::new();
    let _ = writeln!(out, "# Campaign: {}\n", ledger.campaign);
    out.push_str("## Contents\n\n");
    for it in &ledger.iterations {
        let _ = writeln!(out, "- [Iteration {0}: {1}](#iteration-{0})", it.number, it.plan.name);
    }
    out.push('\n');
    let total = ledger.iterations.len();
    for it in &ledger.iterations {
        write_iteration(&mut out, it, total)?;
    }
    Ok(out)
}

/// Reads the Effect and Coefficient rows of every effects table in a rendered
/// report, in document order.
pub fn parse_effects_tables(markdown: &str) -> Vec<(Vec<f64>, Vec<f64>)> {
    let row = |line: &str, label: &str| -> Option<Vec<f64>> {
        let rest = line.strip_prefix(&format!("| {label} |"))?;
        rest.split('|')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().ok())
            .collect()
    };
    let lines: Vec<&str> = markdown.lines().collect();
    let mut tables = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if let Some(effects) = row(line, "Effect") {
            if let Some(coefs) = lines.get(i + 1).and_then(|l| row(l, "Coefficient")) {
                tables.push((effects, coefs));
            }
        }
    }
    tables
}
