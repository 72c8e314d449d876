use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use sca_doe::analysis::MetricId;
use sca_doe::doe::{
    next_iteration, run_plan, Decisions, Direction, ExperimentPlan, Iteration, IterationLedger, IterationStatus,
    ResponseTable, Term, RUNS,
};
use sca_doe::pipeline::PipelineExecutor;
use sca_doe::report::{pareto_ascii, render_campaign_report, render_pareto};

use crate::exit::{CliResult, Failure, WithPath, FAILED, IO};
use crate::util::{ensure_parent, read_json};

fn serde_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct DoeArgs {
    /// Experiment plan (JSON).
    #[arg(long, conflicts_with = "next")]
    plan: Option<PathBuf>,
    /// Build the plan from the ledger's last iteration and these decisions (JSON).
    #[arg(long)]
    next: Option<PathBuf>,
    /// Overrides the plan's round count.
    #[arg(long)]
    rounds: Option<usize>,
    /// Overrides the plan's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Responses as CSV (`experiment,round_1,...`, one row per experiment);
    /// nothing is executed.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Response metric of a replay without a plan.
    #[arg(long, value_parser = serde_enum::<MetricId>, default_value = "corr_peak")]
    metric: MetricId,
    /// Optimisation direction of a replay without a plan.
    #[arg(long, value_parser = serde_enum::<Direction>, default_value = "maximize")]
    direction: Direction,
    #[arg(long, env = "SCA_DOE_OUT", default_value = "out")]
    out_dir: PathBuf,
    /// Ledger file; defaults to `ledger.json` in the output directory.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Campaign report; defaults to `report.md` in the output directory.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Campaign name used when the ledger is created.
    #[arg(long)]
    campaign: Option<String>,
}

fn replay_plan(name: &str, metric: MetricId, direction: Direction) -> ExperimentPlan {
    let factor = |id: &str| {
        serde_json::json!({
            "id": id, "name": id, "parameter": format!("/{id}"), "low": -1, "high": 1
        })
    };
    serde_json::from_value(serde_json::json!({
        "name": name,
        "metric": metric,
        "direction": direction,
        "factors": [factor("A"), factor("B"), factor("C")],
    }))
    .expect("replay plan is well formed")
}

/// Reads `experiment,round_1,...,round_R` rows; experiments may come in any order.
pub fn read_replay(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| Failure::io(path, e))?;
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; RUNS];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Failure::io(path, e))?;
        let bad = |what: String| Failure::usage(format!("{} row {}: {what}", path.display(), line + 1));
        let exp: usize = record
            .get(0)
            .and_then(|s| s.parse().ok())
            .filter(|e| (1..=RUNS).contains(e))
            .ok_or_else(|| bad(format!("experiment number must be 1..={RUNS}")))?;
        let values = record
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("'{s}' is not a number"))))
            .collect::<CliResult<Vec<f64>>>()?;
        if rows[exp - 1].replace(values).is_some() {
            return Err(bad(format!("experiment {exp} appears twice")));
        }
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| Failure::usage(format!("{}: experiment {} missing", path.display(), i + 1))))
        .collect()
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

/// Text summary of one iteration: responses, effects and coefficients in
/// the tabular layout of the campaign report, then the Pareto ranking.
pub fn summary(it: &Iteration) -> String {
    let mut out = String::new();
    let status = match &it.status {
        IterationStatus::Completed => "completed".to_string(),
        IterationStatus::Aborted { error } => format!("aborted: {error}"),
    };
    let _ = writeln!(out, "Iteration {}: {} ({status})", it.number, it.plan.name);
    for f in &it.plan.factors {
        let _ = writeln!(out, "  {} = {} [{} / {}]", f.id, f.name, f.low, f.high);
    }
    let stats = it.round_stats();
    let _ = writeln!(out, "\nExp  A  B  C  Average     Std. Dev.   OK");
    let rows = sca_doe::doe::design_matrix();
    for (i, signs) in rows.rows().iter().enumerate() {
        let s = |x: i8| if x > 0 { '+' } else { '-' };
        let (avg, sd) = match stats.map(|s| s[i]) {
            Some(st) => (fmt4(st.average), st.std_dev.map(fmt4).unwrap_or_else(|| "n/a".into())),
            None => ("n/a".into(), "n/a".into()),
        };
        let ok = match it.verdicts.as_ref().map(|v| v[i]) {
            Some(true) => "yes",
            Some(false) => "no",
            None => "-",
        };
        let _ = writeln!(
            out,
            "{:<4} {}  {}  {}  {avg:<11} {sd:<11} {ok}",
            i + 1,
            s(signs.a),
            s(signs.b),
            s(signs.c)
        );
    }
    if let Some(eff) = &it.effects {
        let _ = write!(out, "\n{:<12}", "");
        for t in Term::ALL {
            let _ = write!(out, " {:>9}", t.name());
        }
        let _ = write!(out, "\n{:<12}", "Effect");
        for t in Term::ALL {
            let _ = write!(out, " {:>9}", fmt4(eff.effect(t)));
        }
        let _ = write!(out, "\n{:<12}", "Coefficient");
        for t in Term::ALL {
            let _ = write!(out, " {:>9}", fmt4(eff.coefficient(t)));
        }
        let _ = writeln!(out, "\nMean {}", fmt4(eff.mean));
    }
    match &it.pareto {
        Some(p) => {
            let _ = writeln!(out, "\n{}", pareto_ascii(p).trim_end());
            let names: Vec<&str> = p.vital_few.iter().map(|t| t.name()).collect();
            let _ = writeln!(out, "Vital few: {}", names.join(", "));
        }
        None if it.effects.is_some() => out.push_str("\nNo Pareto ranking: every coefficient is zero.\n"),
        None => {}
    }
    if let Some(v) = &it.verdicts {
        let pass: Vec<String> = v.iter().enumerate().filter(|(_, &ok)| ok).map(|(i, _)| (i + 1).to_string()).collect();
        let list = if pass.is_empty() { "none".to_string() } else { pass.join(", ") };
        let _ = writeln!(out, "Passing experiments: {list}");
    }
    out
}

pub fn run(args: DoeArgs) -> CliResult<()> {
    let ledger_path = args.ledger.clone().unwrap_or_else(|| args.out_dir.join("ledger.json"));
    let report_path = args.report.clone().unwrap_or_else(|| args.out_dir.join("report.md"));

    let mut plan = match (&args.plan, &args.next) {
        (Some(p), _) => read_json::<ExperimentPlan>(p)?,
        (None, Some(d)) => {
            let decisions: Decisions = read_json(d)?;
            let ledger = IterationLedger::load(&ledger_path).at(&ledger_path)?;
            next_iteration(&ledger, &decisions)?
        }
        (None, None) => match &args.replay {
            Some(csv) => {
                let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned());
                replay_plan(&format!("replay of {}", stem.unwrap_or_default()), args.metric, args.direction)
            }
            None => return Err(Failure::usage("give --plan, --next or --replay")),
        },
    };
    if let Some(r) = args.rounds {
        plan.rounds = r;
    }
    if let Some(s) = args.seed {
        plan.seed = s;
    }

    let responses = match &args.replay {
        Some(csv) => {
            let rows = read_replay(csv)?;
            let rounds = rows[0].len();
            if args.rounds.is_some_and(|r| r != rounds) {
                return Err(Failure::usage(format!("--rounds {} but the replay has {rounds}", plan.rounds)));
            }
            plan.rounds = rounds;
            Some(rows)
        }
        None => None,
    };
    plan.validate()?;
    if responses.is_none() {
        PipelineExecutor::check(&plan)?;
    }

    let campaign = args.campaign.clone().unwrap_or_else(|| plan.name.clone());
    let mut ledger = IterationLedger::load_or_new(&ledger_path, &campaign).at(&ledger_path)?;
    let iteration = match responses {
        Some(rows) => {
            let table = ResponseTable::new(rows, plan.direction, plan.metric)?;
            ledger.append(Iteration::from_table(plan, &table)?).clone()
        }
        None => run_plan(&plan, &PipelineExecutor, &mut ledger)?.clone(),
    };

    ensure_parent(&ledger_path)?;
    ledger.save(&ledger_path).at(&ledger_path)?;
    ensure_parent(&report_path)?;
    render_campaign_report(&ledger, &report_path).at(&report_path)?;
    if let Some(p) = &iteration.pareto {
        let svg = report_path.with_file_name(format!("iteration-{}-pareto.svg", iteration.number));
        render_pareto(p, &svg).at(&svg)?;
    }

    print!("{}", summary(&iteration));
    println!("Ledger: {}\nReport: {}", ledger_path.display(), report_path.display());
    match iteration.status {
        IterationStatus::Completed => Ok(()),
        IterationStatus::Aborted { error } => Err(Failure {
            code: if error.contains("i/o error") { IO } else { FAILED },
            message: format!("iteration {} aborted: {error}", iteration.number),
        }),
    }
}
