use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use sca_doe::analysis::{AnalysisResult, ClassMode, ClassifierConfig, LeakageModel, PoiScore, DEFAULT_CHI2_BINS};
use sca_doe::pipeline::{analyze, AnalysisSpec, Pipeline, Source, Step};
use sca_doe::report::{render_curve, Threshold};
use sca_doe::trace::{load_traceset, store_traceset, TraceSet};

use crate::exit::{CliResult, Failure, WithPath};
use crate::util::{ensure_parent, read_json, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Cpa,
    Ttest,
    Chi2,
    Template,
    /// Classifier-based leakage assessment.
    Dlla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selector {
    Sost,
    Sosd,
    Snr,
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Classes {
    Value256,
    Hw9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Hw,
    Identity,
}

/// Stored trace sets plus an optional preprocessing step list.
#[derive(Debug, Args)]
pub struct Inputs {
    /// Trace set path prefix (without `.manifest.json`).
    #[arg(long)]
    input: PathBuf,
    /// Second set, for two-set tests and the template attack set.
    #[arg(long)]
    second: Option<PathBuf>,
    /// JSON array of preprocessing steps applied jointly to both sets.
    #[arg(long)]
    steps: Option<PathBuf>,
}

impl Inputs {
    fn load(&self) -> CliResult<(Pipeline, TraceSet, Option<TraceSet>)> {
        let steps: Vec<Step> = match &self.steps {
            Some(p) => read_json(p)?,
            None => Vec::new(),
        };
        let a = load_traceset(&self.input).at(&self.input)?;
        let b = match &self.second {
            Some(p) => Some(load_traceset(p).at(p)?),
            None => None,
        };
        let pipeline = Pipeline {
            source: Source::Files {
                primary: self.input.clone(),
                secondary: self.second.clone(),
            },
            steps,
            analysis: AnalysisSpec::WelchT,
        };
        Ok((pipeline, a, b))
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Output prefix for the processed primary set.
    #[arg(long)]
    out: PathBuf,
    /// Output prefix for the processed second set.
    #[arg(long)]
    second_out: Option<PathBuf>,
}

pub fn preprocess(args: PreprocessArgs) -> CliResult<()> {
    if args.inputs.second.is_some() != args.second_out.is_some() {
        return Err(Failure::usage("--second and --second-out go together"));
    }
    let (pipeline, a, b) = args.inputs.load()?;
    let (a, b) = pipeline.preprocess(a, b)?;
    ensure_parent(&args.out)?;
    store_traceset(&a, &args.out).at(&args.out)?;
    if let (Some(b), Some(out)) = (b, &args.second_out) {
        ensure_parent(out)?;
        store_traceset(&b, out).at(out)?;
    }
    println!(
        "preprocessed {} traces x {} samples ({} steps) -> {}",
        a.len(),
        a.sample_count(),
        a.history.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum)]
    metric: Metric,
    #[arg(long, default_value_t = DEFAULT_CHI2_BINS)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    byte_index: usize,
    #[arg(long, value_enum, default_value = "hw")]
    model: Model,
    #[arg(long, value_enum, default_value = "sost")]
    selector: Selector,
    #[arg(long, default_value_t = 3)]
    n_poi: usize,
    #[arg(long, value_enum, default_value = "value256")]
    classes: Classes,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Seed of the classifier's initialisation and batch order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    validation_fraction: f64,
    /// Result JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Curve chart path.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Horizontal reference lines on the chart (repeatable).
    #[arg(long)]
    threshold: Vec<f64>,
}

impl AnalyzeArgs {
    fn spec(&self) -> AnalysisSpec {
        match self.metric {
            Metric::Cpa => AnalysisSpec::Cpa {
                model: match self.model {
                    Model::Hw => LeakageModel::HammingWeight,
                    Model::Identity => LeakageModel::Identity,
                },
                byte_index: self.byte_index,
            },
            Metric::Ttest => AnalysisSpec::WelchT,
            Metric::Chi2 => AnalysisSpec::Chi2 { bins: self.bins },
            Metric::Template => AnalysisSpec::Template {
                selector: match self.selector {
                    Selector::Sost => PoiScore::Sost,
                    Selector::Sosd => PoiScore::Sosd,
                    Selector::Snr => PoiScore::Snr,
                    Selector::Correlation => PoiScore::Correlation,
                },
                n_poi: self.n_poi,
                class_mode: match self.classes {
                    Classes::Value256 => ClassMode::Value256,
                    Classes::Hw9 => ClassMode::Hw9,
                },
                epsilon: self.epsilon,
                byte_index: self.byte_index,
            },
            Metric::Dlla => AnalysisSpec::Classifier {
                config: ClassifierConfig {
                    seed: self.seed,
                    ..ClassifierConfig::default()
                },
                validation_fraction: self.validation_fraction,
            },
        }
    }
}

pub fn analyze_cmd(args: AnalyzeArgs) -> CliResult<()> {
    let spec = args.spec();
    if !matches!(spec, AnalysisSpec::Cpa { .. }) && args.inputs.second.is_none() {
        return Err(Failure::usage(format!("{:?} needs --second", args.metric).to_lowercase()));
    }
    let (pipeline, a, b) = args.inputs.load()?;
    if let Some(b) = &b {
        if b.sample_count() != a.sample_count() {
            return Err(Failure {
                code: crate::exit::DATA,
                message: format!(
                    "sample counts differ: {} has {}, {} has {}",
                    args.inputs.input.display(),
                    a.sample_count(),
                    args.inputs.second.as_deref().unwrap_or(Path::new("")).display(),
                    b.sample_count()
                ),
            });
        }
    }
    let (a, b) = pipeline.preprocess(a, b)?;
    let result: AnalysisResult = analyze(&spec, &a, b.as_ref())?;
    println!("{} summary {}", metric_name(&result), result.summary);
    if !result.flagged.is_empty() {
        println!("{} samples had an undefined statistic", result.flagged.len());
    }
    if let Some(out) = &args.out {
        ensure_parent(out)?;
        write_json(&result, out)?;
    }
    if let Some(svg) = &args.svg {
        let lines: Vec<Threshold> = args.threshold.iter().map(|&v| Threshold::new(v, format!("{v}"))).collect();
        ensure_parent(svg)?;
        render_curve(&result, &lines, svg).at(svg)?;
    }
    Ok(())
}

fn metric_name(result: &AnalysisResult) -> String {
    serde_json::to_value(result.metric_id)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}
