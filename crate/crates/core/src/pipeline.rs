//! Declarative acquisition + preprocessing + analysis pipelines, and the
//! executor that runs them for experiment plans.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    binomial_la_test, build_templates, chi2_test, cpa, leakage_test, select_poi, template_attack_rank, train_classifier, welch_t,
    AnalysisResult, ClassMode, ClassifierConfig, LeakageModel, LeakageTest, MetricId, PoiScore, PoiSelector, DEFAULT_CHI2_BINS,
};
use crate::doe::{Executor, ExperimentPlan, RunContext};
use crate::error::{Error, Result};
use crate::preprocess::{
    align, lowpass_filter, pick_reference, standardize, windowed_resample, AlignRef, Anchor, FilterSpec,
    StandardizeMode,
};
use crate::trace::{load_traceset, simulate_traces, SimConfig, SimMode, TraceSet};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondSet {
    /// Defaults to the primary trace count.
    #[serde(default)]
    pub traces: Option<usize>,
    pub mode: SimMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    /// Simulated acquisition; the run seed replaces `config.rng_seed`.
    Simulate {
        config: SimConfig,
        traces: usize,
        mode: SimMode,
        #[serde(default)]
        second: Option<SecondSet>,
    },
    /// Stored sets (path prefixes without the `.manifest.json` suffix).
    Files {
        primary: PathBuf,
        #[serde(default)]
        secondary: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    Standardize {
        #[serde(default)]
        mode: StandardizeMode,
        #[serde(default = "yes")]
        enabled: bool,
    },
    Lowpass {
        strength: usize,
        #[serde(default = "yes")]
        enabled: bool,
    },
    Resample {
        window: usize,
        #[serde(default = "yes")]
        enabled: bool,
    },
    Align {
        anchor: Anchor,
        max_shift: usize,
        #[serde(default)]
        search_window: Option<(usize, usize)>,
        /// Reference trace; by default the one with most energy in the window.
        #[serde(default)]
        reference: Option<usize>,
        #[serde(default = "yes")]
        enabled: bool,
    },
}

impl Step {
    pub fn enabled(&self) -> bool {
        match self {
            Step::Standardize { enabled, .. }
            | Step::Lowpass { enabled, .. }
            | Step::Resample { enabled, .. }
            | Step::Align { enabled, .. } => *enabled,
        }
    }

    pub fn apply(&self, set: &TraceSet) -> Result<TraceSet> {
        if !self.enabled() {
            return Ok(set.clone());
        }
        match self {
            Step::Standardize { mode, .. } => standardize(set, *mode),
            Step::Lowpass { strength, .. } => lowpass_filter(set, FilterSpec { strength: *strength }),
            Step::Resample { window, .. } => windowed_resample(set, *window),
            Step::Align {
                anchor,
                max_shift,
                search_window,
                reference,
                ..
            } => {
                let anchor = AlignRef {
                    anchor: *anchor,
                    search_window: *search_window,
                };
                let reference = match reference {
                    Some(r) => *r,
                    None => pick_reference(set, &anchor)?,
                };
                Ok(align(set, &anchor, reference, *max_shift)?.0)
            }
        }
    }
}

fn default_byte_index() -> usize {
    0
}

fn default_bins() -> usize {
    DEFAULT_CHI2_BINS
}

fn default_epsilon() -> f64 {
    1e-6
}

fn default_validation_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AnalysisSpec {
    Cpa {
        #[serde(default)]
        model: LeakageModel,
        #[serde(default = "default_byte_index")]
        byte_index: usize,
    },
    WelchT,
    Chi2 {
        #[serde(default = "default_bins")]
        bins: usize,
    },
    /// Welch or chi-square, both reported as `-log10 p`.
    LeakageTest {
        test: LeakageTest,
        #[serde(default = "default_bins")]
        bins: usize,
    },
    /// Profiles on the primary set, attacks the secondary set (constant value).
    Template {
        selector: PoiScore,
        n_poi: usize,
        #[serde(default)]
        class_mode: ClassMode,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_byte_index")]
        byte_index: usize,
    },
    /// Primary set is class 0, secondary set class 1.
    Classifier {
        #[serde(default)]
        config: ClassifierConfig,
        #[serde(default = "default_validation_fraction")]
        validation_fraction: f64,
    },
}

impl AnalysisSpec {
    pub fn metric(&self) -> MetricId {
        match self {
            AnalysisSpec::Cpa { .. } => MetricId::CorrPeak,
            AnalysisSpec::WelchT => MetricId::TPeak,
            AnalysisSpec::Chi2 { .. } => MetricId::Chi2NegLogP,
            AnalysisSpec::LeakageTest { .. } => MetricId::LeakageNegLogP,
            AnalysisSpec::Template { .. } => MetricId::TemplateRank,
            AnalysisSpec::Classifier { .. } => MetricId::ClassifierNegLogP,
        }
    }

    fn needs_second(&self) -> bool {
        !matches!(self, AnalysisSpec::Cpa { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub source: Source,
    #[serde(default)]
    pub steps: Vec<Step>,
    pub analysis: AnalysisSpec,
}

/// Seed of the secondary simulated set, kept apart from the primary stream.
fn second_seed(seed: u64) -> u64 {
    seed ^ 0x5eed_0f5e_c0de_5e75
}

impl Pipeline {
    pub fn acquire(&self, seed: u64) -> Result<(TraceSet, Option<TraceSet>)> {
        match &self.source {
            Source::Simulate {
                config,
                traces,
                mode,
                second,
            } => {
                let mut cfg = config.clone();
                cfg.rng_seed = seed;
                let a = simulate_traces(&cfg, *traces, mode)?;
                let b = match second {
                    Some(s) => {
                        cfg.rng_seed = second_seed(seed);
                        Some(simulate_traces(&cfg, s.traces.unwrap_or(*traces), &s.mode)?)
                    }
                    None => None,
                };
                Ok((a, b))
            }
            Source::Files { primary, secondary } => {
                let a = load_traceset(primary)?;
                let b = secondary.as_deref().map(load_traceset).transpose()?;
                Ok((a, b))
            }
        }
    }

    /// Applies the enabled steps in order. Two sets are processed jointly so
    /// that set-wide statistics (means, alignment reference) are shared.
    pub fn preprocess(&self, a: TraceSet, b: Option<TraceSet>) -> Result<(TraceSet, Option<TraceSet>)> {
        if self.steps.iter().all(|s| !s.enabled()) {
            return Ok((a, b));
        }
        let split = a.len();
        let mut joint = match &b {
            Some(b) => a.concat(b)?,
            None => a,
        };
        for step in &self.steps {
            joint = step.apply(&joint)?;
        }
        match b {
            Some(_) => {
                let (a, b) = joint.split_at(split)?;
                Ok((a, Some(b)))
            }
            None => Ok((joint, None)),
        }
    }

    pub fn run(&self, seed: u64) -> Result<AnalysisResult> {
        let (a, b) = self.acquire(seed)?;
        if self.analysis.needs_second() && b.is_none() {
            return Err(Error::invalid("this analysis needs a second trace set"));
        }
        let (a, b) = self.preprocess(a, b)?;
        analyze(&self.analysis, &a, b.as_ref())
    }
}

/// Runs one analysis on already-conditioned sets.
pub fn analyze(spec: &AnalysisSpec, a: &TraceSet, b: Option<&TraceSet>) -> Result<AnalysisResult> {
    let second = || b.ok_or_else(|| Error::invalid("this analysis needs a second trace set"));
    match spec {
        AnalysisSpec::Cpa { model, byte_index } => cpa(a, *model, *byte_index),
        AnalysisSpec::WelchT => welch_t(a, second()?),
        AnalysisSpec::Chi2 { bins } => chi2_test(a, second()?, *bins),
        AnalysisSpec::LeakageTest { test, bins } => leakage_test(a, second()?, *test, *bins),
        AnalysisSpec::Template {
            selector,
            n_poi,
            class_mode,
            epsilon,
            byte_index,
        } => {
            let attack = second()?;
            let values = a.data_bytes(*byte_index)?;
            let truth = attack.data_bytes(*byte_index)?;
            if truth.iter().any(|&v| v != truth[0]) {
                return Err(Error::invalid("attack set must carry one constant value"));
            }
            let classes: Vec<u16> = values.iter().map(|&v| class_mode.class_of(v) as u16).collect();
            let poi = select_poi(
                a,
                &classes,
                PoiSelector {
                    score: *selector,
                    n_poi: *n_poi,
                },
            )?;
            let model = build_templates(a, &values, &poi.indices, *class_mode, *epsilon)?;
            template_attack_rank(&model, attack, truth[0])
        }
        AnalysisSpec::Classifier {
            config,
            validation_fraction,
        } => {
            let other = second()?;
            if !(0.0 < *validation_fraction && *validation_fraction < 1.0) {
                return Err(Error::invalid("validation_fraction must lie in (0, 1)"));
            }
            let cut = |s: &TraceSet| ((s.len() as f64) * (1.0 - validation_fraction)).round() as usize;
            let (a_train, a_valid) = a.split_at(cut(a))?;
            let (b_train, b_valid) = other.split_at(cut(other))?;
            let train = a_train.concat(&b_train)?;
            let valid = a_valid.concat(&b_valid)?;
            let labels = |x: usize, y: usize| -> Vec<bool> {
                std::iter::repeat_n(false, x).chain(std::iter::repeat_n(true, y)).collect()
            };
            let model = train_classifier(&train, &labels(a_train.len(), b_train.len()), config)?;
            binomial_la_test(&model, &valid, &labels(a_valid.len(), b_valid.len()))
        }
    }
}

/// Executes plan runs by binding factor levels into the plan's pipeline.
#[derive(Debug, Default, Clone, Copy)]
pub struct PipelineExecutor;

impl PipelineExecutor {
    pub fn pipeline_for(plan: &ExperimentPlan, run: &RunContext) -> Result<Pipeline> {
        let doc = plan.bound_pipeline(&run.bindings)?;
        let pipeline: Pipeline =
            serde_json::from_value(doc).map_err(|e| Error::invalid(format!("pipeline document: {e}")))?;
        if pipeline.analysis.metric() != plan.metric {
            return Err(Error::invalid(format!(
                "pipeline analysis yields {:?} but the plan records {:?}",
                pipeline.analysis.metric(),
                plan.metric
            )));
        }
        Ok(pipeline)
    }

    /// Binds every run of the design once without executing, so plan errors
    /// surface before any acquisition.
    pub fn check(plan: &ExperimentPlan) -> Result<()> {
        for signs in crate::doe::design_matrix().rows() {
            let ctx = RunContext {
                experiment: 0,
                round: 0,
                signs: *signs,
                seed: 0,
                bindings: plan.bindings(*signs),
            };
            Self::pipeline_for(plan, &ctx)?;
        }
        Ok(())
    }
}

impl Executor for PipelineExecutor {
    fn execute(&self, plan: &ExperimentPlan, run: &RunContext) -> Result<f64> {
        Ok(Self::pipeline_for(plan, run)?.run(run.seed)?.summary)
    }
}
