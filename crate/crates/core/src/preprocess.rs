//! Trace conditioning: standardization, moving-average lowpass, windowed
//! resampling and cross-correlation alignment.
//!
//! Every transform returns a new set and appends itself to the set history.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::stats::pearson;
use crate::error::{Error, Result};
use crate::trace::{ProcessingStep, TraceSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeMode {
    #[default]
    MeanOnly,
    ZScore,
}

pub fn standardize(set: &TraceSet, mode: StandardizeMode) -> Result<TraceSet> {
    let n = set.len() as f64;
    let m = set.sample_count();
    let mut mean = vec![0.0; m];
    for t in set.traces() {
        for (acc, x) in mean.iter_mut().zip(&t.samples) {
            *acc += x;
        }
    }
    mean.iter_mut().for_each(|x| *x /= n);
    let scale: Vec<f64> = match mode {
        StandardizeMode::MeanOnly => vec![1.0; m],
        StandardizeMode::ZScore => {
            let mut var = vec![0.0; m];
            for t in set.traces() {
                for ((acc, x), mu) in var.iter_mut().zip(&t.samples).zip(&mean) {
                    *acc += (x - mu) * (x - mu);
                }
            }
            var.iter()
                .map(|v| {
                    let sd = (v / n).sqrt();
                    if sd > 0.0 {
                        1.0 / sd
                    } else {
                        1.0
                    }
                })
                .collect()
        }
    };
    let step = ProcessingStep {
        name: "standardize".into(),
        params: json!({ "mode": mode }),
    };
    set.map_samples(m, step, |_, s| {
        s.iter()
            .zip(&mean)
            .zip(&scale)
            .map(|((x, mu), k)| (x - mu) * k)
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Moving-average window length in samples; 1 is the identity.
    pub strength: usize,
}

pub fn lowpass_filter(set: &TraceSet, spec: FilterSpec) -> Result<TraceSet> {
    let m = set.sample_count();
    if spec.strength == 0 || spec.strength > m {
        return Err(Error::invalid(format!(
            "filter strength {} must lie in 1..={m}",
            spec.strength
        )));
    }
    let left = spec.strength / 2;
    let right = spec.strength - 1 - left;
    let step = ProcessingStep {
        name: "lowpass".into(),
        params: json!({ "strength": spec.strength }),
    };
    set.map_samples(m, step, |_, s| {
        if spec.strength == 1 {
            return s.to_vec();
        }
        let mut prefix = Vec::with_capacity(m + 1);
        prefix.push(0.0);
        for x in s {
            prefix.push(prefix.last().unwrap() + x);
        }
        (0..m)
            .map(|t| {
                let lo = t.saturating_sub(left);
                let hi = (t + right).min(m - 1);
                (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
            })
            .collect()
    })
}

pub fn windowed_resample(set: &TraceSet, window: usize) -> Result<TraceSet> {
    let m = set.sample_count();
    if window == 0 || window > m {
        return Err(Error::invalid(format!("resample window {window} must lie in 1..={m}")));
    }
    let step = ProcessingStep {
        name: "resample".into(),
        params: json!({ "window": window }),
    };
    set.map_samples(m / window, step, |_, s| {
        s.chunks_exact(window)
            .map(|c| c.iter().sum::<f64>() / window as f64)
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    Start,
    End,
}

/// Which part of the trace drives the alignment search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignRef {
    pub anchor: Anchor,
    /// Half-open sample interval; defaults to the first or last quarter.
    #[serde(default)]
    pub search_window: Option<(usize, usize)>,
}

impl AlignRef {
    pub fn new(anchor: Anchor) -> Self {
        AlignRef {
            anchor,
            search_window: None,
        }
    }

    pub fn window(&self, sample_count: usize) -> Result<(usize, usize)> {
        let w = match self.search_window {
            Some(w) => w,
            None => {
                let q = (sample_count / 4).max(1);
                match self.anchor {
                    Anchor::Start => (0, q),
                    Anchor::End => (sample_count - q, sample_count),
                }
            }
        };
        if w.0 >= w.1 || w.1 > sample_count {
            return Err(Error::invalid(format!(
                "search window {}..{} outside 0..{sample_count}",
                w.0, w.1
            )));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignReport {
    pub reference: usize,
    /// Offset applied to each trace: output[t] = input[t + shift].
    pub shifts: Vec<isize>,
    /// Traces whose window (or the reference's) was constant; left unshifted.
    pub degenerate: Vec<usize>,
}

/// Index of the trace with the largest variance inside the anchor window.
pub fn pick_reference(set: &TraceSet, anchor: &AlignRef) -> Result<usize> {
    let (lo, hi) = anchor.window(set.sample_count())?;
    let mut best = (0, f64::NEG_INFINITY);
    for (i, t) in set.traces().iter().enumerate() {
        let seg = &t.samples[lo..hi];
        let mu = seg.iter().sum::<f64>() / seg.len() as f64;
        let v = seg.iter().map(|x| (x - mu).powi(2)).sum::<f64>();
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best.0)
}

fn best_shift(trace: &[f64], reference: &[f64], window: (usize, usize), max_shift: usize) -> Option<isize> {
    let n = trace.len() as isize;
    let mut best: Option<(isize, f64)> = None;
    // 0, -1, +1, -2, +2, ... so that ties keep the smallest displacement
    let order = std::iter::once(0).chain((1..=max_shift as isize).flat_map(|k| [-k, k]));
    for s in order {
        let lo = (window.0 as isize).max(-s);
        let hi = (window.1 as isize).min(n - s);
        if hi - lo < 2 {
            continue;
        }
        let xs = &trace[(lo + s) as usize..(hi + s) as usize];
        let ys = &reference[lo as usize..hi as usize];
        if let Some(r) = pearson(xs, ys) {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((s, r));
            }
        }
    }
    best.map(|(s, _)| s)
}

pub fn align(
    set: &TraceSet,
    anchor: &AlignRef,
    reference_trace_index: usize,
    max_shift: usize,
) -> Result<(TraceSet, AlignReport)> {
    let m = set.sample_count();
    let window = anchor.window(m)?;
    if reference_trace_index >= set.len() {
        return Err(Error::invalid(format!(
            "reference trace {reference_trace_index} out of range ({} traces)",
            set.len()
        )));
    }
    if max_shift >= m {
        return Err(Error::invalid(format!("max_shift {max_shift} must be below {m}")));
    }
    let reference = &set.traces()[reference_trace_index].samples;
    let results: Vec<Option<isize>> = {
        use rayon::prelude::*;
        set.traces()
            .par_iter()
            .map(|t| {
                if max_shift == 0 {
                    Some(0)
                } else {
                    best_shift(&t.samples, reference, window, max_shift)
                }
            })
            .collect()
    };
    let shifts: Vec<isize> = results.iter().map(|s| s.unwrap_or(0)).collect();
    let degenerate: Vec<usize> = results
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.is_none().then_some(i))
        .collect();

    let step = ProcessingStep {
        name: "align".into(),
        params: json!({
            "anchor": anchor.anchor,
            "search_window": [window.0, window.1],
            "reference": reference_trace_index,
            "max_shift": max_shift,
        }),
    };
    let out = set.map_samples(m, step, |i, s| {
        let shift = shifts[i];
        if shift == 0 {
            return s.to_vec();
        }
        let fill = s.iter().sum::<f64>() / m as f64;
        (0..m as isize)
            .map(|t| {
                let src = t + shift;
                if (0..m as isize).contains(&src) {
                    s[src as usize]
                } else {
                    fill
                }
            })
            .collect()
    })?;
    Ok((
        out,
        AlignReport {
            reference: reference_trace_index,
            shifts,
            degenerate,
        },
    ))
}
