//! Trace data model, on-disk format, simulator and AES intermediates.

pub mod aes;
mod sim;
mod store;
mod vectors;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use aes::{aes128_round1_intermediate, hamming_weight, IntermediateTarget};
pub use sim::{simulate_traces, DataWidth, SimConfig, SimMode};
pub use store::{export_csv, load_traceset, store_traceset, Manifest, FORMAT_VERSION};
pub use vectors::{gen_semi_fixed_plaintexts, HwRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetLabel {
    Fixed,
    Random,
    SemiFixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// Processed value: one byte, or a 16-byte plaintext.
    pub data: Vec<u8>,
    pub set_label: SetLabel,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub samples: Vec<f64>,
    pub meta: TraceMeta,
}

/// One transform applied to a set, kept so that a stored set documents how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessingStep {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Rectangular collection of traces sharing a sample count and metadata width.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    traces: Vec<Trace>,
    sample_count: usize,
    pub sampling_rate: f64,
    pub history: Vec<ProcessingStep>,
}

impl TraceSet {
    pub fn new(traces: Vec<Trace>, sampling_rate: f64) -> Result<Self> {
        let first = traces
            .first()
            .ok_or_else(|| Error::invalid("trace set must not be empty"))?;
        let sample_count = first.samples.len();
        if sample_count == 0 {
            return Err(Error::invalid("traces must have at least one sample"));
        }
        let data_len = first.meta.data.len();
        if data_len != 1 && data_len != 16 {
            return Err(Error::invalid(format!("data length must be 1 or 16, got {data_len}")));
        }
        for (i, t) in traces.iter().enumerate() {
            if t.samples.len() != sample_count {
                return Err(Error::LengthMismatch {
                    expected: sample_count,
                    actual: t.samples.len(),
                });
            }
            if t.meta.data.len() != data_len {
                return Err(Error::invalid(format!(
                    "trace {i}: data length {} differs from {data_len}",
                    t.meta.data.len()
                )));
            }
            if let Some(j) = t.samples.iter().position(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("trace {i}: non-finite sample at {j}")));
            }
        }
        Ok(TraceSet {
            traces,
            sample_count,
            sampling_rate,
            history: Vec::new(),
        })
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn data_len(&self) -> usize {
        self.traces[0].meta.data.len()
    }

    /// Byte `index` of every trace's data.
    pub fn data_bytes(&self, index: usize) -> Result<Vec<u8>> {
        if index >= self.data_len() {
            return Err(Error::invalid(format!(
                "byte index {index} out of range for data length {}",
                self.data_len()
            )));
        }
        Ok(self.traces.iter().map(|t| t.meta.data[index]).collect())
    }

    pub fn column(&self, sample: usize) -> Vec<f64> {
        self.traces.iter().map(|t| t.samples[sample]).collect()
    }

    /// Replaces the samples of every trace, keeping metadata and history.
    ///
    /// The closure receives the trace index and its samples and must return
    /// a vector of `new_len` samples.
    pub(crate) fn map_samples<F>(&self, new_len: usize, step: ProcessingStep, f: F) -> Result<TraceSet>
    where
        F: Fn(usize, &[f64]) -> Vec<f64> + Sync,
    {
        use rayon::prelude::*;
        let traces: Vec<Trace> = self
            .traces
            .par_iter()
            .enumerate()
            .map(|(i, t)| Trace {
                samples: f(i, &t.samples),
                meta: t.meta.clone(),
            })
            .collect();
        let mut out = TraceSet::new(traces, self.sampling_rate)?;
        if out.sample_count != new_len {
            return Err(Error::LengthMismatch {
                expected: new_len,
                actual: out.sample_count,
            });
        }
        out.history = self.history.clone();
        out.history.push(step);
        Ok(out)
    }

    /// Concatenates two sets with identical shape. History is taken from `self`.
    pub fn concat(&self, other: &TraceSet) -> Result<TraceSet> {
        if self.sample_count != other.sample_count {
            return Err(Error::LengthMismatch {
                expected: self.sample_count,
                actual: other.sample_count,
            });
        }
        let mut traces = self.traces.clone();
        traces.extend(other.traces.iter().cloned());
        let mut out = TraceSet::new(traces, self.sampling_rate)?;
        out.history = self.history.clone();
        Ok(out)
    }

    /// Splits off the first `at` traces; both halves keep the history.
    pub fn split_at(&self, at: usize) -> Result<(TraceSet, TraceSet)> {
        if at == 0 || at >= self.len() {
            return Err(Error::invalid(format!("cannot split {} traces at {at}", self.len())));
        }
        let (a, b) = self.traces.split_at(at);
        let mut left = TraceSet::new(a.to_vec(), self.sampling_rate)?;
        let mut right = TraceSet::new(b.to_vec(), self.sampling_rate)?;
        left.history = self.history.clone();
        right.history = self.history.clone();
        Ok((left, right))
    }

    pub fn with_history(mut self, history: Vec<ProcessingStep>) -> Self {
        self.history = history;
        self
    }
}
