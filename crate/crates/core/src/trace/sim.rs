//! Synthetic device: Hamming-weight leakage at one sample, plus offset,
//! Gaussian noise, a periodic disturbance and random misalignment.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::aes::{aes128_round1_intermediate, hamming_weight, IntermediateTarget};
use super::vectors::{semi_fixed_one, HwRange};
use super::{SetLabel, Trace, TraceMeta, TraceSet};
use crate::error::{Error, Result};

/// Width of the processed value carried by each trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataWidth {
    /// A single stored byte; the leak is its own Hamming weight.
    Byte,
    /// A 16-byte plaintext; the leak is the weight of the round-1 state.
    Block,
}

/// Unset fields take their [`Default`] values when deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub sample_count: usize,
    pub leak_index: usize,
    pub leak_gain: f64,
    pub dc_offset: f64,
    pub noise_sigma: f64,
    pub jitter_max: usize,
    pub hf_noise_amp: f64,
    pub hf_noise_period: f64,
    pub key: [u8; 16],
    pub target: IntermediateTarget,
    pub width: DataWidth,
    pub rng_seed: u64,
    #[serde(default = "default_rate")]
    pub sampling_rate: f64,
}

fn default_rate() -> f64 {
    1.0e9
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            sample_count: 200,
            leak_index: 160,
            leak_gain: 1.0,
            dc_offset: 0.0,
            noise_sigma: 0.0,
            jitter_max: 0,
            hf_noise_amp: 0.0,
            hf_noise_period: 8.0,
            key: [0u8; 16],
            target: IntermediateTarget::SubBytes,
            width: DataWidth::Byte,
            rng_seed: 0,
            sampling_rate: default_rate(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::invalid("sample_count must be positive"));
        }
        if self.leak_index + self.jitter_max >= self.sample_count {
            return Err(Error::invalid(format!(
                "leak_index + jitter_max ({} + {}) must be below sample_count {}",
                self.leak_index, self.jitter_max, self.sample_count
            )));
        }
        for (name, v) in [
            ("leak_gain", self.leak_gain),
            ("dc_offset", self.dc_offset),
            ("noise_sigma", self.noise_sigma),
            ("hf_noise_amp", self.hf_noise_amp),
            ("hf_noise_period", self.hf_noise_period),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        if self.noise_sigma < 0.0 || self.hf_noise_amp < 0.0 {
            return Err(Error::invalid("noise amplitudes must be non-negative"));
        }
        if self.hf_noise_amp > 0.0 && self.hf_noise_period <= 0.0 {
            return Err(Error::invalid("hf_noise_period must be positive"));
        }
        Ok(())
    }

    fn data_len(&self) -> usize {
        match self.width {
            DataWidth::Byte => 1,
            DataWidth::Block => 16,
        }
    }

    fn leak_weight(&self, data: &[u8]) -> Result<u32> {
        Ok(match self.width {
            DataWidth::Byte => hamming_weight(&data[..1]),
            DataWidth::Block => hamming_weight(&aes128_round1_intermediate(data, &self.key, self.target)?),
        })
    }
}

/// How the processed data of each trace is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    RandomData,
    FixedData(Vec<u8>),
    SemiFixed(HwRange),
}

impl SimMode {
    fn label(&self) -> SetLabel {
        match self {
            SimMode::RandomData => SetLabel::Random,
            SimMode::FixedData(_) => SetLabel::Fixed,
            SimMode::SemiFixed(_) => SetLabel::SemiFixed,
        }
    }
}

pub fn simulate_traces(config: &SimConfig, n: usize, mode: &SimMode) -> Result<TraceSet> {
    config.validate()?;
    if n == 0 {
        return Err(Error::invalid("trace count must be positive"));
    }
    let data_len = config.data_len();
    match mode {
        SimMode::FixedData(d) if d.len() != data_len => {
            return Err(Error::invalid(format!(
                "fixed data has {} bytes, configured width needs {data_len}",
                d.len()
            )))
        }
        SimMode::SemiFixed(_) if config.width != DataWidth::Block => {
            return Err(Error::invalid("semi-fixed vectors need 16-byte data width"))
        }
        SimMode::SemiFixed(r) => r.validate()?,
        _ => {}
    }

    let noise = Normal::new(0.0, config.noise_sigma)
        .map_err(|e| Error::invalid(format!("noise_sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let label = mode.label();
    let m = config.sample_count;

    let mut traces = Vec::with_capacity(n);
    for _ in 0..n {
        let data: Vec<u8> = match mode {
            SimMode::RandomData => (0..data_len).map(|_| rng.random()).collect(),
            SimMode::FixedData(d) => d.clone(),
            SimMode::SemiFixed(range) => semi_fixed_one(&config.key, config.target, *range, &mut rng).to_vec(),
        };
        let weight = config.leak_weight(&data)? as f64;
        let shift = rng.random_range(0..=config.jitter_max);

        let mut samples = vec![config.dc_offset; m];
        for (t, s) in samples.iter_mut().enumerate().skip(shift) {
            let src = t - shift;
            if config.hf_noise_amp > 0.0 {
                *s += config.hf_noise_amp * (2.0 * PI * src as f64 / config.hf_noise_period).sin();
            }
            if src == config.leak_index {
                *s += config.leak_gain * weight;
            }
        }
        if config.noise_sigma > 0.0 {
            for s in samples.iter_mut() {
                *s += noise.sample(&mut rng);
            }
        }
        traces.push(Trace {
            samples,
            meta: TraceMeta {
                data,
                set_label: label,
                seed: config.rng_seed,
            },
        });
    }
    TraceSet::new(traces, config.sampling_rate)
}
