use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use sca_doe::trace::{simulate_traces, store_traceset, DataWidth, HwRange, IntermediateTarget, SimConfig, SimMode};

use crate::exit::{CliResult, Failure, WithPath};
use crate::util::{parse_hex, read_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Random,
    Fixed,
    Semifixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Width {
    Byte,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    SubBytes,
    AddRoundKey,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "random")]
    mode: Mode,
    /// Number of traces.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Simulator settings as JSON; the flags below override individual fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Defaults to `block` for semi-fixed vectors and `byte` otherwise.
    #[arg(long, value_enum)]
    width: Option<Width>,
    #[arg(long, value_enum)]
    target: Option<Target>,
    /// AES key as 32 hex digits.
    #[arg(long)]
    key: Option<String>,
    /// Fixed data in hex (one byte or sixteen, matching the width).
    #[arg(long)]
    fixed: Option<String>,
    #[arg(long)]
    hw_lo: Option<u32>,
    #[arg(long)]
    hw_hi: Option<u32>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    leak_index: Option<usize>,
    #[arg(long)]
    gain: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    jitter: Option<usize>,
    #[arg(long)]
    hf_amp: Option<f64>,
    #[arg(long)]
    hf_period: Option<f64>,
    #[arg(long, env = "SCA_DOE_OUT", default_value = "out")]
    out_dir: PathBuf,
    /// Base name of the written set inside the output directory.
    #[arg(long, default_value = "traces")]
    name: String,
}

impl SimulateArgs {
    fn sim_config(&self) -> CliResult<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => read_json::<SimConfig>(path)?,
            None => SimConfig::default(),
        };
        cfg.rng_seed = self.seed;
        let width = self.width.or(match self.mode {
            Mode::Semifixed => Some(Width::Block),
            _ if self.config.is_none() => Some(Width::Byte),
            _ => None,
        });
        if let Some(w) = width {
            cfg.width = match w {
                Width::Byte => DataWidth::Byte,
                Width::Block => DataWidth::Block,
            };
        }
        if let Some(t) = self.target {
            cfg.target = match t {
                Target::SubBytes => IntermediateTarget::SubBytes,
                Target::AddRoundKey => IntermediateTarget::AddRoundKey,
            };
        }
        if let Some(k) = &self.key {
            let bytes = parse_hex(k)?;
            cfg.key = bytes
                .try_into()
                .map_err(|_| Failure::usage("--key needs exactly 16 bytes (32 hex digits)"))?;
        }
        macro_rules! set {
            ($flag:ident => $field:ident) => {
                if let Some(v) = self.$flag {
                    cfg.$field = v;
                }
            };
        }
        set!(samples => sample_count);
        set!(leak_index => leak_index);
        set!(gain => leak_gain);
        set!(noise => noise_sigma);
        set!(jitter => jitter_max);
        set!(hf_amp => hf_noise_amp);
        set!(hf_period => hf_noise_period);
        Ok(cfg)
    }

    fn sim_mode(&self, cfg: &SimConfig) -> CliResult<SimMode> {
        Ok(match self.mode {
            Mode::Random => SimMode::RandomData,
            Mode::Fixed => {
                let len = match cfg.width {
                    DataWidth::Byte => 1,
                    DataWidth::Block => 16,
                };
                let data = match &self.fixed {
                    Some(hex) => parse_hex(hex)?,
                    None => vec![0; len],
                };
                SimMode::FixedData(data)
            }
            Mode::Semifixed => {
                let (Some(lo), Some(hi)) = (self.hw_lo, self.hw_hi) else {
                    return Err(Failure::usage("semifixed mode needs --hw-lo and --hw-hi"));
                };
                SimMode::SemiFixed(HwRange::new(lo, hi)?)
            }
        })
    }
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let cfg = args.sim_config()?;
    let mode = args.sim_mode(&cfg)?;
    let set = simulate_traces(&cfg, args.n, &mode)?;
    fs::create_dir_all(&args.out_dir).at(&args.out_dir)?;
    let base = args.out_dir.join(&args.name);
    store_traceset(&set, &base).at(&base)?;
    println!(
        "simulated n={} sample_count={} seed={} -> {}",
        set.len(),
        set.sample_count(),
        args.seed,
        base.display()
    );
    Ok(())
}
