//! Semi-fixed test vectors: plaintexts whose first-round state has a Hamming
//! weight inside a chosen range.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::aes::{plaintext_for_state, IntermediateTarget};
use crate::error::{Error, Result};

/// Inclusive bounds on the Hamming weight of the whole 128-bit state.
///
/// Deserializes from `{"lo": 40, "hi": 60}` or from the string `"40-60"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HwRangeRepr")]
pub struct HwRange {
    pub lo: u32,
    pub hi: u32,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum HwRangeRepr {
    Bounds { lo: u32, hi: u32 },
    Text(String),
}

impl TryFrom<HwRangeRepr> for HwRange {
    type Error = Error;

    fn try_from(repr: HwRangeRepr) -> Result<Self> {
        match repr {
            HwRangeRepr::Bounds { lo, hi } => HwRange::new(lo, hi),
            HwRangeRepr::Text(s) => s.parse(),
        }
    }
}

impl std::str::FromStr for HwRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("'{s}' is not a weight range like 40-60"));
        let (lo, hi) = s.split_once('-').ok_or_else(bad)?;
        HwRange::new(lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?)
    }
}

impl HwRange {
    pub fn new(lo: u32, hi: u32) -> Result<Self> {
        let r = HwRange { lo, hi };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo > self.hi || self.hi > 128 {
            return Err(Error::invalid(format!(
                "invalid Hamming weight range {}..={} (need lo <= hi <= 128)",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn contains(&self, hw: u32) -> bool {
        (self.lo..=self.hi).contains(&hw)
    }
}

/// Draws `n` plaintexts whose intermediate state has weight in `range`.
///
/// Each vector picks a weight uniformly in the range, sets that many random
/// state bits, and inverts the round function.
pub fn gen_semi_fixed_plaintexts(
    key: &[u8; 16],
    target: IntermediateTarget,
    range: HwRange,
    n: usize,
    rng_seed: u64,
) -> Result<Vec<[u8; 16]>> {
    range.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok((0..n)
        .map(|_| semi_fixed_one(key, target, range, &mut rng))
        .collect())
}

pub(crate) fn semi_fixed_one<R: Rng>(
    key: &[u8; 16],
    target: IntermediateTarget,
    range: HwRange,
    rng: &mut R,
) -> [u8; 16] {
    let weight = rng.random_range(range.lo..=range.hi) as usize;
    let mut state = [0u8; 16];
    for bit in sample(rng, 128, weight) {
        state[bit / 8] |= 1 << (bit % 8);
    }
    plaintext_for_state(&state, key, target)
}
