//! Two-population leakage tests: Welch's t and Pearson's chi-square.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{ln_chi2_sf, ln_student_t_two_sided, mean, neg_log10, sample_variance, welch_df};
use super::{AnalysisResult, MetricId};
use crate::error::{Error, Result};
use crate::trace::TraceSet;

pub const DEFAULT_CHI2_BINS: usize = 8;
const MIN_EXPECTED: f64 = 5.0;

fn check_pair(a: &TraceSet, b: &TraceSet) -> Result<()> {
    if a.sample_count() != b.sample_count() {
        return Err(Error::LengthMismatch {
            expected: a.sample_count(),
            actual: b.sample_count(),
        });
    }
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("each set needs at least two traces"));
    }
    Ok(())
}

/// Per-sample Welch statistic with its Welch-Satterthwaite degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct WelchCurves {
    pub t: Vec<f64>,
    pub df: Vec<f64>,
    pub flagged: Vec<usize>,
}

fn welch_curves(a: &TraceSet, b: &TraceSet) -> Result<WelchCurves> {
    check_pair(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let per_sample: Vec<(f64, f64, bool)> = (0..a.sample_count())
        .into_par_iter()
        .map(|i| {
            let xa = a.column(i);
            let xb = b.column(i);
            let (va, vb) = (sample_variance(&xa), sample_variance(&xb));
            let se2 = va / na + vb / nb;
            if se2 <= 0.0 {
                return (0.0, na + nb - 2.0, true);
            }
            let t = (mean(&xa) - mean(&xb)) / se2.sqrt();
            (t, welch_df(va, na, vb, nb), false)
        })
        .collect();
    let mut out = WelchCurves {
        t: Vec::with_capacity(per_sample.len()),
        df: Vec::with_capacity(per_sample.len()),
        flagged: Vec::new(),
    };
    for (i, (t, df, flag)) in per_sample.into_iter().enumerate() {
        out.t.push(t);
        out.df.push(df);
        if flag {
            out.flagged.push(i);
        }
    }
    Ok(out)
}

/// Welch's t per sample; summary is the peak |t|.
pub fn welch_t(a: &TraceSet, b: &TraceSet) -> Result<AnalysisResult> {
    let c = welch_curves(a, b)?;
    Ok(AnalysisResult::from_curve(MetricId::TPeak, c.t, c.flagged))
}

/// Welch's t converted to two-sided `-log10 p` per sample.
pub fn welch_t_neglog10p(a: &TraceSet, b: &TraceSet) -> Result<(WelchCurves, Vec<f64>)> {
    let c = welch_curves(a, b)?;
    let p = c
        .t
        .iter()
        .zip(&c.df)
        .map(|(&t, &df)| neg_log10(ln_student_t_two_sided(t, df)))
        .collect();
    Ok((c, p))
}

/// Test selector for [`leakage_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakageTest {
    WelchT,
    Chi2,
}

/// Either test, reported on the common `-log10 p` scale.
pub fn leakage_test(a: &TraceSet, b: &TraceSet, test: LeakageTest, bins: usize) -> Result<AnalysisResult> {
    let (curve, flagged) = match test {
        LeakageTest::WelchT => {
            let (c, p) = welch_t_neglog10p(a, b)?;
            (p, c.flagged)
        }
        LeakageTest::Chi2 => {
            let r = chi2_test(a, b, bins)?;
            (r.curve.unwrap_or_default(), r.flagged)
        }
    };
    Ok(AnalysisResult::from_curve(MetricId::LeakageNegLogP, curve, flagged))
}

/// Chi-square statistic and degrees of freedom for one sample index, or
/// `None` when fewer than two bins survive merging.
pub(crate) fn chi2_column(xa: &[f64], xb: &[f64], bins: usize) -> Option<(f64, usize)> {
    let mut pooled: Vec<f64> = xa.iter().chain(xb).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let n = pooled.len();
    let edges: Vec<f64> = (1..bins).map(|k| pooled[k * n / bins]).collect();
    let bin_of = |v: f64| edges.partition_point(|&e| e <= v);

    let mut counts = vec![[0usize; 2]; bins];
    for &v in xa {
        counts[bin_of(v)][0] += 1;
    }
    for &v in xb {
        counts[bin_of(v)][1] += 1;
    }

    // merge adjacent bins until every cell's expected count reaches the minimum
    let rows = [xa.len() as f64, xb.len() as f64];
    let total = n as f64;
    let small_row = rows[0].min(rows[1]);
    let mut groups: Vec<[usize; 2]> = Vec::new();
    let mut open = [0usize; 2];
    for c in counts {
        open[0] += c[0];
        open[1] += c[1];
        let col = (open[0] + open[1]) as f64;
        if col * small_row / total >= MIN_EXPECTED {
            groups.push(open);
            open = [0, 0];
        }
    }
    if open[0] + open[1] > 0 {
        match groups.last_mut() {
            Some(last) => {
                last[0] += open[0];
                last[1] += open[1];
            }
            None => groups.push(open),
        }
    }
    if groups.len() < 2 {
        return None;
    }
    let mut stat = 0.0;
    for g in &groups {
        let col = (g[0] + g[1]) as f64;
        for (r, &row_total) in rows.iter().enumerate() {
            let expected = row_total * col / total;
            let d = g[r] as f64 - expected;
            stat += d * d / expected;
        }
    }
    Some((stat, groups.len() - 1))
}

/// Pearson chi-square test of homogeneity per sample on equiprobable bins.
/// The curve holds `-log10 p`; the summary is its maximum.
pub fn chi2_test(a: &TraceSet, b: &TraceSet, bins: usize) -> Result<AnalysisResult> {
    check_pair(a, b)?;
    if bins < 2 {
        return Err(Error::invalid("chi-square test needs at least 2 bins"));
    }
    let per_sample: Vec<Option<f64>> = (0..a.sample_count())
        .into_par_iter()
        .map(|i| chi2_column(&a.column(i), &b.column(i), bins).map(|(stat, df)| neg_log10(ln_chi2_sf(stat, df as f64))))
        .collect();
    let mut flagged = Vec::new();
    let curve = per_sample
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.unwrap_or_else(|| {
                flagged.push(i);
                0.0
            })
        })
        .collect();
    Ok(AnalysisResult::from_curve(MetricId::Chi2NegLogP, curve, flagged))
}
