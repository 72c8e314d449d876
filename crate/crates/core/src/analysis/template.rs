//! Gaussian templates with a pooled covariance, and single-byte key ranking.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{hamming_weight, TraceSet};

use super::{AnalysisResult, MetricId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassMode {
    /// One class per byte value.
    #[default]
    Value256,
    /// One class per Hamming weight 0..=8.
    Hw9,
}

impl ClassMode {
    pub fn class_count(self) -> usize {
        match self {
            ClassMode::Value256 => 256,
            ClassMode::Hw9 => 9,
        }
    }

    pub fn class_of(self, value: u8) -> usize {
        match self {
            ClassMode::Value256 => value as usize,
            ClassMode::Hw9 => hamming_weight(&[value]) as usize,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TemplateModel {
    pub class_mode: ClassMode,
    pub poi: Vec<usize>,
    pub means: Vec<DVector<f64>>,
    pub pooled_cov: DMatrix<f64>,
    /// Diagonal term that was added to the pooled covariance.
    pub ridge: f64,
    chol: Cholesky<f64, Dyn>,
    ln_det: f64,
}

impl TemplateModel {
    pub fn class_count(&self) -> usize {
        self.class_mode.class_count()
    }

    /// Log of the multivariate normal density of `x` under `class`.
    pub fn log_density(&self, class: usize, x: &DVector<f64>) -> f64 {
        let d = x - &self.means[class];
        let w = self.chol.l().solve_lower_triangular(&d).expect("cholesky factor is invertible");
        let k = self.poi.len() as f64;
        -0.5 * (w.norm_squared() + self.ln_det + k * (2.0 * std::f64::consts::PI).ln())
    }
}

fn poi_vector(samples: &[f64], poi: &[usize]) -> DVector<f64> {
    DVector::from_iterator(poi.len(), poi.iter().map(|&i| samples[i]))
}

/// Profiles one Gaussian per class at the POIs, sharing a pooled covariance.
///
/// `epsilon` scales the diagonal ridge relative to the mean variance; on data
/// with no variance at all it is used as an absolute ridge.
pub fn build_templates(
    profiling: &TraceSet,
    values: &[u8],
    poi: &[usize],
    class_mode: ClassMode,
    epsilon: f64,
) -> Result<TemplateModel> {
    if values.len() != profiling.len() {
        return Err(Error::LengthMismatch {
            expected: profiling.len(),
            actual: values.len(),
        });
    }
    if poi.is_empty() {
        return Err(Error::invalid("no points of interest"));
    }
    if let Some(&bad) = poi.iter().find(|&&p| p >= profiling.sample_count()) {
        return Err(Error::invalid(format!("POI {bad} beyond sample count")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("epsilon must be non-negative"));
    }
    let mut poi = poi.to_vec();
    poi.sort_unstable();
    poi.dedup();
    let k = poi.len();
    let classes = class_mode.class_count();

    let mut members: Vec<Vec<DVector<f64>>> = vec![Vec::new(); classes];
    for (t, &v) in profiling.traces().iter().zip(values) {
        members[class_mode.class_of(v)].push(poi_vector(&t.samples, &poi));
    }
    let missing: Vec<u16> = (0..classes).filter(|&c| members[c].is_empty()).map(|c| c as u16).collect();
    if !missing.is_empty() {
        return Err(Error::MissingClass(missing));
    }
    if let Some(c) = members.iter().position(|m| m.len() < 2) {
        return Err(Error::invalid(format!("class {c} has a single profiling trace")));
    }

    let means: Vec<DVector<f64>> = members
        .iter()
        .map(|m| m.iter().fold(DVector::zeros(k), |acc, x| acc + x) / m.len() as f64)
        .collect();
    let mut scatter = DMatrix::<f64>::zeros(k, k);
    for (m, mu) in members.iter().zip(&means) {
        for x in m {
            let d = x - mu;
            scatter += &d * d.transpose();
        }
    }
    let dof = (profiling.len() - classes) as f64;
    let mut pooled_cov = scatter / dof;
    let mean_diag = pooled_cov.diagonal().mean();
    let ridge = if mean_diag > 0.0 { epsilon * mean_diag } else { epsilon };
    for i in 0..k {
        pooled_cov[(i, i)] += ridge;
    }
    let chol = Cholesky::new(pooled_cov.clone())
        .ok_or_else(|| Error::NumericalError("pooled covariance is not positive definite".into()))?;
    let ln_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    if !ln_det.is_finite() {
        return Err(Error::NumericalError("pooled covariance is singular".into()));
    }
    Ok(TemplateModel {
        class_mode,
        poi,
        means,
        pooled_cov,
        ridge,
        chol,
        ln_det,
    })
}

/// Per-candidate log-likelihood summed over the attack traces.
pub fn candidate_scores(model: &TemplateModel, attack: &TraceSet) -> Result<Vec<f64>> {
    if let Some(&bad) = model.poi.iter().find(|&&p| p >= attack.sample_count()) {
        return Err(Error::invalid(format!("POI {bad} beyond attack sample count")));
    }
    let l = model.chol.l();
    let whiten = |v: &DVector<f64>| {
        l.solve_lower_triangular(v)
            .ok_or_else(|| Error::NumericalError("singular covariance factor".into()))
    };
    // sum_i |w_i - m|^2 = sum_i |w_i|^2 - 2 m . sum_i w_i + n |m|^2 in whitened space
    let n = attack.len() as f64;
    let k = model.poi.len();
    let mut sum_w = DVector::zeros(k);
    let mut sum_sq = 0.0;
    for t in attack.traces() {
        let w = whiten(&poi_vector(&t.samples, &model.poi))?;
        sum_sq += w.norm_squared();
        sum_w += w;
    }
    let constant = n * (model.ln_det + k as f64 * (2.0 * std::f64::consts::PI).ln());
    let class_scores: Vec<f64> = model
        .means
        .iter()
        .map(|mu| {
            let m = whiten(mu)?;
            let quad = sum_sq - 2.0 * m.dot(&sum_w) + n * m.norm_squared();
            Ok(-0.5 * (quad + constant))
        })
        .collect::<Result<_>>()?;
    Ok((0..=255u8)
        .map(|v| class_scores[model.class_mode.class_of(v)])
        .collect())
}

/// Rank of `true_value` among all 256 candidates (1 = best).
pub fn template_attack_rank(model: &TemplateModel, attack: &TraceSet, true_value: u8) -> Result<AnalysisResult> {
    let scores = candidate_scores(model, attack)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NumericalError("non-finite template score".into()));
    }
    let target = scores[true_value as usize];
    let rank = 1 + scores.iter().filter(|&&s| s > target).count();
    Ok(AnalysisResult::scalar(MetricId::TemplateRank, rank as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{simulate_traces, SetLabel, SimConfig, SimMode, Trace, TraceMeta};

    fn noiseless_profile(per_class: usize) -> (SimConfig, TraceSet, Vec<u8>) {
        let cfg = SimConfig {
            sample_count: 20,
            leak_index: 7,
            leak_gain: 0.25,
            dc_offset: 1.0,
            ..SimConfig::default()
        };
        let mut traces = Vec::new();
        for v in 0..=255u8 {
            let s = simulate_traces(&cfg, per_class, &SimMode::FixedData(vec![v])).unwrap();
            traces.extend(s.traces().iter().cloned());
        }
        let set = TraceSet::new(traces, 1.0).unwrap();
        let values = set.data_bytes(0).unwrap();
        (cfg, set, values)
    }

    #[test]
    fn noiseless_means_are_exact() {
        let (_, set, values) = noiseless_profile(2);
        let model = build_templates(&set, &values, &[7], ClassMode::Value256, 1e-6).unwrap();
        for v in 0..=255u8 {
            let want = 1.0 + 0.25 * v.count_ones() as f64;
            assert_eq!(model.means[v as usize][0], want);
        }
        assert!(model.pooled_cov[(0, 0)] > 0.0);
    }

    #[test]
    fn zero_epsilon_on_constant_data_fails() {
        let (_, set, values) = noiseless_profile(2);
        let r = build_templates(&set, &values, &[3, 7], ClassMode::Value256, 0.0);
        assert!(matches!(r, Err(Error::NumericalError(_))));
    }

    #[test]
    fn missing_classes_are_listed() {
        let cfg = SimConfig::default();
        let set = simulate_traces(&cfg, 10, &SimMode::FixedData(vec![3])).unwrap();
        let values = set.data_bytes(0).unwrap();
        match build_templates(&set, &values, &[0], ClassMode::Hw9, 1e-6) {
            Err(Error::MissingClass(m)) => assert_eq!(m, vec![0, 1, 3, 4, 5, 6, 7, 8]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn noiseless_rank_one_both_modes() {
        let (cfg, set, values) = noiseless_profile(2);
        for mode in [ClassMode::Value256, ClassMode::Hw9] {
            let model = build_templates(&set, &values, &[2, 7], mode, 1e-6).unwrap();
            for v in [0u8, 1, 0x5a, 0xff] {
                let attack = simulate_traces(&cfg, 3, &SimMode::FixedData(vec![v])).unwrap();
                let r = template_attack_rank(&model, &attack, v).unwrap();
                assert_eq!(r.summary, 1.0, "{mode:?} value {v}");
                assert!(r.curve.is_none());
            }
        }
    }

    #[test]
    fn scores_match_direct_density_sum() {
        let cfg = SimConfig {
            sample_count: 12,
            leak_index: 4,
            noise_sigma: 0.5,
            rng_seed: 17,
            ..SimConfig::default()
        };
        let prof = simulate_traces(&cfg, 4000, &SimMode::RandomData).unwrap();
        let values = prof.data_bytes(0).unwrap();
        let model = build_templates(&prof, &values, &[1, 4, 9], ClassMode::Hw9, 1e-6).unwrap();
        let attack = simulate_traces(&SimConfig { rng_seed: 18, ..cfg }, 5, &SimMode::FixedData(vec![0x0f])).unwrap();
        let fast = candidate_scores(&model, &attack).unwrap();
        for v in [0u8, 0x0f, 0xff] {
            let direct: f64 = attack
                .traces()
                .iter()
                .map(|t| model.log_density(model.class_mode.class_of(v), &poi_vector(&t.samples, &model.poi)))
                .sum();
            assert!((fast[v as usize] - direct).abs() < 1e-8 * direct.abs(), "{v}");
        }
    }

    #[test]
    fn pooled_covariance_of_white_noise_is_identity() {
        let cfg = SimConfig {
            sample_count: 6,
            leak_index: 0,
            leak_gain: 0.0,
            noise_sigma: 1.0,
            rng_seed: 23,
            ..SimConfig::default()
        };
        let prof = simulate_traces(&cfg, 10_000, &SimMode::RandomData).unwrap();
        let values = prof.data_bytes(0).unwrap();
        let model = build_templates(&prof, &values, &[1, 2, 3, 4], ClassMode::Hw9, 1e-6).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((model.pooled_cov[(i, j)] - want).abs() < 0.1, "({i},{j})");
            }
        }
        let c = &model.pooled_cov;
        assert_eq!(c, &c.transpose());
    }

    #[test]
    fn rejects_single_member_class() {
        let traces = (0..=255u8)
            .map(|v| Trace {
                samples: vec![v as f64],
                meta: TraceMeta {
                    data: vec![v],
                    set_label: SetLabel::Random,
                    seed: 0,
                },
            })
            .collect();
        let set = TraceSet::new(traces, 1.0).unwrap();
        let values = set.data_bytes(0).unwrap();
        assert!(matches!(
            build_templates(&set, &values, &[0], ClassMode::Value256, 1e-6),
            Err(Error::InvalidInput(_))
        ));
    }
}
