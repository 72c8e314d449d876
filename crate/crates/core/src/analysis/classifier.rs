//! Two-class logistic-regression distinguisher and the binomial test on its
//! validation accuracy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::{ln_binomial_upper_tail_half, neg_log10};
use super::{AnalysisResult, MetricId};
use crate::error::{Error, Result};
use crate::trace::TraceSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Z-score every sample with training-set statistics before fitting.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            epochs: 20,
            learning_rate: 0.1,
            batch_size: 64,
            standardize: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    offset: Vec<f64>,
    scale: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy and its gradient with respect to weights and bias.
pub fn logistic_loss_and_grad(weights: &[f64], bias: f64, xs: &[Vec<f64>], ys: &[bool]) -> (f64, Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z = bias + x.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
        let target = if y { 1.0 } else { 0.0 };
        // log(1 + e^z) - y z, computed without overflow
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - target * z;
        let err = sigmoid(z) - target;
        for (g, a) in gw.iter_mut().zip(x) {
            *g += err * a;
        }
        gb += err;
    }
    gw.iter_mut().for_each(|g| *g /= n);
    (loss / n, gw, gb / n)
}

impl ClassifierModel {
    fn features(&self, samples: &[f64]) -> Vec<f64> {
        samples
            .iter()
            .zip(&self.offset)
            .zip(&self.scale)
            .map(|((x, o), s)| (x - o) * s)
            .collect()
    }

    pub fn predict(&self, samples: &[f64]) -> bool {
        let x = self.features(samples);
        self.bias + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() >= 0.0
    }

    /// Number of traces whose prediction matches the label.
    pub fn correct(&self, set: &TraceSet, labels: &[bool]) -> usize {
        set.traces()
            .iter()
            .zip(labels)
            .filter(|(t, &l)| self.predict(&t.samples) == l)
            .count()
    }

    pub fn accuracy(&self, set: &TraceSet, labels: &[bool]) -> f64 {
        self.correct(set, labels) as f64 / set.len() as f64
    }
}

fn check_labels(set: &TraceSet, labels: &[bool]) -> Result<()> {
    if labels.len() != set.len() {
        return Err(Error::LengthMismatch {
            expected: set.len(),
            actual: labels.len(),
        });
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::DegenerateInput("both classes must be present".into()));
    }
    Ok(())
}

/// Fits logistic regression by mini-batch gradient descent. Deterministic for
/// a given `config.seed`.
pub fn train_classifier(train: &TraceSet, labels: &[bool], config: &ClassifierConfig) -> Result<ClassifierModel> {
    check_labels(train, labels)?;
    if config.batch_size == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::invalid("batch_size and learning_rate must be positive"));
    }
    let m = train.sample_count();
    let n = train.len() as f64;
    let (offset, scale) = if config.standardize {
        let mut mean = vec![0.0; m];
        for t in train.traces() {
            mean.iter_mut().zip(&t.samples).for_each(|(a, x)| *a += x / n);
        }
        let mut var = vec![0.0; m];
        for t in train.traces() {
            var.iter_mut()
                .zip(&t.samples)
                .zip(&mean)
                .for_each(|((v, x), mu)| *v += (x - mu) * (x - mu) / n);
        }
        let scale = var.iter().map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 }).collect();
        (mean, scale)
    } else {
        (vec![0.0; m], vec![1.0; m])
    };
    let mut model = ClassifierModel {
        weights: vec![0.0; m],
        bias: 0.0,
        offset,
        scale,
    };
    let xs: Vec<Vec<f64>> = train.traces().iter().map(|t| model.features(&t.samples)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let bx: Vec<Vec<f64>> = batch.iter().map(|&i| xs[i].clone()).collect();
            let by: Vec<bool> = batch.iter().map(|&i| labels[i]).collect();
            let (_, gw, gb) = logistic_loss_and_grad(&model.weights, model.bias, &bx, &by);
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= config.learning_rate * g;
            }
            model.bias -= config.learning_rate * gb;
        }
    }
    Ok(model)
}

/// One-sided binomial test of the validation accuracy against chance.
/// The summary is `-log10 P(Binomial(M, 1/2) >= k)`.
pub fn binomial_la_test(model: &ClassifierModel, validation: &TraceSet, labels: &[bool]) -> Result<AnalysisResult> {
    check_labels(validation, labels)?;
    let k = model.correct(validation, labels) as u64;
    Ok(AnalysisResult::scalar(
        MetricId::ClassifierNegLogP,
        binomial_summary(k, validation.len() as u64),
    ))
}

pub(crate) fn binomial_summary(correct: u64, total: u64) -> f64 {
    neg_log10(ln_binomial_upper_tail_half(correct, total))
}
