//! A small string-similarity matcher: logistic regression over
//! [`FeatureSchema`] features, trained by full-batch gradient descent.
//!
//! It exists so the whole pipeline runs without external services. The
//! explainers treat it as a black box like any other matcher.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::similarity::FeatureSchema;
use super::{MatchScore, Matcher, DEFAULT_THRESHOLD};
use crate::data::{Dataset, RecordPair};
use crate::error::{Error, MatcherError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 2000,
            learning_rate: 0.5,
            l2: 1e-4,
            seed: 0,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub l2: f64,
    pub train_pairs: usize,
    pub validation_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineMatcherModel {
    pub schema: FeatureSchema,
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
    pub meta: TrainingMeta,
}

impl BaselineMatcherModel {
    fn logit(&self, features: &[f64]) -> f64 {
        self.bias
            + features
                .iter()
                .zip(&self.mean)
                .zip(&self.scale)
                .zip(&self.weights)
                .map(|(((x, m), s), w)| w * (x - m) / s)
                .sum::<f64>()
    }

    pub fn score(&self, pair: &RecordPair) -> f64 {
        sigmoid(self.logit(&self.schema.features(pair)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, Error> {
        let m: BaselineMatcherModel = serde_json::from_str(s)?;
        if m.weights.len() != m.schema.len()
            || m.mean.len() != m.weights.len()
            || m.scale.len() != m.weights.len()
        {
            return Err(Error::Config("model weight vector does not match its schema".into()));
        }
        Ok(m)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// The trained baseline model used as a matcher.
#[derive(Debug, Clone)]
pub struct BaselineMatcher {
    pub model: BaselineMatcherModel,
}

impl BaselineMatcher {
    pub fn new(model: BaselineMatcherModel) -> Self {
        BaselineMatcher { model }
    }
}

impl Matcher for BaselineMatcher {
    fn predict_batch(&self, pairs: &[RecordPair]) -> Result<Vec<MatchScore>, MatcherError> {
        pairs
            .iter()
            .map(|p| MatchScore::new(self.model.score(p)))
            .collect()
    }

    fn threshold(&self) -> f64 {
        self.model.threshold
    }
}

/// Precision/recall F1 of `scores > threshold` against `labels`.
pub(crate) fn f1_score(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s > threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
}

/// Fits the baseline matcher on the `train` split and reports F1 on `valid`.
pub fn train_baseline_matcher(
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<BaselineMatcherModel, Error> {
    let train = dataset.pairs("train");
    if train.is_empty() {
        return Err(Error::Config("train split is empty".into()));
    }
    let positives = train.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == train.len() {
        return Err(Error::Config(
            "train split must contain both matches and non-matches".into(),
        ));
    }
    if !(config.threshold > 0.0 && config.threshold < 1.0) {
        return Err(Error::Config("threshold must lie in (0, 1)".into()));
    }

    let schema = FeatureSchema::shared(&train[0].0.a, &train[0].0.b);
    let xs: Vec<Vec<f64>> = train.iter().map(|(p, _)| schema.features(p)).collect();
    let ys: Vec<f64> = train.iter().map(|(_, y)| if *y { 1.0 } else { 0.0 }).collect();
    let d = schema.len();
    let n = xs.len() as f64;

    let mut mean = vec![0.0; d];
    for x in &xs {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; d];
    for x in &xs {
        for ((s, v), m) in scale.iter_mut().zip(x).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in &mut scale {
        *s = if *s > 1e-12 { s.sqrt() } else { 1.0 };
    }
    let zs: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| {
            x.iter()
                .zip(&mean)
                .zip(&scale)
                .map(|((v, m), s)| (v - m) / s)
                .collect()
        })
        .collect();

    let mut rng = crate::seed::stream(config.seed, &["baseline-init".into()]);
    let mut w: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let mut b = 0.0;
    let mut grad = vec![0.0; d];
    for _ in 0..config.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (z, y) in zs.iter().zip(&ys) {
            let p = sigmoid(b + z.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>());
            let e = p - y;
            gb += e;
            for (g, a) in grad.iter_mut().zip(z) {
                *g += e * a;
            }
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= config.learning_rate * (g / n + config.l2 * *wi);
        }
        b -= config.learning_rate * gb / n;
    }

    let mut model = BaselineMatcherModel {
        feature_names: schema.names(),
        schema,
        mean,
        scale,
        weights: w,
        bias: b,
        threshold: config.threshold,
        meta: TrainingMeta {
            epochs: config.epochs,
            seed: config.seed,
            learning_rate: config.learning_rate,
            l2: config.l2,
            train_pairs: train.len(),
            validation_f1: None,
        },
    };
    let valid = dataset.pairs("valid");
    if !valid.is_empty() {
        let scores: Vec<f64> = valid.iter().map(|(p, _)| model.score(p)).collect();
        let labels: Vec<bool> = valid.iter().map(|(_, y)| *y).collect();
        model.meta.validation_f1 = Some(f1_score(&scores, &labels, model.threshold));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabeledPair, Record, Table};

    fn toy_dataset(train_labels: &[bool]) -> Dataset {
        let recs: Vec<Record> = ["alpha beta", "gamma delta", "epsilon zeta", "eta theta"]
            .iter()
            .map(|s| Record::from_pairs([("name", *s)]))
            .collect();
        let table = Table {
            ids: (0..4).map(|i| i.to_string()).collect(),
            records: recs,
        };
        let train = train_labels
            .iter()
            .enumerate()
            .map(|(i, &label)| LabeledPair {
                a_index: i % 4,
                b_index: if label { i % 4 } else { (i + 1) % 4 },
                label,
            })
            .collect();
        Dataset {
            table_a: table.clone(),
            table_b: table,
            splits: vec![
                ("train".into(), train),
                ("valid".into(), vec![]),
                ("test".into(), vec![]),
            ],
        }
    }

    #[test]
    fn f1_arithmetic() {
        let f = f1_score(&[0.9, 0.8, 0.2, 0.6], &[true, false, true, true], 0.5);
        // tp=2, fp=1, fn=1
        assert!((f - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_single_class_and_empty() {
        assert!(train_baseline_matcher(&toy_dataset(&[true, true]), &TrainConfig::default()).is_err());
        assert!(train_baseline_matcher(&toy_dataset(&[]), &TrainConfig::default()).is_err());
    }

    #[test]
    fn separates_toy_data_deterministically() {
        let ds = toy_dataset(&[true, false, true, false, true, false, true, false]);
        let cfg = TrainConfig {
            epochs: 300,
            ..Default::default()
        };
        let m1 = train_baseline_matcher(&ds, &cfg).unwrap();
        let m2 = train_baseline_matcher(&ds, &cfg).unwrap();
        assert_eq!(m1.to_json(), m2.to_json());
        let same = ds.pair("train", 0).unwrap();
        let diff = ds.pair("train", 1).unwrap();
        assert!(m1.score(&same) > 0.5);
        assert!(m1.score(&diff) < 0.5);
        let back = BaselineMatcherModel::from_json(&m1.to_json()).unwrap();
        assert_eq!(back, m1);
    }
}
