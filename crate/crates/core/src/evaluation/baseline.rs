use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MetricsReport, PredictionRecord};
use crate::corpus::{sample_table, LabelVocabulary, Table};
use crate::encoder::{AdamConfig, Hyperparameters, LabelDistribution, Model};
use crate::error::{Error, Result};
use crate::features::{extract, FeatureCategory, FeatureProviders};
use crate::prepared::prepare_tables;
use crate::training::{first_pass, fit, TrainConfig};
use crate::{encoder, seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    GlobalStats,
    CharDist,
    CharEmb,
    WordEmb,
    ParaEmb,
    AllFeatures,
    ValuesOnlyModel,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 7] = [
        BaselineKind::GlobalStats,
        BaselineKind::CharDist,
        BaselineKind::CharEmb,
        BaselineKind::WordEmb,
        BaselineKind::ParaEmb,
        BaselineKind::AllFeatures,
        BaselineKind::ValuesOnlyModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::GlobalStats => "global_stats",
            BaselineKind::CharDist => "char_dist",
            BaselineKind::CharEmb => "char_emb",
            BaselineKind::WordEmb => "word_emb",
            BaselineKind::ParaEmb => "para_emb",
            BaselineKind::AllFeatures => "all_features",
            BaselineKind::ValuesOnlyModel => "values_only_model",
        }
    }

    pub fn feature_category(self) -> Option<FeatureCategory> {
        match self {
            BaselineKind::GlobalStats => Some(FeatureCategory::GlobalStats),
            BaselineKind::CharDist => Some(FeatureCategory::CharDist),
            BaselineKind::CharEmb => Some(FeatureCategory::CharEmb),
            BaselineKind::WordEmb => Some(FeatureCategory::WordEmb),
            BaselineKind::ParaEmb => Some(FeatureCategory::ParaEmb),
            BaselineKind::AllFeatures => Some(FeatureCategory::All),
            BaselineKind::ValuesOnlyModel => None,
        }
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown baseline {s:?}")))
    }
}

/// A classifier over fixed-length per-column feature vectors.
pub trait ColumnClassifier: Send + Sync {
    fn fit(&mut self, features: &[Vec<f64>], labels: &[usize], num_labels: usize) -> Result<()>;
    fn predict(&self, features: &[f64]) -> Result<LabelDistribution>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifierConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LinearClassifierConfig {
    fn default() -> Self {
        LinearClassifierConfig {
            epochs: 30,
            batch_size: 32,
            adam: AdamConfig {
                learning_rate: 0.05,
                ..AdamConfig::default()
            },
            l2: 1e-4,
            seed: 0,
        }
    }
}

/// Multinomial logistic regression on standardized features, trained with
/// minibatch Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    config: LinearClassifierConfig,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Row-major `labels x dim` weights followed by `labels` biases.
    params: Vec<f64>,
    labels: usize,
}

impl LinearClassifier {
    pub fn new(config: LinearClassifierConfig) -> Self {
        LinearClassifier {
            config,
            mean: Vec::new(),
            scale: Vec::new(),
            params: Vec::new(),
            labels: 0,
        }
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    fn probs(&self, z: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let logits: Vec<f64> = (0..self.labels)
            .map(|l| {
                let w = &self.params[l * d..(l + 1) * d];
                w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + self.params[self.labels * d + l]
            })
            .collect();
        encoder::softmax(&logits)
    }
}

impl ColumnClassifier for LinearClassifier {
    fn fit(&mut self, features: &[Vec<f64>], labels: &[usize], num_labels: usize) -> Result<()> {
        if features.is_empty() {
            return Err(Error::EmptyInput("classifier training set"));
        }
        if features.len() != labels.len() {
            return Err(Error::Mismatch(format!(
                "{} rows, {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= num_labels) {
            return Err(Error::LabelOutOfRange {
                label: l,
                size: num_labels,
            });
        }
        let d = features[0].len();
        if let Some(bad) = features.iter().find(|f| f.len() != d) {
            return Err(Error::DimensionMismatch {
                what: "feature vector",
                expected: d,
                actual: bad.len(),
            });
        }
        let n = features.len() as f64;
        self.mean = (0..d)
            .map(|j| features.iter().map(|f| f[j]).sum::<f64>() / n)
            .collect();
        self.scale = (0..d)
            .map(|j| {
                let var = features
                    .iter()
                    .map(|f| (f[j] - self.mean[j]).powi(2))
                    .sum::<f64>()
                    / n;
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        self.labels = num_labels;
        self.params = vec![0.0; num_labels * (d + 1)];
        let xs: Vec<Vec<f64>> = features.iter().map(|f| self.standardize(f)).collect();

        let cfg = self.config;
        let mut m = vec![0.0; self.params.len()];
        let mut v = vec![0.0; self.params.len()];
        let mut step = 0i32;
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let mut rng = seed::rng(cfg.seed, &[0xc1a5]);
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch_size.max(1)) {
                let mut grad: Vec<f64> = self.params.iter().map(|w| cfg.l2 * w).collect();
                let inv = 1.0 / batch.len() as f64;
                for &i in batch {
                    let p = self.probs(&xs[i]);
                    for l in 0..num_labels {
                        let delta = (p[l] - f64::from(u8::from(labels[i] == l))) * inv;
                        for (g, x) in grad[l * d..(l + 1) * d].iter_mut().zip(&xs[i]) {
                            *g += delta * x;
                        }
                        grad[num_labels * d + l] += delta;
                    }
                }
                step += 1;
                let bc1 = 1.0 - cfg.adam.beta1.powi(step);
                let bc2 = 1.0 - cfg.adam.beta2.powi(step);
                for k in 0..self.params.len() {
                    m[k] = cfg.adam.beta1 * m[k] + (1.0 - cfg.adam.beta1) * grad[k];
                    v[k] = cfg.adam.beta2 * v[k] + (1.0 - cfg.adam.beta2) * grad[k] * grad[k];
                    self.params[k] -= cfg.adam.learning_rate * (m[k] / bc1)
                        / ((v[k] / bc2).sqrt() + cfg.adam.epsilon);
                }
            }
        }
        if self.params.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("linear classifier weights".into()));
        }
        Ok(())
    }

    fn predict(&self, features: &[f64]) -> Result<LabelDistribution> {
        if self.labels == 0 {
            return Err(Error::Config("classifier is not fitted".into()));
        }
        if features.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "feature vector",
                expected: self.dim(),
                actual: features.len(),
            });
        }
        Ok(LabelDistribution::from_probs(
            self.probs(&self.standardize(features)),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub value_cap: usize,
    pub seed: u64,
    pub classifier: LinearClassifierConfig,
    pub train: TrainConfig,
    pub hyperparameters: Hyperparameters,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            value_cap: crate::corpus::DEFAULT_VALUE_CAP,
            seed: 0,
            classifier: LinearClassifierConfig::default(),
            train: TrainConfig::default(),
            hyperparameters: Hyperparameters::default(),
        }
    }
}

fn labeled_columns(
    tables: &[Table],
    vocab: &LabelVocabulary,
    cap: usize,
    seed: u64,
) -> Vec<(Vec<String>, usize)> {
    let mut out = Vec::new();
    for t in tables {
        for (c, values) in t.columns.iter().zip(sample_table(t, cap, seed)) {
            if let Some(l) = c.label.as_deref().and_then(|l| vocab.id(l)) {
                out.push((values, l));
            }
        }
    }
    out
}

/// Per-column records for one baseline, trained on `train` and scored on
/// every labeled column of `test` in table order.
pub fn baseline_records(
    kind: BaselineKind,
    train: &[Table],
    test: &[Table],
    vocab: &LabelVocabulary,
    config: &BaselineConfig,
) -> Result<Vec<PredictionRecord>> {
    match kind.feature_category() {
        Some(category) => {
            let train_cols = labeled_columns(train, vocab, config.value_cap, config.seed);
            let test_cols = labeled_columns(test, vocab, config.value_cap, config.seed);
            let providers = FeatureProviders::builtin(
                train_cols
                    .iter()
                    .flat_map(|(vals, _)| vals.iter().map(String::as_str)),
            );
            let featurize = |cols: &[(Vec<String>, usize)]| {
                crate::parallel::try_map(cols, |(vals, _)| {
                    extract(category, vals, &providers).map(|f| f.into_inner())
                })
            };
            let x_train = featurize(&train_cols)?;
            let y_train: Vec<usize> = train_cols.iter().map(|(_, l)| *l).collect();
            let mut clf = LinearClassifier::new(LinearClassifierConfig {
                seed: config.seed,
                ..config.classifier
            });
            clf.fit(&x_train, &y_train, vocab.len())?;
            featurize(&test_cols)?
                .iter()
                .zip(&test_cols)
                .map(|(x, (_, truth))| {
                    PredictionRecord::from_ranking(*truth, clf.predict(x)?.ranked())
                })
                .collect()
        }
        None => {
            let mut model = Model::new(
                vocab.clone(),
                Hyperparameters {
                    values_only: true,
                    ..config.hyperparameters
                },
            );
            let prepared = prepare_tables(&model, train, config.value_cap, config.seed);
            fit(&mut model, &prepared, &config.train, |_, _| Ok(()))?;
            let mut out = Vec::new();
            for t in prepare_tables(&model, test, config.value_cap, config.seed) {
                let (dists, _) = first_pass(&model, &t)?;
                for (c, d) in t.columns.iter().zip(dists) {
                    if let Some(truth) = c.label {
                        out.push(PredictionRecord::from_ranking(truth, d.ranked())?);
                    }
                }
            }
            Ok(out)
        }
    }
}

pub fn run_baseline(
    kind: BaselineKind,
    train: &[Table],
    test: &[Table],
    vocab: &LabelVocabulary,
    config: &BaselineConfig,
) -> Result<MetricsReport> {
    compute_metrics(
        &baseline_records(kind, train, test, vocab, config)?,
        vocab.len(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in BaselineKind::ALL {
            assert_eq!(k.name().parse::<BaselineKind>().unwrap(), k);
        }
        assert!("forest".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn linear_classifier_separates_blobs() {
        let mut rng = seed::rng(4, &[]);
        use rand::Rng;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..90 {
            let l = i % 3;
            x.push(vec![
                l as f64 * 3.0 + rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                7.0,
            ]);
            y.push(l);
        }
        let mut clf = LinearClassifier::new(LinearClassifierConfig::default());
        clf.fit(&x, &y, 3).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(f, &l)| clf.predict(f).unwrap().argmax() == l)
            .count();
        assert!(correct >= 85, "{correct}/90");
        assert!(clf.predict(&[1.0]).is_err());
    }

    #[test]
    fn unfitted_classifier_refuses() {
        assert!(LinearClassifier::new(LinearClassifierConfig::default())
            .predict(&[])
            .is_err());
    }
}
