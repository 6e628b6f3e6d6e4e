//! The column encoder and its softmax head.
//!
//! Each segment (values, context) is pooled as the mean of its token
//! embeddings plus a learned segment vector. The two pooled vectors are
//! concatenated, passed through one tanh hidden layer, and projected onto
//! the label set.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::distribution::LabelDistribution;
use super::optim::AdamState;
use super::tokenizer::{ColumnInput, TokenId, Tokenizer, TokenizerConfig};
use crate::corpus::LabelVocabulary;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub embedding_dim: usize,
    pub hidden: usize,
    pub tokenizer: TokenizerConfig,
    pub init_seed: u64,
    /// Inputs never carry context: the values-only baseline.
    #[serde(default)]
    pub values_only: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            embedding_dim: 32,
            hidden: 256,
            tokenizer: TokenizerConfig::default(),
            init_seed: 0,
            values_only: false,
        }
    }
}

/// The dense parameter blocks, in a fixed order shared by gradients and
/// optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlocks {
    /// 2 x dim: value segment then context segment.
    pub segments: Vec<f64>,
    /// hidden x (2 * dim), row major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// labels x hidden, row major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl DenseBlocks {
    pub const NAMES: [&'static str; 5] = ["segments", "w1", "b1", "w2", "b2"];

    pub fn zeros(dim: usize, hidden: usize, labels: usize) -> Self {
        DenseBlocks {
            segments: vec![0.0; 2 * dim],
            w1: vec![0.0; hidden * 2 * dim],
            b1: vec![0.0; hidden],
            w2: vec![0.0; labels * hidden],
            b2: vec![0.0; labels],
        }
    }

    pub fn zeros_like(&self) -> Self {
        DenseBlocks {
            segments: vec![0.0; self.segments.len()],
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
        }
    }

    pub fn blocks(&self) -> [&Vec<f64>; 5] {
        [&self.segments, &self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [
            &mut self.segments,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// buckets x dim, row major.
    pub embeddings: Vec<f64>,
    pub dense: DenseBlocks,
}

/// Gradients: embedding rows are sparse, keyed by token id.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embeddings: BTreeMap<TokenId, Vec<f64>>,
    pub dense: DenseBlocks,
}

impl Gradients {
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self
            .dense
            .blocks_mut()
            .into_iter()
            .zip(other.dense.blocks())
        {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (row, g) in &other.embeddings {
            let dst = self
                .embeddings
                .entry(*row)
                .or_insert_with(|| vec![0.0; g.len()]);
            dst.iter_mut().zip(g).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for b in self.dense.blocks_mut() {
            b.iter_mut().for_each(|x| *x *= factor);
        }
        for g in self.embeddings.values_mut() {
            g.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.dense
            .blocks()
            .iter()
            .all(|b| b.iter().all(|x| x.is_finite()))
            && self
                .embeddings
                .values()
                .all(|g| g.iter().all(|x| x.is_finite()))
    }
}

struct Activations {
    x: Vec<f64>,
    h: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    hyper: Hyperparameters,
    vocabulary: LabelVocabulary,
    tokenizer: Tokenizer,
    params: Parameters,
    optimizer: AdamState,
}

fn uniform(rng: &mut impl Rng, n: usize, limit: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
}

impl Model {
    /// Fresh model. Token embeddings start at zero; the segment vectors and
    /// both layers use Glorot-uniform draws from `hyper.init_seed`.
    pub fn new(vocabulary: LabelVocabulary, hyper: Hyperparameters) -> Self {
        let d = hyper.embedding_dim;
        let h = hyper.hidden;
        let l = vocabulary.len();
        let mut rng = seed::rng(hyper.init_seed, &[0x1417]);
        let dense = DenseBlocks {
            segments: uniform(&mut rng, 2 * d, 0.1),
            w1: uniform(&mut rng, h * 2 * d, (6.0 / (2 * d + h) as f64).sqrt()),
            b1: vec![0.0; h],
            w2: uniform(&mut rng, l * h, (6.0 / (h + l) as f64).sqrt()),
            b2: vec![0.0; l],
        };
        let params = Parameters {
            embeddings: vec![0.0; hyper.tokenizer.buckets as usize * d],
            dense,
        };
        Self::from_parts(hyper, vocabulary, params, None)
    }

    pub(crate) fn from_parts(
        hyper: Hyperparameters,
        vocabulary: LabelVocabulary,
        params: Parameters,
        optimizer: Option<AdamState>,
    ) -> Self {
        let optimizer = optimizer.unwrap_or_else(|| AdamState::new(&params.dense));
        Model {
            tokenizer: Tokenizer::new(hyper.tokenizer),
            hyper,
            vocabulary,
            params,
            optimizer,
        }
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn vocabulary(&self) -> &LabelVocabulary {
        &self.vocabulary
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn num_labels(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn parameters(&self) -> &Parameters {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut Parameters {
        &mut self.params
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.optimizer
    }

    pub(crate) fn params_and_optimizer(&mut self) -> (&mut Parameters, &mut AdamState) {
        (&mut self.params, &mut self.optimizer)
    }

    /// Zeroes the output layer, making every prediction uniform.
    pub fn zero_head(&mut self) {
        self.params.dense.w2.iter_mut().for_each(|x| *x = 0.0);
        self.params.dense.b2.iter_mut().for_each(|x| *x = 0.0);
    }

    fn check_input(&self, input: &ColumnInput) -> Result<()> {
        if input.fingerprint != self.tokenizer.fingerprint() {
            return Err(Error::FingerprintMismatch {
                model: self.tokenizer.fingerprint(),
                input: input.fingerprint,
            });
        }
        let buckets = self.hyper.tokenizer.buckets;
        if let Some(&t) = input
            .value_tokens
            .iter()
            .chain(&input.context_tokens)
            .find(|&&t| t >= buckets)
        {
            return Err(Error::Config(format!(
                "token id {t} outside {buckets} buckets"
            )));
        }
        Ok(())
    }

    fn activations(&self, input: &ColumnInput) -> Activations {
        let d = self.hyper.embedding_dim;
        let hidden = self.hyper.hidden;
        let p = &self.params;
        let mut x = p.dense.segments.clone();
        for (seg, tokens) in [&input.value_tokens, &input.context_tokens]
            .into_iter()
            .enumerate()
        {
            if tokens.is_empty() {
                continue;
            }
            let inv = 1.0 / tokens.len() as f64;
            let slot = &mut x[seg * d..(seg + 1) * d];
            for &t in tokens {
                let row = &p.embeddings[t as usize * d..(t as usize + 1) * d];
                slot.iter_mut().zip(row).for_each(|(a, e)| *a += e * inv);
            }
        }
        let in_dim = 2 * d;
        let h: Vec<f64> = (0..hidden)
            .map(|j| {
                let w = &p.dense.w1[j * in_dim..(j + 1) * in_dim];
                let z = p.dense.b1[j] + w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
                z.tanh()
            })
            .collect();
        let logits: Vec<f64> = (0..self.num_labels())
            .map(|i| {
                let w = &p.dense.w2[i * hidden..(i + 1) * hidden];
                p.dense.b2[i] + w.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        Activations {
            x,
            h,
            probs: softmax(&logits),
        }
    }

    /// Label distribution for one serialized column.
    pub fn forward(&self, input: &ColumnInput) -> Result<LabelDistribution> {
        self.check_input(input)?;
        let acts = self.activations(input);
        if !acts.probs.iter().all(|p| p.is_finite()) {
            return Err(Error::NonFinite("encoder activations".into()));
        }
        Ok(LabelDistribution::from_probs(acts.probs))
    }

    /// Mean cross-entropy of a batch, forward only.
    pub fn loss(&self, batch: &[(ColumnInput, usize)]) -> Result<f64> {
        self.check_batch(batch)?;
        let total: f64 = batch
            .iter()
            .map(|(input, y)| -self.activations(input).probs[*y].ln())
            .sum();
        Ok(total / batch.len() as f64)
    }

    fn check_batch(&self, batch: &[(ColumnInput, usize)]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("training batch"));
        }
        for (input, y) in batch {
            self.check_input(input)?;
            if *y >= self.num_labels() {
                return Err(Error::LabelOutOfRange {
                    label: *y,
                    size: self.num_labels(),
                });
            }
        }
        Ok(())
    }

    /// Mean cross-entropy and its gradient with respect to every parameter.
    pub fn loss_and_gradients(&self, batch: &[(ColumnInput, usize)]) -> Result<(f64, Gradients)> {
        self.check_batch(batch)?;
        let per_example = crate::parallel::map(batch, |(input, y)| self.backward(input, *y));
        let mut iter = per_example.into_iter();
        let (mut loss, mut grads) = iter.next().expect("non-empty batch");
        for (l, g) in iter {
            loss += l;
            grads.add_assign(&g);
        }
        let inv = 1.0 / batch.len() as f64;
        grads.scale(inv);
        Ok((loss * inv, grads))
    }

    fn backward(&self, input: &ColumnInput, label: usize) -> (f64, Gradients) {
        let d = self.hyper.embedding_dim;
        let hidden = self.hyper.hidden;
        let in_dim = 2 * d;
        let p = &self.params.dense;
        let acts = self.activations(input);
        let loss = -acts.probs[label].ln();

        let mut dlogits = acts.probs.clone();
        dlogits[label] -= 1.0;

        let mut dense = p.zeros_like();
        let mut dh = vec![0.0; hidden];
        for (i, &g) in dlogits.iter().enumerate() {
            dense.b2[i] = g;
            let row = i * hidden;
            for j in 0..hidden {
                dense.w2[row + j] = g * acts.h[j];
                dh[j] += p.w2[row + j] * g;
            }
        }
        let mut dx = vec![0.0; in_dim];
        for j in 0..hidden {
            let dz = dh[j] * (1.0 - acts.h[j] * acts.h[j]);
            dense.b1[j] = dz;
            let row = j * in_dim;
            for k in 0..in_dim {
                dense.w1[row + k] = dz * acts.x[k];
                dx[k] += p.w1[row + k] * dz;
            }
        }
        dense.segments.copy_from_slice(&dx);

        let mut embeddings: BTreeMap<TokenId, Vec<f64>> = BTreeMap::new();
        for (seg, tokens) in [&input.value_tokens, &input.context_tokens]
            .into_iter()
            .enumerate()
        {
            if tokens.is_empty() {
                continue;
            }
            let inv = 1.0 / tokens.len() as f64;
            let g = &dx[seg * d..(seg + 1) * d];
            for &t in tokens {
                let row = embeddings.entry(t).or_insert_with(|| vec![0.0; d]);
                row.iter_mut().zip(g).for_each(|(a, b)| *a += b * inv);
            }
        }
        (loss, Gradients { embeddings, dense })
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}
