//! Adam. Dense blocks are updated every step; embedding rows only when they
//! receive a gradient (lazy moments, bias correction from the global step).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{DenseBlocks, Gradients, Parameters};
use super::tokenizer::TokenId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: DenseBlocks,
    pub v: DenseBlocks,
    /// Per touched embedding row: (first moment, second moment).
    pub rows: BTreeMap<TokenId, (Vec<f64>, Vec<f64>)>,
}

impl AdamState {
    pub fn new(shape: &DenseBlocks) -> Self {
        AdamState {
            step: 0,
            m: shape.zeros_like(),
            v: shape.zeros_like(),
            rows: BTreeMap::new(),
        }
    }

    pub fn apply(&mut self, params: &mut Parameters, grads: &Gradients, cfg: &AdamConfig) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                p[i] -= cfg.learning_rate * (m[i] / bc1) / ((v[i] / bc2).sqrt() + cfg.epsilon);
            }
        };
        let pb = params.dense.blocks_mut();
        let gb = grads.dense.blocks();
        let mb = self.m.blocks_mut();
        let vb = self.v.blocks_mut();
        for (((p, g), m), v) in pb.into_iter().zip(gb).zip(mb).zip(vb) {
            update(p, g, m, v);
        }
        for (&row, g) in &grads.embeddings {
            let d = g.len();
            let (m, v) = self
                .rows
                .entry(row)
                .or_insert_with(|| (vec![0.0; d], vec![0.0; d]));
            let p = &mut params.embeddings[row as usize * d..(row as usize + 1) * d];
            update(p, g, m, v);
        }
    }
}
