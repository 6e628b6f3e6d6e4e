//! Per-table three-phase training.
//!
//! For each table: predict every column from its values alone, build each
//! column's context from the other columns' predictions (deduplicated, own
//! true label removed), predict again with context, and take one optimizer
//! step on the mean cross-entropy of the contextual predictions.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoder::{AdamConfig, LabelDistribution, Model};
use crate::error::{Error, Result};
use crate::prepared::PreparedTable;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub value_cap: usize,
    /// Randomly permute each context per step instead of keeping column order.
    pub shuffle_context: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            adam: AdamConfig::default(),
            seed: 0,
            value_cap: crate::corpus::DEFAULT_VALUE_CAP,
            shuffle_context: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.value_cap == 0 {
            return Err(Error::Config("value cap must be at least 1".into()));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Values-only predictions for every column of `table`.
pub fn first_pass(
    model: &Model,
    table: &PreparedTable,
) -> Result<(Vec<LabelDistribution>, Vec<usize>)> {
    let columns: Vec<usize> = (0..table.width()).collect();
    let dists = crate::parallel::try_map(&columns, |&i| {
        model.forward(&table.values_only_input(model, i))
    })?;
    let labels = dists.iter().map(LabelDistribution::argmax).collect();
    Ok((dists, labels))
}

/// Order-preserving distinct labels of every column except `column`.
pub fn context_excluding(labels: &[usize], column: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(labels.len());
    for (j, &l) in labels.iter().enumerate() {
        if j != column && !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

/// Training contexts: the other columns' predictions, deduplicated, with
/// the column's own true label removed.
pub fn build_contexts(predicted: &[usize], truth: &[usize]) -> Result<Vec<Vec<usize>>> {
    if predicted.len() != truth.len() {
        return Err(Error::Mismatch(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    Ok((0..predicted.len())
        .map(|i| {
            let mut c = context_excluding(predicted, i);
            c.retain(|&l| l != truth[i]);
            c
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub loss: f64,
    pub columns: usize,
    /// Contexts verified free of their column's true label.
    pub leakage_checks: usize,
}

/// One optimizer step on one table.
pub fn train_table(
    model: &mut Model,
    table: &PreparedTable,
    config: &TrainConfig,
    shuffle_rng: &mut seed::Rng,
) -> Result<StepStats> {
    let truth = table.gold().ok_or_else(|| Error::InvalidTable {
        table: table.id.clone(),
        message: "training table has a column without a known label".into(),
    })?;
    if model.hyperparameters().values_only {
        let batch: Vec<_> = (0..table.width())
            .map(|i| (table.values_only_input(model, i), truth[i]))
            .collect();
        let loss = model.train_step(&batch, &config.adam)?;
        return Ok(StepStats {
            loss,
            columns: table.width(),
            leakage_checks: 0,
        });
    }

    let (_, predicted) = first_pass(model, table)?;
    let mut contexts = build_contexts(&predicted, &truth)?;
    for (i, ctx) in contexts.iter_mut().enumerate() {
        if ctx.contains(&truth[i]) {
            return Err(Error::Leakage {
                table: table.id.clone(),
                column: i,
            });
        }
        if config.shuffle_context {
            ctx.shuffle(shuffle_rng);
        }
    }
    let batch: Vec<_> = contexts
        .iter()
        .enumerate()
        .map(|(i, ctx)| (table.contextual_input(model, i, ctx), truth[i]))
        .collect();
    let loss = model.train_step(&batch, &config.adam)?;
    Ok(StepStats {
        loss,
        columns: table.width(),
        leakage_checks: contexts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub tables: usize,
    pub columns: usize,
    pub leakage_checks: usize,
}

/// One pass over `tables` in a seeded per-epoch order.
pub fn train_epoch(
    model: &mut Model,
    tables: &[PreparedTable],
    config: &TrainConfig,
    epoch: usize,
) -> Result<EpochStats> {
    if tables.is_empty() {
        return Err(Error::EmptyCorpus("no training tables".into()));
    }
    let mut order: Vec<usize> = (0..tables.len()).collect();
    order.shuffle(&mut seed::rng(config.seed, &[0xe90c, epoch as u64]));
    let mut ctx_rng = seed::rng(config.seed, &[0xc7c7, epoch as u64]);
    let mut stats = EpochStats {
        epoch,
        mean_loss: 0.0,
        tables: tables.len(),
        columns: 0,
        leakage_checks: 0,
    };
    for &t in &order {
        let step = match train_table(model, &tables[t], config, &mut ctx_rng) {
            Err(Error::NonFinite(_)) => {
                return Err(Error::Diverged {
                    epoch,
                    table: tables[t].id.clone(),
                    loss: f64::NAN,
                })
            }
            other => other?,
        };
        if !step.loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                table: tables[t].id.clone(),
                loss: step.loss,
            });
        }
        stats.mean_loss += step.loss;
        stats.columns += step.columns;
        stats.leakage_checks += step.leakage_checks;
    }
    stats.mean_loss /= tables.len() as f64;
    Ok(stats)
}

/// Runs `config.epochs` epochs, calling `on_epoch` after each.
pub fn fit<F>(
    model: &mut Model,
    tables: &[PreparedTable],
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<Vec<EpochStats>>
where
    F: FnMut(&Model, &EpochStats) -> Result<()>,
{
    config.validate()?;
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let stats = train_epoch(model, tables, config, epoch)?;
        on_epoch(model, &stats)?;
        curve.push(stats);
    }
    Ok(curve)
}
