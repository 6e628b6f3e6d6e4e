//! Sequential context-aware labeling of a headerless table.
//!
//! After a values-only pass, the table is labeled over `m` passes. Each pass
//! re-predicts every remaining column with its current context, fixes the
//! single most confident column, and writes that column's final label over
//! its first-pass label in everyone else's context.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::encoder::{LabelDistribution, Model};
use crate::error::{Error, Result};
use crate::prepared::PreparedTable;
use crate::training::{context_excluding, first_pass};

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceOptions {
    pub unique_headers: bool,
    pub top_k: usize,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            unique_headers: true,
            top_k: DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    /// Index into the distributions handed to the selector.
    pub column: usize,
    pub label: usize,
    /// Every searched candidate was already used; the first candidate was
    /// returned despite the duplicate.
    pub fallback: bool,
}

/// Picks the (column, label) pair with the highest probability whose label
/// is not yet used, searching each column's `top_k` best labels. Candidates
/// are consumed globally by descending probability (ties: lowest column,
/// then lowest label). If the search is exhausted, the very first candidate
/// is returned and flagged.
pub fn unique_headers_select(
    distributions: &[LabelDistribution],
    top_k: usize,
    predicted: &HashSet<usize>,
) -> Result<Selection> {
    if distributions.is_empty() {
        return Err(Error::EmptyInput("unique headers selection"));
    }
    if top_k == 0 {
        return Err(Error::Config("top_k must be at least 1".into()));
    }
    let lists: Vec<Vec<(usize, f64)>> = distributions.iter().map(|d| d.top_k(top_k)).collect();
    let mut heads = vec![0usize; lists.len()];
    let mut first: Option<(usize, usize)> = None;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (c, list) in lists.iter().enumerate() {
            if let Some(&(_, p)) = list.get(heads[c]) {
                if best.is_none_or(|(_, bp)| p > bp) {
                    best = Some((c, p));
                }
            }
        }
        let Some((c, _)) = best else {
            let (column, label) = first.expect("at least one candidate was visited");
            return Ok(Selection {
                column,
                label,
                fallback: true,
            });
        };
        let label = lists[c][heads[c]].0;
        first.get_or_insert((c, label));
        heads[c] += 1;
        if !predicted.contains(&label) {
            return Ok(Selection {
                column: c,
                label,
                fallback: false,
            });
        }
    }
}

/// Unconstrained selection: the most confident column, ties to the lowest index.
pub fn argmax_select(distributions: &[LabelDistribution]) -> Result<Selection> {
    let mut best = 0;
    for (i, d) in distributions.iter().enumerate() {
        if d.confidence()
            > distributions
                .get(best)
                .ok_or(Error::EmptyInput("selection"))?
                .confidence()
        {
            best = i;
        }
    }
    let d = distributions
        .get(best)
        .ok_or(Error::EmptyInput("selection"))?;
    Ok(Selection {
        column: best,
        label: d.argmax(),
        fallback: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnTrace {
    pub column: usize,
    pub first_pass: usize,
    pub final_label: usize,
    /// Probability of the final label when it was fixed.
    pub confidence: f64,
    /// 1-based pass at which the column was fixed.
    pub pass: usize,
    pub fallback: bool,
    /// Distribution at the pass that fixed the column.
    pub distribution: LabelDistribution,
}

/// What one pass saw: the candidates' contexts and confidences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassRecord {
    pub pass: usize,
    /// (column, context, confidence) for each remaining column.
    pub candidates: Vec<(usize, Vec<usize>, f64)>,
    pub chosen: usize,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceTrace {
    pub table_id: String,
    /// One entry per predicted column, in column order.
    pub columns: Vec<ColumnTrace>,
    pub passes: Vec<PassRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    /// A label per column: known labels verbatim, predictions elsewhere.
    pub labels: Vec<usize>,
    pub trace: InferenceTrace,
}

/// Labels every column of a headerless table.
pub fn label_table(
    model: &Model,
    table: &PreparedTable,
    options: &InferenceOptions,
) -> Result<Labeling> {
    label_table_masked(model, table, &vec![None; table.width()], options)
}

/// Labels the columns whose entry in `known` is `None`. Known labels sit in
/// every context from the start, are never re-predicted, and count as used
/// for the unique-headers constraint.
pub fn label_table_masked(
    model: &Model,
    table: &PreparedTable,
    known: &[Option<usize>],
    options: &InferenceOptions,
) -> Result<Labeling> {
    if known.len() != table.width() {
        return Err(Error::Mismatch(format!(
            "table {} has {} columns, mask has {}",
            table.id,
            table.width(),
            known.len()
        )));
    }
    if options.unique_headers && options.top_k == 0 {
        return Err(Error::Config("top_k must be at least 1".into()));
    }
    let masked: Vec<usize> = (0..known.len()).filter(|&i| known[i].is_none()).collect();
    if masked.is_empty() {
        return Err(Error::EmptyInput("masked columns"));
    }
    for &l in known.iter().flatten() {
        if l >= model.num_labels() {
            return Err(Error::LabelOutOfRange {
                label: l,
                size: model.num_labels(),
            });
        }
    }

    let (_, first) = first_pass(model, table)?;
    let mut current: Vec<usize> = known
        .iter()
        .zip(&first)
        .map(|(k, &f)| k.unwrap_or(f))
        .collect();
    let mut used: HashSet<usize> = known.iter().flatten().copied().collect();
    let mut remaining = masked.clone();
    let mut fixed: Vec<Option<ColumnTrace>> = vec![None; table.width()];
    let mut passes = Vec::with_capacity(masked.len());

    for pass in 1..=masked.len() {
        let contexts: Vec<Vec<usize>> = remaining
            .iter()
            .map(|&i| context_excluding(&current, i))
            .collect();
        let jobs: Vec<(usize, &Vec<usize>)> = remaining.iter().copied().zip(&contexts).collect();
        let dists = crate::parallel::try_map(&jobs, |&(i, ctx)| {
            model.forward(&table.contextual_input(model, i, ctx))
        })?;
        let sel = if options.unique_headers {
            unique_headers_select(&dists, options.top_k, &used)?
        } else {
            argmax_select(&dists)?
        };
        let col = remaining[sel.column];
        let dist = dists[sel.column].clone();
        passes.push(PassRecord {
            pass,
            candidates: remaining
                .iter()
                .zip(contexts)
                .zip(&dists)
                .map(|((&c, ctx), d)| (c, ctx, d.confidence()))
                .collect(),
            chosen: col,
            label: sel.label,
        });
        fixed[col] = Some(ColumnTrace {
            column: col,
            first_pass: first[col],
            final_label: sel.label,
            confidence: dist.prob(sel.label),
            pass,
            fallback: sel.fallback,
            distribution: dist,
        });
        current[col] = sel.label;
        used.insert(sel.label);
        remaining.remove(sel.column);
    }

    Ok(Labeling {
        labels: current,
        trace: InferenceTrace {
            table_id: table.id.clone(),
            columns: fixed.into_iter().flatten().collect(),
            passes,
        },
    })
}

/// Serialized prediction for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPrediction {
    pub index: usize,
    pub first_pass: String,
    #[serde(rename = "final")]
    pub final_label: String,
    pub confidence: f64,
    pub pass: usize,
    pub fallback: bool,
    /// All labels by descending probability at the fixing pass.
    pub ranking: Vec<String>,
}

/// One JSONL record of the prediction output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePrediction {
    pub table_id: String,
    pub columns: Vec<ColumnPrediction>,
}

impl TablePrediction {
    pub fn from_trace(trace: &InferenceTrace, model: &Model) -> Self {
        let v = model.vocabulary();
        TablePrediction {
            table_id: trace.table_id.clone(),
            columns: trace
                .columns
                .iter()
                .map(|c| ColumnPrediction {
                    index: c.column,
                    first_pass: v.label(c.first_pass).to_string(),
                    final_label: v.label(c.final_label).to_string(),
                    confidence: c.confidence,
                    pass: c.pass,
                    fallback: c.fallback,
                    ranking: c
                        .distribution
                        .ranked()
                        .into_iter()
                        .map(|l| v.label(l).to_string())
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Labels many tables in parallel; `masks[i]` gives the known labels of
/// table `i` (all `None` for fully headerless tables).
pub fn label_tables(
    model: &Model,
    tables: &[PreparedTable],
    masks: &[Vec<Option<usize>>],
    options: &InferenceOptions,
) -> Result<Vec<Labeling>> {
    if tables.len() != masks.len() {
        return Err(Error::Mismatch("one mask per table required".into()));
    }
    let jobs: Vec<(&PreparedTable, &Vec<Option<usize>>)> = tables.iter().zip(masks).collect();
    crate::parallel::try_map(&jobs, |(t, k)| label_table_masked(model, t, k, options))
}
