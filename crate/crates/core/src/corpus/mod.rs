//! Tables, label vocabularies, value sampling and train/test splitting.

mod io;
pub mod synthetic;

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use io::{
    is_null_token, load_corpus, load_tables, read_manifest, save_corpus, Corpus, Dialect,
    LoadOptions, ManifestRecord, NULL_TOKENS,
};
pub use synthetic::{generate_synthetic_corpus, GeneratorConfig};

/// Default number of sampled values per column.
pub const DEFAULT_VALUE_CAP: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub label: Option<String>,
    pub values: Vec<String>,
}

impl Column {
    pub fn new(label: Option<&str>, values: Vec<String>) -> Self {
        Column {
            label: label.map(normalize_label),
            values,
        }
    }

    pub fn unlabeled(values: Vec<String>) -> Self {
        Column {
            label: None,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub id: String,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn new(id: impl Into<String>, columns: Vec<Column>) -> Result<Self> {
        let table = Table {
            id: id.into(),
            columns,
        };
        table.validate()?;
        Ok(table)
    }

    /// Checks the shape invariants: at least one column, at least one row,
    /// equal row counts.
    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::InvalidTable {
            table: self.id.clone(),
            message,
        };
        let first = self
            .columns
            .first()
            .ok_or_else(|| invalid("table has no columns".into()))?;
        let rows = first.values.len();
        if rows == 0 {
            return Err(invalid("table has no rows".into()));
        }
        for (i, c) in self.columns.iter().enumerate() {
            if c.values.len() != rows {
                return Err(invalid(format!(
                    "column {i} has {} values, expected {rows}",
                    c.values.len()
                )));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn labels(&self) -> Vec<Option<&str>> {
        self.columns.iter().map(|c| c.label.as_deref()).collect()
    }

    /// Same table with every header removed.
    pub fn without_labels(&self) -> Table {
        Table {
            id: self.id.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| Column::unlabeled(c.values.clone()))
                .collect(),
        }
    }
}

/// Trim, collapse internal whitespace, lowercase.
pub fn normalize_label(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// The closed set of schema labels, with dense ids in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocabulary {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelVocabulary {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let labels: Vec<String> = labels
            .into_iter()
            .map(|s| normalize_label(s.as_ref()))
            .collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::Vocabulary("empty label".into()));
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Vocabulary(format!("duplicate label {l:?}")));
            }
        }
        if labels.len() < 2 {
            return Err(Error::Vocabulary(format!(
                "need at least 2 labels, got {}",
                labels.len()
            )));
        }
        Ok(LabelVocabulary { labels, index })
    }

    /// Labels occurring at least `min_count` times across `tables`, sorted.
    pub fn from_tables<'a>(
        tables: impl IntoIterator<Item = &'a Table>,
        min_count: usize,
    ) -> Result<Self> {
        let counts = label_counts(tables);
        Self::new(
            counts
                .into_iter()
                .filter(|&(_, n)| n >= min_count)
                .map(|(l, _)| l),
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn fingerprint(&self) -> u64 {
        seed::hash_str(&self.labels.join("\u{1f}"))
    }
}

pub fn label_counts<'a>(tables: impl IntoIterator<Item = &'a Table>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for t in tables {
        for c in &t.columns {
            if let Some(l) = &c.label {
                *counts.entry(l.clone()).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Drops columns whose label is missing from `vocab`, then tables left empty.
pub fn restrict_to_vocabulary(tables: &[Table], vocab: &LabelVocabulary) -> Vec<Table> {
    tables
        .iter()
        .filter_map(|t| {
            let columns: Vec<Column> = t
                .columns
                .iter()
                .filter(|c| c.label.as_deref().is_some_and(|l| vocab.id(l).is_some()))
                .cloned()
                .collect();
            (!columns.is_empty()).then(|| Table {
                id: t.id.clone(),
                columns,
            })
        })
        .collect()
}

/// Uniform sample of `min(cap, len)` values without replacement, shuffled.
pub fn sample_values(column: &Column, cap: usize, seed: u64) -> Vec<String> {
    let n = column.values.len();
    let k = cap.max(1).min(n);
    let mut rng = seed::rng(seed, &[n as u64, k as u64]);
    let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
    picked.shuffle(&mut rng);
    picked
        .into_iter()
        .map(|i| column.values[i].clone())
        .collect()
}

/// Samples every column of `table`, keyed by table id and column position.
pub fn sample_table(table: &Table, cap: usize, seed: u64) -> Vec<Vec<String>> {
    let tid = seed::hash_str(&table.id);
    table
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| sample_values(c, cap, seed::mix(seed, &[tid, i as u64])))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
    pub ratio: f64,
}

impl CorpusSplit {
    pub fn partition(&self, tables: &[Table]) -> (Vec<Table>, Vec<Table>) {
        let train: std::collections::HashSet<&str> =
            self.train.iter().map(String::as_str).collect();
        tables
            .iter()
            .cloned()
            .partition(|t| train.contains(t.id.as_str()))
    }
}

/// Unstratified random split. The train side gets `round(ratio * n)` tables,
/// clamped so neither side is empty.
pub fn split_corpus(tables: &[Table], ratio: f64, seed: u64) -> Result<CorpusSplit> {
    let ids: Vec<String> = tables.iter().map(|t| t.id.clone()).collect();
    split_ids(&ids, ratio, seed)
}

pub fn split_ids(ids: &[String], ratio: f64, seed: u64) -> Result<CorpusSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio {ratio} not in (0, 1)")));
    }
    if ids.len() < 2 {
        return Err(Error::EmptyCorpus(format!(
            "need at least 2 tables to split, got {}",
            ids.len()
        )));
    }
    let mut order = ids.to_vec();
    order.sort();
    order.dedup();
    if order.len() != ids.len() {
        return Err(Error::Config("duplicate table ids".into()));
    }
    let mut rng = seed::rng(seed, &[0x5_1e57]);
    order.shuffle(&mut rng);
    let n = order.len();
    let n_train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let mut test = order.split_off(n_train);
    let mut train = order;
    train.sort();
    test.sort();
    Ok(CorpusSplit {
        train,
        test,
        seed,
        ratio,
    })
}
