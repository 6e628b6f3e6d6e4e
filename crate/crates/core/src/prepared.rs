//! Columns sampled and tokenized once, ready for repeated forwards.

use crate::corpus::{sample_table, LabelVocabulary, Table};
use crate::encoder::{ColumnInput, Model, TokenId, Tokenizer};

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedColumn {
    pub values: Vec<String>,
    pub value_tokens: Vec<TokenId>,
    /// Gold label id, when the column has a label known to the vocabulary.
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTable {
    pub id: String,
    pub columns: Vec<PreparedColumn>,
    /// Fingerprint of the tokenizer that produced the value tokens.
    pub tokenizer_fingerprint: u64,
}

impl PreparedTable {
    pub fn new(
        table: &Table,
        vocabulary: &LabelVocabulary,
        tokenizer: &Tokenizer,
        value_cap: usize,
        seed: u64,
    ) -> Self {
        let samples = sample_table(table, value_cap, seed);
        let columns = table
            .columns
            .iter()
            .zip(samples)
            .map(|(c, values)| PreparedColumn {
                value_tokens: tokenizer.value_tokens(&values),
                label: c.label.as_deref().and_then(|l| vocabulary.id(l)),
                values,
            })
            .collect();
        PreparedTable {
            id: table.id.clone(),
            columns,
            tokenizer_fingerprint: tokenizer.fingerprint(),
        }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Gold labels, if every column has one.
    pub fn gold(&self) -> Option<Vec<usize>> {
        self.columns.iter().map(|c| c.label).collect()
    }

    pub fn values_only_input(&self, model: &Model, column: usize) -> ColumnInput {
        let mut input = model
            .tokenizer()
            .assemble(self.columns[column].value_tokens.clone(), None);
        input.fingerprint = self.tokenizer_fingerprint;
        input
    }

    /// Falls back to the values-only form for values-only models.
    pub fn contextual_input(&self, model: &Model, column: usize, context: &[usize]) -> ColumnInput {
        if model.hyperparameters().values_only {
            return self.values_only_input(model, column);
        }
        let vocab = model.vocabulary();
        let labels: Vec<&str> = context.iter().map(|&l| vocab.label(l)).collect();
        let tok = model.tokenizer();
        let mut input = tok.assemble(
            self.columns[column].value_tokens.clone(),
            Some(tok.context_tokens(&labels)),
        );
        input.fingerprint = self.tokenizer_fingerprint;
        input
    }
}

/// Samples and tokenizes every table for `model`.
pub fn prepare_tables(
    model: &Model,
    tables: &[Table],
    value_cap: usize,
    seed: u64,
) -> Vec<PreparedTable> {
    crate::parallel::map(tables, |t| {
        PreparedTable::new(t, model.vocabulary(), model.tokenizer(), value_cap, seed)
    })
}
