//! Hashed subword tokenization and input serialization.
//!
//! Text is lowercased and split on whitespace. Each word contributes its
//! bracketed form `<word>` and every character 3..=5-gram of it; each unit is
//! hashed into `buckets` ids, the first two of which are reserved for the
//! separator markers. Context labels additionally contribute a whole-label
//! id and a position-tagged id so the model can see their order.

use serde::{Deserialize, Serialize};

use crate::features::subword_units;
use crate::seed::hash_str;

pub type TokenId = u32;

pub const CLS: TokenId = 0;
pub const SEP: TokenId = 1;
const RESERVED: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub buckets: u32,
    pub min_gram: usize,
    pub max_gram: usize,
    pub max_sequence_length: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            buckets: 1 << 16,
            min_gram: 3,
            max_gram: 5,
            max_sequence_length: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputForm {
    ValuesOnly,
    Contextual,
}

/// A serialized encoder input: `CLS values SEP context SEP`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnInput {
    pub form: InputForm,
    pub value_tokens: Vec<TokenId>,
    pub context_tokens: Vec<TokenId>,
    pub fingerprint: u64,
}

impl ColumnInput {
    pub fn sequence(&self) -> Vec<TokenId> {
        let mut s = Vec::with_capacity(self.len());
        s.push(CLS);
        s.extend(&self.value_tokens);
        s.push(SEP);
        s.extend(&self.context_tokens);
        s.push(SEP);
        s
    }

    pub fn len(&self) -> usize {
        self.value_tokens.len() + self.context_tokens.len() + 3
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenizer {
    config: TokenizerConfig,
    fingerprint: u64,
}

impl Tokenizer {
    pub fn new(config: TokenizerConfig) -> Self {
        let fingerprint = hash_str(&format!(
            "hashed-subword-v1|{}|{}|{}|{}",
            config.buckets, config.min_gram, config.max_gram, config.max_sequence_length
        ));
        Tokenizer {
            config,
            fingerprint,
        }
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn id(&self, unit: &str) -> TokenId {
        RESERVED + (hash_str(unit) % u64::from(self.config.buckets - RESERVED)) as u32
    }

    fn push_text(&self, text: &str, out: &mut Vec<TokenId>) {
        for word in text.split_whitespace() {
            let word = word.to_lowercase();
            for unit in subword_units(&word, self.config.min_gram, self.config.max_gram) {
                out.push(self.id(&unit));
            }
        }
    }

    /// Tokens of the value segment, before any truncation.
    pub fn value_tokens(&self, values: &[String]) -> Vec<TokenId> {
        let mut out = Vec::new();
        for v in values {
            self.push_text(v, &mut out);
        }
        out
    }

    /// Tokens of the context segment, preserving label order.
    pub fn context_tokens<S: AsRef<str>>(&self, labels: &[S]) -> Vec<TokenId> {
        let mut out = Vec::new();
        for (pos, label) in labels.iter().enumerate() {
            let label = label.as_ref();
            out.push(self.id(&format!("\u{1}label:{label}")));
            out.push(self.id(&format!("\u{1}slot{pos}:{label}")));
            self.push_text(label, &mut out);
        }
        out
    }

    /// Builds the input from pre-tokenized segments, cutting the value
    /// segment first and the context segment only if it alone overflows.
    pub fn assemble(
        &self,
        mut value_tokens: Vec<TokenId>,
        context: Option<Vec<TokenId>>,
    ) -> ColumnInput {
        let form = if context.is_some() {
            InputForm::Contextual
        } else {
            InputForm::ValuesOnly
        };
        let mut context_tokens = context.unwrap_or_default();
        let budget = self.config.max_sequence_length.saturating_sub(3);
        context_tokens.truncate(budget);
        value_tokens.truncate(budget - context_tokens.len());
        ColumnInput {
            form,
            value_tokens,
            context_tokens,
            fingerprint: self.fingerprint,
        }
    }

    pub fn serialize_input<S: AsRef<str>>(
        &self,
        values: &[String],
        context: Option<&[S]>,
    ) -> ColumnInput {
        self.assemble(
            self.value_tokens(values),
            context.map(|c| self.context_tokens(c)),
        )
    }
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(TokenizerConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn values_only_form() {
        let t = Tokenizer::default();
        let input = t.serialize_input::<&str>(&vals(&["Paris", "Lyon"]), None);
        assert_eq!(input.form, InputForm::ValuesOnly);
        assert!(input.context_tokens.is_empty());
        // "<paris>": 1 + 5 + 4 + 3 units, "<lyon>": 1 + 4 + 3 + 2
        assert_eq!(input.value_tokens.len(), 13 + 10);
        let seq = input.sequence();
        assert_eq!(seq[0], CLS);
        assert_eq!(&seq[seq.len() - 2..], &[SEP, SEP]);
        assert!(input.value_tokens.iter().all(|&id| id >= 2 && id < 1 << 16));
    }

    #[test]
    fn context_order_is_preserved() {
        let t = Tokenizer::default();
        let a = t.serialize_input(&vals(&["Paris"]), Some(&["player", "team"]));
        let b = t.serialize_input(&vals(&["Paris"]), Some(&["team", "player"]));
        assert_eq!(a.form, InputForm::Contextual);
        assert_eq!(a.value_tokens, b.value_tokens);
        assert_ne!(a.context_tokens, b.context_tokens);
        let player = t.context_tokens(&["player"]);
        assert_eq!(a.context_tokens[0], player[0]);
        assert_eq!(a.context_tokens[1], player[1]);
    }

    #[test]
    fn overlong_values_truncate_before_context() {
        let t = Tokenizer::default();
        let many: Vec<String> = (0..10_000).map(|i| format!("value{i}")).collect();
        let ctx = ["nationality", "birth date"];
        let full_ctx = t.context_tokens(&ctx);
        let input = t.serialize_input(&many, Some(&ctx));
        assert_eq!(input.len(), 256);
        assert_eq!(input.context_tokens, full_ctx);
        assert_eq!(input.value_tokens.len(), 253 - full_ctx.len());

        let tiny = Tokenizer::new(TokenizerConfig {
            max_sequence_length: 8,
            ..TokenizerConfig::default()
        });
        let input = tiny.serialize_input(&many, Some(&ctx));
        assert!(input.value_tokens.is_empty());
        assert_eq!(input.context_tokens.len(), 5);
        assert_eq!(input.context_tokens, full_ctx[..5]);
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = Tokenizer::default();
        let b = Tokenizer::new(TokenizerConfig {
            buckets: 1 << 12,
            ..TokenizerConfig::default()
        });
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), Tokenizer::default().fingerprint());
    }
}
