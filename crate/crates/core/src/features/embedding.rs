//! Embedding providers and the statistics layer over per-value embeddings.
//!
//! The built-in providers are feature-hashed: every n-gram or token is hashed
//! to a bucket and a sign. They need no training and are frozen by
//! construction. Trained providers can implement [`EmbeddingProvider`].

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::stats;
use crate::error::{Error, Result};
use crate::seed::hash_str;

/// Dimension of per-value character and word embeddings.
pub const VALUE_EMBEDDING_DIM: usize = 100;
/// Dimension of whole-column paragraph embeddings.
pub const PARAGRAPH_DIM: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    CharacterSequence,
    Word,
    Paragraph,
}

pub trait EmbeddingProvider: Send + Sync {
    fn kind(&self) -> EmbeddingKind;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;

    /// Whether the provider's vocabulary covers `text`. Only meaningful for
    /// word providers.
    fn in_vocabulary(&self, _text: &str) -> bool {
        false
    }
}

fn bucket_sign(feature: &str, dim: usize) -> (usize, f64) {
    let h = hash_str(feature);
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    ((h % dim as u64) as usize, sign)
}

/// Character 1..=3-grams, averaged over the n-gram count.
#[derive(Debug, Clone)]
pub struct CharNgramEmbedder {
    dim: usize,
}

impl CharNgramEmbedder {
    pub fn new(dim: usize) -> Self {
        CharNgramEmbedder { dim }
    }
}

impl Default for CharNgramEmbedder {
    fn default() -> Self {
        Self::new(VALUE_EMBEDDING_DIM)
    }
}

impl EmbeddingProvider for CharNgramEmbedder {
    fn kind(&self) -> EmbeddingKind {
        EmbeddingKind::CharacterSequence
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let chars: Vec<char> = text.chars().collect();
        let mut v = vec![0.0; self.dim];
        let mut count = 0usize;
        let mut gram = String::new();
        for n in 1..=3usize {
            for w in chars.windows(n) {
                gram.clear();
                gram.push(char::from(b'0' + n as u8));
                gram.extend(w);
                let (b, s) = bucket_sign(&gram, self.dim);
                v[b] += s;
                count += 1;
            }
        }
        if count > 0 {
            v.iter_mut().for_each(|x| *x /= count as f64);
        }
        v
    }
}

/// Character n-grams of a bracketed token, `<token>`, for n in `lo..=hi`,
/// plus the bracketed token itself.
pub fn subword_units(token: &str, lo: usize, hi: usize) -> Vec<String> {
    let bracketed: Vec<char> = std::iter::once('<')
        .chain(token.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = vec![bracketed.iter().collect::<String>()];
    for n in lo..=hi {
        for w in bracketed.windows(n) {
            out.push(w.iter().collect());
        }
    }
    out
}

/// fastText-style subword embedding: each whitespace token is the mean of
/// its hashed 3..=5-gram units, each value the mean of its tokens. The
/// vocabulary drives the in-vocabulary flag.
#[derive(Debug, Clone, Default)]
pub struct SubwordEmbedder {
    vocabulary: HashSet<String>,
}

impl SubwordEmbedder {
    pub fn new(vocabulary: HashSet<String>) -> Self {
        SubwordEmbedder { vocabulary }
    }

    /// Builds the vocabulary from every token of `values`.
    pub fn fit<'a>(values: impl IntoIterator<Item = &'a str>) -> Self {
        let vocabulary = values
            .into_iter()
            .flat_map(|v| v.split_whitespace().map(str::to_lowercase))
            .collect();
        SubwordEmbedder { vocabulary }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }
}

impl EmbeddingProvider for SubwordEmbedder {
    fn kind(&self) -> EmbeddingKind {
        EmbeddingKind::Word
    }

    fn dim(&self) -> usize {
        VALUE_EMBEDDING_DIM
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; VALUE_EMBEDDING_DIM];
        let tokens: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
        for t in &tokens {
            let units = subword_units(t, 3, 5);
            let w = 1.0 / (units.len() as f64 * tokens.len() as f64);
            for u in &units {
                let (b, s) = bucket_sign(u, VALUE_EMBEDDING_DIM);
                v[b] += s * w;
            }
        }
        v
    }

    fn in_vocabulary(&self, text: &str) -> bool {
        text.split_whitespace()
            .any(|t| self.vocabulary.contains(&t.to_lowercase()))
    }
}

/// Bag of hashed token unigrams, L2-normalized.
#[derive(Debug, Clone, Default)]
pub struct HashedParagraphEmbedder;

impl EmbeddingProvider for HashedParagraphEmbedder {
    fn kind(&self) -> EmbeddingKind {
        EmbeddingKind::Paragraph
    }

    fn dim(&self) -> usize {
        PARAGRAPH_DIM
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; PARAGRAPH_DIM];
        for t in text.split_whitespace() {
            let (b, s) = bucket_sign(&t.to_lowercase(), PARAGRAPH_DIM);
            v[b] += s;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Per-dimension mean, mode, median and variance of the value embeddings,
/// laid out as four 100-entry blocks. Word providers append an
/// in-vocabulary flag.
pub fn embedding_statistics(
    values: &[String],
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("embedding statistics"));
    }
    if provider.dim() != VALUE_EMBEDDING_DIM {
        return Err(Error::DimensionMismatch {
            what: "value embedding provider",
            expected: VALUE_EMBEDDING_DIM,
            actual: provider.dim(),
        });
    }
    let embeddings: Vec<Vec<f64>> = values.iter().map(|v| provider.embed(v)).collect();
    for e in &embeddings {
        if e.len() != VALUE_EMBEDDING_DIM {
            return Err(Error::DimensionMismatch {
                what: "embedding",
                expected: VALUE_EMBEDDING_DIM,
                actual: e.len(),
            });
        }
        check_finite(e, "value embedding")?;
    }
    let mut blocks: Vec<Vec<f64>> = (0..4)
        .map(|_| Vec::with_capacity(VALUE_EMBEDDING_DIM))
        .collect();
    let mut column = vec![0.0; embeddings.len()];
    for d in 0..VALUE_EMBEDDING_DIM {
        for (slot, e) in column.iter_mut().zip(&embeddings) {
            *slot = e[d];
        }
        blocks[0].push(stats::mean(&column));
        blocks[1].push(stats::mode(&column));
        blocks[2].push(stats::median(&column));
        blocks[3].push(stats::variance(&column));
    }
    let mut out: Vec<f64> = blocks.concat();
    if provider.kind() == EmbeddingKind::Word {
        let hit = values.iter().any(|v| provider.in_vocabulary(v));
        out.push(f64::from(u8::from(hit)));
    }
    Ok(out)
}

/// Embeds the whole column as one document.
pub fn paragraph_embedding(
    values: &[String],
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("paragraph embedding"));
    }
    if provider.kind() != EmbeddingKind::Paragraph {
        return Err(Error::Config(
            "paragraph embedding needs a paragraph provider".into(),
        ));
    }
    if provider.dim() != PARAGRAPH_DIM {
        return Err(Error::DimensionMismatch {
            what: "paragraph provider",
            expected: PARAGRAPH_DIM,
            actual: provider.dim(),
        });
    }
    let v = provider.embed(&values.join("\n"));
    if v.len() != PARAGRAPH_DIM {
        return Err(Error::DimensionMismatch {
            what: "paragraph embedding",
            expected: PARAGRAPH_DIM,
            actual: v.len(),
        });
    }
    check_finite(&v, "paragraph embedding")?;
    Ok(v)
}
