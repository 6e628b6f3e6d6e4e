//! Hand-crafted column features for the feature-based baselines.
//!
//! | category             | dim  | offset in `All` |
//! |----------------------|------|-----------------|
//! | global statistics    | 52   | 0               |
//! | character distrib.   | 960  | 52              |
//! | character embeddings | 400  | 1012            |
//! | word embeddings      | 401  | 1412            |
//! | paragraph embeddings | 400  | 1813            |
//! | all                  | 2213 | -               |

mod chars;
pub mod dump;
mod embedding;
mod global;
pub mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chars::{character_distributions, charset, CHARSET_LEN, CHAR_DIST_DIM};
pub use embedding::{
    embedding_statistics, paragraph_embedding, subword_units, CharNgramEmbedder, EmbeddingKind,
    EmbeddingProvider, HashedParagraphEmbedder, SubwordEmbedder, PARAGRAPH_DIM,
    VALUE_EMBEDDING_DIM,
};
pub use global::{
    content_histogram, content_histogram_fft, dft_magnitudes, global_statistics, parse_numeric,
    GLOBAL_STATS_DIM, HISTOGRAM_BINS, MAX_NUMERIC_MAGNITUDE,
};
pub use stats::StatSet10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureCategory {
    GlobalStats,
    CharDist,
    CharEmb,
    WordEmb,
    ParaEmb,
    All,
}

impl FeatureCategory {
    pub const PARTS: [FeatureCategory; 5] = [
        FeatureCategory::GlobalStats,
        FeatureCategory::CharDist,
        FeatureCategory::CharEmb,
        FeatureCategory::WordEmb,
        FeatureCategory::ParaEmb,
    ];

    pub const fn dim(self) -> usize {
        match self {
            FeatureCategory::GlobalStats => 52,
            FeatureCategory::CharDist => 960,
            FeatureCategory::CharEmb => 400,
            FeatureCategory::WordEmb => 401,
            FeatureCategory::ParaEmb => 400,
            FeatureCategory::All => 2213,
        }
    }

    /// Start of this category inside the concatenated `All` vector.
    pub fn offset(self) -> usize {
        match self {
            FeatureCategory::All => 0,
            part => Self::PARTS
                .iter()
                .take_while(|&&p| p != part)
                .map(|p| p.dim())
                .sum(),
        }
    }

    pub fn code(self) -> u8 {
        match self {
            FeatureCategory::GlobalStats => 0,
            FeatureCategory::CharDist => 1,
            FeatureCategory::CharEmb => 2,
            FeatureCategory::WordEmb => 3,
            FeatureCategory::ParaEmb => 4,
            FeatureCategory::All => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::PARTS
            .iter()
            .copied()
            .chain(std::iter::once(FeatureCategory::All))
            .find(|c| c.code() == code)
    }
}

/// A feature vector with its declared category. Construction enforces the
/// category dimension and finiteness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    category: FeatureCategory,
    data: Vec<f64>,
}

impl FeatureVector {
    pub fn new(category: FeatureCategory, data: Vec<f64>) -> Result<Self> {
        if data.len() != category.dim() {
            return Err(Error::DimensionMismatch {
                what: "feature vector",
                expected: category.dim(),
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("{category:?} feature entry {i}")));
        }
        Ok(FeatureVector { category, data })
    }

    pub fn category(&self) -> FeatureCategory {
        self.category
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.data
    }

    /// Slice of one part of an `All` vector.
    pub fn part(&self, category: FeatureCategory) -> Option<&[f64]> {
        match self.category {
            c if c == category => Some(&self.data),
            FeatureCategory::All => {
                let o = category.offset();
                Some(&self.data[o..o + category.dim()])
            }
            _ => None,
        }
    }
}

/// The three embedding providers used by the embedding categories.
pub struct FeatureProviders {
    pub character: Box<dyn EmbeddingProvider>,
    pub word: Box<dyn EmbeddingProvider>,
    pub paragraph: Box<dyn EmbeddingProvider>,
}

impl FeatureProviders {
    /// Built-in hashed providers with the word vocabulary taken from `values`.
    pub fn builtin<'a>(vocabulary_source: impl IntoIterator<Item = &'a str>) -> Self {
        FeatureProviders {
            character: Box::new(CharNgramEmbedder::default()),
            word: Box::new(SubwordEmbedder::fit(vocabulary_source)),
            paragraph: Box::new(HashedParagraphEmbedder),
        }
    }
}

/// Extracts one category from a column's sampled values.
pub fn extract(
    category: FeatureCategory,
    values: &[String],
    providers: &FeatureProviders,
) -> Result<FeatureVector> {
    let data = match category {
        FeatureCategory::GlobalStats => global_statistics(values)?,
        FeatureCategory::CharDist => character_distributions(values)?,
        FeatureCategory::CharEmb => {
            if providers.character.kind() != EmbeddingKind::CharacterSequence {
                return Err(Error::Config(
                    "character provider has the wrong kind".into(),
                ));
            }
            embedding_statistics(values, providers.character.as_ref())?
        }
        FeatureCategory::WordEmb => {
            if providers.word.kind() != EmbeddingKind::Word {
                return Err(Error::Config("word provider has the wrong kind".into()));
            }
            embedding_statistics(values, providers.word.as_ref())?
        }
        FeatureCategory::ParaEmb => paragraph_embedding(values, providers.paragraph.as_ref())?,
        FeatureCategory::All => return all_features(values, providers),
    };
    FeatureVector::new(category, data)
}

/// All five categories concatenated, 2213 entries.
pub fn all_features(values: &[String], providers: &FeatureProviders) -> Result<FeatureVector> {
    let mut data = Vec::with_capacity(FeatureCategory::All.dim());
    for part in FeatureCategory::PARTS {
        data.extend(extract(part, values, providers)?.into_inner());
    }
    FeatureVector::new(FeatureCategory::All, data)
}
