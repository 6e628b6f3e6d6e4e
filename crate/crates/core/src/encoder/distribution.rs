use serde::{Deserialize, Serialize};

/// A probability vector over the label vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    probs: Vec<f64>,
    argmax: usize,
    confidence: f64,
}

impl LabelDistribution {
    /// Wraps `probs`; the argmax breaks ties toward the lowest label id.
    pub fn from_probs(probs: Vec<f64>) -> Self {
        assert!(!probs.is_empty(), "distribution over an empty label set");
        let mut argmax = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[argmax] {
                argmax = i;
            }
        }
        let confidence = probs[argmax];
        LabelDistribution {
            probs,
            argmax,
            confidence,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn argmax(&self) -> usize {
        self.argmax
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn prob(&self, label: usize) -> f64 {
        self.probs[label]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Label ids by descending probability, ties by ascending id.
    pub fn ranked(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.probs.len()).collect();
        ids.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        ids
    }

    pub fn top_k(&self, k: usize) -> Vec<(usize, f64)> {
        self.ranked()
            .into_iter()
            .take(k)
            .map(|l| (l, self.probs[l]))
            .collect()
    }
}
