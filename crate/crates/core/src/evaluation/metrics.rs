use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::parse_numeric;

/// One evaluated column: its gold label and a full label ranking whose
/// head is the predicted label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub truth: usize,
    pub ranked: Vec<usize>,
}

impl PredictionRecord {
    /// `ranked` must be a permutation of `0..num_labels`.
    pub fn from_ranking(truth: usize, ranked: Vec<usize>) -> Result<Self> {
        let n = ranked.len();
        let mut seen = vec![false; n];
        for &l in &ranked {
            if l >= n || std::mem::replace(&mut seen[l], true) {
                return Err(Error::Mismatch(format!(
                    "ranking {ranked:?} is not a permutation"
                )));
            }
        }
        if truth >= n {
            return Err(Error::LabelOutOfRange {
                label: truth,
                size: n,
            });
        }
        Ok(PredictionRecord { truth, ranked })
    }

    /// Moves `predicted` to the head of a probability ranking. Constrained
    /// decoding may pick a label other than the most probable one.
    pub fn with_prediction(
        truth: usize,
        predicted: usize,
        probability_ranking: &[usize],
    ) -> Result<Self> {
        let mut ranked = Vec::with_capacity(probability_ranking.len());
        ranked.push(predicted);
        ranked.extend(
            probability_ranking
                .iter()
                .copied()
                .filter(|&l| l != predicted),
        );
        Self::from_ranking(truth, ranked)
    }

    pub fn predicted(&self) -> usize {
        self.ranked[0]
    }

    pub fn is_correct(&self) -> bool {
        self.predicted() == self.truth
    }

    /// 1-based rank of the gold label.
    pub fn rank(&self) -> usize {
        self.ranked
            .iter()
            .position(|&l| l == self.truth)
            .expect("ranking is a permutation")
            + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub label: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub count: usize,
    pub macro_p: f64,
    pub macro_r: f64,
    pub macro_f: f64,
    /// Equal to accuracy for single-label predictions.
    pub micro_f: f64,
    pub mrr: f64,
    pub topk: BTreeMap<usize, f64>,
    pub per_label: Vec<LabelScore>,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Macro scores average over labels that occur in the gold set; a label
/// never predicted has precision 0.
pub fn compute_metrics(records: &[PredictionRecord], num_labels: usize) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("prediction records"));
    }
    let mut tp = vec![0usize; num_labels];
    let mut predicted = vec![0usize; num_labels];
    let mut gold = vec![0usize; num_labels];
    let mut hits = vec![0usize; num_labels + 1];
    let mut rr = 0.0;
    for r in records {
        if r.ranked.len() != num_labels {
            return Err(Error::DimensionMismatch {
                what: "label ranking",
                expected: num_labels,
                actual: r.ranked.len(),
            });
        }
        let p = r.predicted();
        predicted[p] += 1;
        gold[r.truth] += 1;
        if p == r.truth {
            tp[p] += 1;
        }
        let rank = r.rank();
        hits[rank] += 1;
        rr += 1.0 / rank as f64;
    }
    let n = records.len() as f64;

    let per_label: Vec<LabelScore> = (0..num_labels)
        .filter(|&l| gold[l] > 0)
        .map(|l| {
            let precision = if predicted[l] > 0 {
                tp[l] as f64 / predicted[l] as f64
            } else {
                0.0
            };
            let recall = tp[l] as f64 / gold[l] as f64;
            LabelScore {
                label: l,
                precision,
                recall,
                f1: f1(precision, recall),
                support: gold[l],
            }
        })
        .collect();
    let k = per_label.len() as f64;
    let mean = |f: fn(&LabelScore) -> f64| per_label.iter().map(f).sum::<f64>() / k;

    let mut topk = BTreeMap::new();
    let mut cumulative = 0;
    for (k, &h) in hits.iter().enumerate().skip(1) {
        cumulative += h;
        topk.insert(k, cumulative as f64 / n);
    }

    Ok(MetricsReport {
        count: records.len(),
        macro_p: mean(|s| s.precision),
        macro_r: mean(|s| s.recall),
        macro_f: mean(|s| s.f1),
        micro_f: tp.iter().sum::<usize>() as f64 / n,
        mrr: rr / n,
        topk,
        per_label,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    String,
}

/// Numeric when strictly more than half of the cells parse as numbers.
pub fn column_kind(values: &[String]) -> ColumnKind {
    let numeric = values.iter().filter(|v| parse_numeric(v).is_some()).count();
    if 2 * numeric > values.len() {
        ColumnKind::Numeric
    } else {
        ColumnKind::String
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub numeric: Option<MetricsReport>,
    pub string: Option<MetricsReport>,
}

/// Metrics restricted to numeric and to string columns.
pub fn split_by_kind(
    records: &[PredictionRecord],
    kinds: &[ColumnKind],
    num_labels: usize,
) -> Result<KindReport> {
    if records.len() != kinds.len() {
        return Err(Error::Mismatch(format!(
            "{} records, {} column kinds",
            records.len(),
            kinds.len()
        )));
    }
    let subset = |kind| -> Result<Option<MetricsReport>> {
        let rs: Vec<PredictionRecord> = records
            .iter()
            .zip(kinds)
            .filter(|(_, &k)| k == kind)
            .map(|(r, _)| r.clone())
            .collect();
        if rs.is_empty() {
            Ok(None)
        } else {
            compute_metrics(&rs, num_labels).map(Some)
        }
    };
    Ok(KindReport {
        numeric: subset(ColumnKind::Numeric)?,
        string: subset(ColumnKind::String)?,
    })
}

/// (gold label, how often it occurs among the records, correct?) per record.
pub fn label_frequency_rows(records: &[PredictionRecord]) -> Vec<(usize, usize, bool)> {
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for r in records {
        *freq.entry(r.truth).or_default() += 1;
    }
    records
        .iter()
        .map(|r| (r.truth, freq[&r.truth], r.is_correct()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rec(truth: usize, ranked: &[usize]) -> PredictionRecord {
        PredictionRecord::from_ranking(truth, ranked.to_vec()).unwrap()
    }

    #[test]
    fn mrr_of_ranks_one_two_four() {
        let rs = [
            rec(0, &[0, 1, 2, 3]),
            rec(0, &[1, 0, 2, 3]),
            rec(0, &[1, 2, 3, 0]),
        ];
        let m = compute_metrics(&rs, 4).unwrap();
        assert!((m.mrr - 7.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions() {
        let rs = [rec(0, &[0, 1, 2]), rec(2, &[2, 0, 1]), rec(1, &[1, 2, 0])];
        let m = compute_metrics(&rs, 3).unwrap();
        for v in [m.macro_p, m.macro_r, m.macro_f, m.micro_f, m.mrr] {
            assert_eq!(v, 1.0);
        }
        assert!(m.topk.values().all(|&v| v == 1.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(compute_metrics(&[], 3).is_err());
        assert!(PredictionRecord::from_ranking(0, vec![0, 0, 1]).is_err());
        assert!(PredictionRecord::from_ranking(3, vec![0, 2, 1]).is_err());
        assert!(compute_metrics(&[rec(0, &[0, 1])], 3).is_err());
    }

    #[test]
    fn prediction_goes_first() {
        let r = PredictionRecord::with_prediction(1, 2, &[0, 1, 2]).unwrap();
        assert_eq!(r.ranked, vec![2, 0, 1]);
        assert_eq!(r.rank(), 3);
    }

    #[test]
    fn unpredicted_gold_label_has_zero_precision() {
        // label 1 is gold once, never predicted; label 2 is predicted but never gold
        let rs = [rec(0, &[0, 1, 2]), rec(1, &[2, 1, 0])];
        let m = compute_metrics(&rs, 3).unwrap();
        assert_eq!(m.per_label.len(), 2);
        assert_eq!(m.per_label[1].precision, 0.0);
        assert!((m.macro_p - 0.5).abs() < 1e-15);
        assert!((m.micro_f - 0.5).abs() < 1e-15);
    }

    #[test]
    fn column_kinds() {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(column_kind(&v(&["1", "2", "3"])), ColumnKind::Numeric);
        assert_eq!(column_kind(&v(&["a", "b"])), ColumnKind::String);
        assert_eq!(column_kind(&v(&["1", "x", "2"])), ColumnKind::Numeric);
        assert_eq!(column_kind(&v(&["1", "x"])), ColumnKind::String);
    }

    #[test]
    fn kind_split_partitions_records() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rs: Vec<_> = (0..40)
            .map(|_| rec(rng.gen_range(0..3), &[0, 1, 2]))
            .collect();
        let kinds: Vec<_> = (0..40)
            .map(|i| {
                if i % 3 == 0 {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::String
                }
            })
            .collect();
        let split = split_by_kind(&rs, &kinds, 3).unwrap();
        assert_eq!(
            split.numeric.unwrap().count + split.string.unwrap().count,
            40
        );
    }

    #[test]
    fn frequency_rows() {
        let rs = [rec(0, &[0, 1]), rec(0, &[1, 0]), rec(1, &[1, 0])];
        assert_eq!(
            label_frequency_rows(&rs),
            vec![(0, 2, true), (0, 2, false), (1, 1, true)]
        );
    }
}
