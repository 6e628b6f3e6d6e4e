use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::encoder::Model;
use crate::error::{Error, Result};
use crate::inference::{label_tables, InferenceOptions};
use crate::prepared::PreparedTable;
use crate::seed;

pub const DEFAULT_PERCENTAGES: [u32; 5] = [20, 40, 60, 80, 100];
pub const DEFAULT_REPEATS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub percentage: u32,
    pub mean: f64,
    /// Population standard deviation across repeats.
    pub std: f64,
    pub accuracies: Vec<f64>,
}

/// `ceil(percentage * width / 100)`, at least one column.
pub fn masked_count(width: usize, percentage: u32) -> usize {
    ((percentage as usize * width).div_ceil(100)).clamp(1, width)
}

/// Hides `masked_count` randomly chosen gold labels of a table.
pub fn mask_columns(gold: &[usize], percentage: u32, rng: &mut seed::Rng) -> Vec<Option<usize>> {
    let k = masked_count(gold.len(), percentage);
    let mut known: Vec<Option<usize>> = gold.iter().copied().map(Some).collect();
    for i in sample(rng, gold.len(), k) {
        known[i] = None;
    }
    known
}

/// Top-1 accuracy on masked columns when the remaining headers are given,
/// for each percentage, over `repeats` seeded maskings.
pub fn run_masked_sweep(
    model: &Model,
    tables: &[PreparedTable],
    percentages: &[u32],
    repeats: usize,
    options: &InferenceOptions,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    if let Some(p) = percentages.iter().find(|&&p| p == 0 || p > 100) {
        return Err(Error::Config(format!(
            "masking percentage {p} outside (0, 100]"
        )));
    }
    let gold: Vec<Vec<usize>> = tables
        .iter()
        .map(|t| {
            t.gold().ok_or_else(|| Error::InvalidTable {
                table: t.id.clone(),
                message: "masked sweep needs every gold label".into(),
            })
        })
        .collect::<Result<_>>()?;
    if gold.is_empty() {
        return Err(Error::EmptyInput("sweep tables"));
    }

    let mut points = Vec::with_capacity(percentages.len());
    for &p in percentages {
        let mut accuracies = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let mut rng = seed::rng(seed, &[0x5eeb, p as u64, r as u64]);
            let masks: Vec<Vec<Option<usize>>> =
                gold.iter().map(|g| mask_columns(g, p, &mut rng)).collect();
            let labeled = label_tables(model, tables, &masks, options)?;
            let (mut right, mut total) = (0usize, 0usize);
            for ((l, m), g) in labeled.iter().zip(&masks).zip(&gold) {
                for i in (0..g.len()).filter(|&i| m[i].is_none()) {
                    total += 1;
                    right += usize::from(l.labels[i] == g[i]);
                }
            }
            accuracies.push(right as f64 / total as f64);
        }
        let mean = accuracies.iter().sum::<f64>() / repeats as f64;
        let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / repeats as f64;
        points.push(SweepPoint {
            percentage: p,
            mean,
            std: var.sqrt(),
            accuracies,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_counts() {
        assert_eq!(masked_count(5, 20), 1);
        assert_eq!(masked_count(5, 100), 5);
        assert_eq!(masked_count(3, 20), 1);
        assert_eq!(masked_count(3, 40), 2);
        assert_eq!(masked_count(4, 60), 3);
        assert_eq!(masked_count(1, 20), 1);
    }

    #[test]
    fn full_masking_hides_everything() {
        let mut rng = seed::rng(1, &[]);
        assert_eq!(mask_columns(&[3, 1, 2], 100, &mut rng), vec![None; 3]);
        let m = mask_columns(&[3, 1, 2, 0, 4], 40, &mut rng);
        assert_eq!(m.iter().filter(|k| k.is_none()).count(), 2);
    }
}
