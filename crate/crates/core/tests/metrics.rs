use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schemalabel::evaluation::{compute_metrics, PredictionRecord};

/// Plain per-label counting, written from the metric definitions.
struct Naive {
    macro_p: f64,
    macro_r: f64,
    macro_f: f64,
    micro_f: f64,
    mrr: f64,
    topk: Vec<f64>,
}

fn naive(pairs: &[(usize, Vec<usize>)], labels: usize) -> Naive {
    let (mut sp, mut sr, mut sf, mut k) = (0.0, 0.0, 0.0, 0.0);
    for l in 0..labels {
        let gold = pairs.iter().filter(|(t, _)| *t == l).count();
        if gold == 0 {
            continue;
        }
        let pred = pairs.iter().filter(|(_, r)| r[0] == l).count();
        let tp = pairs.iter().filter(|(t, r)| *t == l && r[0] == l).count();
        let p = if pred == 0 {
            0.0
        } else {
            tp as f64 / pred as f64
        };
        let r = tp as f64 / gold as f64;
        let f = if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        };
        sp += p;
        sr += r;
        sf += f;
        k += 1.0;
    }
    let n = pairs.len() as f64;
    let rank = |(t, r): &(usize, Vec<usize>)| r.iter().position(|x| x == t).unwrap() + 1;
    Naive {
        macro_p: sp / k,
        macro_r: sr / k,
        macro_f: sf / k,
        micro_f: pairs.iter().filter(|(t, r)| r[0] == *t).count() as f64 / n,
        mrr: pairs.iter().map(|p| 1.0 / rank(p) as f64).sum::<f64>() / n,
        topk: (1..=labels)
            .map(|k| pairs.iter().filter(|p| rank(p) <= k).count() as f64 / n)
            .collect(),
    }
}

fn check(pairs: &[(usize, Vec<usize>)], labels: usize) {
    let records: Vec<_> = pairs
        .iter()
        .map(|(t, r)| PredictionRecord::from_ranking(*t, r.clone()).unwrap())
        .collect();
    let got = compute_metrics(&records, labels).unwrap();
    let want = naive(pairs, labels);
    for (g, w) in [
        (got.macro_p, want.macro_p),
        (got.macro_r, want.macro_r),
        (got.macro_f, want.macro_f),
        (got.micro_f, want.micro_f),
        (got.mrr, want.mrr),
    ] {
        assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
    }
    for (k, w) in want.topk.iter().enumerate() {
        assert!((got.topk[&(k + 1)] - w).abs() <= 1e-12);
    }
}

fn random_pairs(rng: &mut ChaCha8Rng, n: usize, labels: usize) -> Vec<(usize, Vec<usize>)> {
    (0..n)
        .map(|_| {
            let mut ranking: Vec<usize> = (0..labels).collect();
            ranking.shuffle(rng);
            (rng.gen_range(0..labels), ranking)
        })
        .collect()
}

#[test]
fn confusion_matrix_instance() {
    // rows: gold, columns: predicted
    let matrix = [[2, 1, 0], [0, 1, 1], [1, 0, 2]];
    let mut pairs = Vec::new();
    for (gold, row) in matrix.iter().enumerate() {
        for (pred, &count) in row.iter().enumerate() {
            let mut ranking = vec![pred];
            ranking.extend((0..3).filter(|&l| l != pred));
            pairs.extend(std::iter::repeat_n((gold, ranking), count));
        }
    }
    check(&pairs, 3);
    let records: Vec<_> = pairs
        .iter()
        .map(|(t, r)| PredictionRecord::from_ranking(*t, r.clone()).unwrap())
        .collect();
    let m = compute_metrics(&records, 3).unwrap();
    assert!((m.micro_f - 5.0 / 8.0).abs() < 1e-15);
    // P = (2/3, 1/2, 2/3), R = (2/3, 1/2, 2/3)
    assert!((m.macro_p - 11.0 / 18.0).abs() < 1e-12);
    assert!((m.macro_f - 11.0 / 18.0).abs() < 1e-12);
}

#[test]
fn random_instances_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let labels = rng.gen_range(2..=6);
        let n = rng.gen_range(1..=50);
        check(&random_pairs(&mut rng, n, labels), labels);
    }
}

proptest! {
    #[test]
    fn report_invariants(seed: u64, labels in 2usize..=6, n in 1usize..=40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = random_pairs(&mut rng, n, labels);
        let records: Vec<_> = pairs
            .iter()
            .map(|(t, r)| PredictionRecord::from_ranking(*t, r.clone()).unwrap())
            .collect();
        let m = compute_metrics(&records, labels).unwrap();
        let top: Vec<f64> = m.topk.values().copied().collect();
        prop_assert!(top.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(top[labels - 1], 1.0);
        prop_assert_eq!(m.micro_f, m.topk[&1]);
        for v in [m.macro_p, m.macro_r, m.macro_f, m.micro_f, m.mrr] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
