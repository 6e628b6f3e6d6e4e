use proptest::prelude::*;

use schemalabel::features::{all_features, extract, FeatureCategory, FeatureProviders};

fn providers() -> FeatureProviders {
    FeatureProviders::builtin(["alpha", "beta", "gamma", "12", "3.5"])
}

fn column() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop_oneof![
            "[a-zA-Z ]{0,12}",
            "-?[0-9]{1,5}(\\.[0-9]{1,3})?",
            "[\\t -~]{0,10}",
            Just(String::new()),
            Just("N/A".to_string()),
        ],
        1..30,
    )
}

proptest! {
    #[test]
    fn row_order_does_not_matter(values in column(), rotate in 0usize..30) {
        let p = providers();
        let mut shuffled = values.clone();
        let k = rotate % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let a = all_features(&values, &p).unwrap();
        let b = all_features(&shuffled, &p).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn categories_are_slices_of_all(values in column()) {
        let p = providers();
        let all = all_features(&values, &p).unwrap();
        for part in FeatureCategory::PARTS {
            let single = extract(part, &values, &p).unwrap();
            prop_assert_eq!(all.part(part).unwrap(), single.data());
        }
    }
}

#[test]
fn degenerate_columns_stay_finite() {
    let p = providers();
    let cases: Vec<Vec<String>> = vec![
        vec![String::new(); 5],
        vec!["7".into(); 9],
        vec!["same".into(); 3],
        vec!["x".into()],
        vec![
            "1e308".into(),
            "-1e308".into(),
            "1e100".into(),
            "-1e100".into(),
        ],
    ];
    for values in cases {
        let v = all_features(&values, &p).unwrap();
        assert_eq!(v.len(), 2213);
        assert!(v.data().iter().all(|x| x.is_finite()), "{values:?}");
    }
}

#[test]
fn empty_column_is_rejected() {
    assert!(all_features(&[], &providers()).is_err());
}
