mod common;

use chronoseries::{ops, Element};
use common::{arb_points, hourly};
use proptest::prelude::*;

#[test]
fn merge_then_filter_recovers_inputs() {
    let a = hourly(&["a"], 0.0, &(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>());
    let b = hourly(&["b"], 0.0, &(0..10).map(|i| vec![-(i as f64)]).collect::<Vec<_>>());
    let m = ops::merge(&[&a, &b]).unwrap();
    assert_eq!(ops::filter(&m, &["b"]).unwrap(), b);
    assert_eq!(ops::filter(&m, &["a"]).unwrap(), a);
    assert!(ops::filter(&m, &["c"]).is_err());
}

#[test]
fn merge_rejects_mismatched_grids() {
    let a = hourly(&["a"], 0.0, &vec![vec![1.0]; 5]);
    let b = hourly(&["b"], 1800.0, &vec![vec![1.0]; 5]);
    assert!(ops::merge(&[&a, &b]).is_err());
    let c = hourly(&["c"], 0.0, &vec![vec![1.0]; 5]).change_tz(common::tz("Europe/Rome"));
    assert!(ops::merge(&[&a, &c]).is_err());
}

#[test]
fn slice_is_half_open() {
    let s = hourly(&["v"], 0.0, &(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>());
    let part = ops::slice(&s, 3600.0, 4.0 * 3600.0).unwrap();
    assert_eq!(part.iter().map(|p| p.data[0]).collect::<Vec<_>>(), [1.0, 2.0, 3.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn diff_undoes_csum(series in arb_points(30)) {
        let back = ops::diff(&ops::csum(&series).unwrap()).unwrap();
        for (a, b) in back.iter().zip(series.iter().skip(1)) {
            prop_assert_eq!(a.t(), b.t());
            prop_assert!((a.data[0] - b.data[0]).abs() <= 1e-9 * (1.0 + b.data[0].abs()) * series.len() as f64 * 1000.0);
        }
    }

    #[test]
    fn normalize_spans_unit_interval(series in arb_points(30)) {
        if let Ok(n) = ops::normalize(&series) {
            let lo = ops::min(&n).unwrap()["v"];
            let hi = ops::max(&n).unwrap()["v"];
            prop_assert_eq!((lo, hi), (0.0, 1.0));
        }
    }

    #[test]
    fn stats_bracket_the_mean(series in arb_points(30)) {
        let (lo, hi, mean) = (ops::min(&series).unwrap()["v"], ops::max(&series).unwrap()["v"], ops::avg(&series).unwrap()["v"]);
        prop_assert!(lo <= mean + 1e-9 && mean <= hi + 1e-9);
    }
}
