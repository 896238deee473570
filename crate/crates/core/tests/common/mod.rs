#![allow(dead_code)]

use std::path::PathBuf;

use chronoseries::io::{self, CsvOptions};
use chronoseries::{DataIndexes, DataTimePoint, PointSeries, TimeSeries, TimeUnit, TimeZone};
use proptest::prelude::*;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data").join(name)
}

pub fn humitemp() -> PointSeries {
    io::from_csv(data_path("humitemp.csv"), &CsvOptions::default()).expect("humitemp fixture loads")
}

pub fn unit(text: &str) -> TimeUnit {
    text.parse().expect("valid unit")
}

pub fn tz(name: &str) -> TimeZone {
    name.parse().expect("known zone")
}

/// Hourly points from `start`, one per value row.
pub fn hourly(labels: &[&str], start: f64, rows: &[Vec<f64>]) -> PointSeries {
    let points = rows.iter().enumerate().map(|(i, v)| DataTimePoint::new(start + 3600.0 * i as f64, v.clone()));
    TimeSeries::from_elements(labels.iter().copied(), points, TimeZone::UTC)
        .expect("valid series")
        .with_resolution(unit("1h"))
        .expect("hourly")
}

/// `days` days of hourly data repeating a 24-step profile on two labels.
pub fn periodic(days: usize) -> PointSeries {
    let rows: Vec<Vec<f64>> = (0..days * 24)
        .map(|i| {
            let h = (i % 24) as f64;
            vec![10.0 + h, 50.0 - (h - 12.0).abs()]
        })
        .collect();
    hourly(&["a", "b"], 1_546_300_800.0, &rows)
}

/// Irregular point series with strictly increasing integer timestamps.
pub fn arb_points(max_len: usize) -> impl Strategy<Value = PointSeries> {
    (2..=max_len)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(1u32..200, n - 1),
                prop::collection::vec(-1000.0f64..1000.0, n),
                prop::collection::vec(prop::option::of(0.0f64..=1.0), n),
            )
        })
        .prop_map(|(deltas, values, losses)| {
            let mut t = 1_000_000.0;
            let mut points = Vec::with_capacity(values.len());
            for (i, v) in values.into_iter().enumerate() {
                if i > 0 {
                    t += f64::from(deltas[i - 1]);
                }
                let mut ix = DataIndexes::new();
                if let Some(dl) = losses[i] {
                    ix.set("data_loss", dl).expect("in range");
                }
                points.push(DataTimePoint::new(t, vec![v]).with_indexes(ix));
            }
            TimeSeries::from_elements(["v"], points, TimeZone::UTC).expect("increasing")
        })
}
