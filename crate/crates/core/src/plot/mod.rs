//! Plot preparation and rendering.
//!
//! Long series are bucketed by the smallest power of ten that brings them
//! under `max_points`, keeping per-bucket min/max as a dispersion band.
//! [`render_html`] embeds the prepared data as a JSON island read by the
//! interactive renderer; [`render_image`] draws a static SVG or PNG.
//!
//! # Data island, version 1
//!
//! `<script type="application/json" id="chronoseries-data">` holds:
//!
//! - `version`: `"1"`.
//! - `tz`: IANA zone for wall-clock display.
//! - `kind`: `"points"` or `"slots"`.
//! - `factor`: elements per bucket, 1 when not aggregated.
//! - `timestamps`: epoch milliseconds of each bucket's first element.
//! - `timestamps_end`: epoch milliseconds of each bucket's last element.
//! - `labels`: `[{name, values, band}]`; `band` is `{min, max}` or `null`.
//! - `indexes`: `[{name, values}]`; a value is `null` where not computed.
//!
//! All arrays have one entry per bucket.

mod html;
mod image;

use log::info;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{Element, ElementKind, TimeSeries, ANOMALY};
use crate::timemath::TimeZone;

pub use self::html::{render_html, render_html_with, to_html, to_html_with, RENDERER_ELEMENT_ID};
pub use self::image::{render_image, to_png, to_svg, ImageOptions};

pub const ISLAND_VERSION: &str = "1";
pub const ISLAND_ID: &str = "chronoseries-data";
pub const DEFAULT_MAX_POINTS: usize = 10_000;

/// Per-bucket spread of the original values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelTrack {
    pub name: String,
    pub values: Vec<f64>,
    pub band: Option<Band>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexTrack {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

/// Everything needed to draw a series.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub tz: TimeZone,
    pub kind: ElementKind,
    pub factor: usize,
    /// Epoch seconds of each bucket's first element.
    pub start: Vec<f64>,
    /// Epoch seconds of each bucket's last element.
    pub end: Vec<f64>,
    pub labels: Vec<LabelTrack>,
    pub indexes: Vec<IndexTrack>,
}

/// Smallest power of ten bringing `len` elements to at most `max_points` buckets.
pub fn aggregation_factor(len: usize, max_points: usize) -> usize {
    let max_points = max_points.max(1);
    let mut factor = 1usize;
    while len.div_ceil(factor) > max_points {
        factor *= 10;
    }
    factor
}

/// Buckets `series` for plotting.
pub fn prepare<E: Element>(series: &TimeSeries<E>, max_points: usize) -> Result<PlotSpec> {
    if series.is_empty() {
        return Err(Error::NotEnoughData("cannot plot an empty series".into()));
    }
    let factor = aggregation_factor(series.len(), max_points);
    if factor > 1 {
        info!("Aggregating by \"{factor}\" for improved plotting");
    }
    let buckets: Vec<&[E]> = series.elements().chunks(factor).collect();
    let start = buckets.iter().map(|b| b[0].t().0).collect();
    let end = buckets.iter().map(|b| b[b.len() - 1].t().0).collect();
    let labels = series
        .labels()
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let column = |b: &&[E]| b.iter().map(|e| e.data()[k]).collect::<Vec<f64>>();
            let mut values = Vec::with_capacity(buckets.len());
            let mut band = Band { min: Vec::new(), max: Vec::new() };
            for b in &buckets {
                let col = column(b);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                values.push((col.iter().sum::<f64>() / col.len() as f64).clamp(lo, hi));
                band.min.push(lo);
                band.max.push(hi);
            }
            let band = (factor > 1).then_some(band);
            LabelTrack { name: name.clone(), values, band }
        })
        .collect();
    let indexes = series
        .index_names()
        .into_iter()
        .map(|name| {
            let values = buckets
                .iter()
                .map(|b| {
                    let defined: Vec<f64> = b.iter().filter_map(|e| e.indexes().get(&name)).collect();
                    if defined.is_empty() {
                        None
                    } else if name == ANOMALY {
                        Some(defined.iter().copied().fold(0.0, f64::max))
                    } else {
                        Some(defined.iter().sum::<f64>() / defined.len() as f64)
                    }
                })
                .collect();
            IndexTrack { name, values }
        })
        .collect();
    Ok(PlotSpec { tz: series.tz(), kind: E::KIND, factor, start, end, labels, indexes })
}

#[derive(Serialize)]
struct Island<'a> {
    version: &'static str,
    tz: &'static str,
    kind: &'static str,
    factor: usize,
    timestamps: Vec<f64>,
    timestamps_end: Vec<f64>,
    labels: &'a [LabelTrack],
    indexes: &'a [IndexTrack],
}

impl PlotSpec {
    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    /// The data island as JSON.
    pub fn island_json(&self) -> Result<String> {
        let ms = |v: &[f64]| v.iter().map(|t| t * 1000.0).collect();
        let island = Island {
            version: ISLAND_VERSION,
            tz: self.tz.name(),
            kind: match self.kind {
                ElementKind::Point => "points",
                ElementKind::Slot => "slots",
            },
            factor: self.factor,
            timestamps: ms(&self.start),
            timestamps_end: ms(&self.end),
            labels: &self.labels,
            indexes: &self.indexes,
        };
        Ok(serde_json::to_string(&island)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{DataIndexes, DataTimePoint, PointSeries};

    fn series(n: usize) -> PointSeries {
        TimeSeries::from_elements(
            ["v"],
            (0..n).map(|i| {
                let mut ix = DataIndexes::new();
                ix.set(ANOMALY, if i == 3 { 0.9 } else { 0.1 }).unwrap();
                DataTimePoint::new(i as f64 * 60.0, vec![(i % 7) as f64]).with_indexes(ix)
            }),
            TimeZone::UTC,
        )
        .unwrap()
    }

    #[test]
    fn factor_rule() {
        assert_eq!(aggregation_factor(14000, 10_000), 10);
        assert_eq!(aggregation_factor(2519, 10_000), 1);
        assert_eq!(aggregation_factor(10_000, 10_000), 1);
        assert_eq!(aggregation_factor(10_001, 10_000), 10);
        assert_eq!(aggregation_factor(2_000_000, 10_000), 1000);
    }

    #[test]
    fn buckets_carry_bands_and_indexes() {
        let spec = prepare(&series(25), 3).unwrap();
        assert_eq!((spec.factor, spec.len()), (10, 3));
        assert_eq!((spec.start[0], spec.end[2]), (0.0, 24.0 * 60.0));
        let band = spec.labels[0].band.as_ref().unwrap();
        assert_eq!((band.min[0], band.max[0]), (0.0, 6.0));
        assert_eq!(spec.indexes[0].values[0], Some(0.9));
        let identity = prepare(&series(9), DEFAULT_MAX_POINTS).unwrap();
        assert_eq!(identity.factor, 1);
        assert!(identity.labels[0].band.is_none());
        assert_eq!(identity.labels[0].values, series(9).iter().map(|p| p.data[0]).collect::<Vec<_>>());
    }
}
