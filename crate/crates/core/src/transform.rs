//! Resampling and aggregation with data-loss tracking.
//!
//! Each source point is valid for half the auto-detected sampling interval
//! on each side, clipped at the midpoint to its neighbours. Target windows
//! take their values from the validity regions they overlap and impute the
//! uncovered parts by interpolation. The uncovered fraction becomes the
//! target's `data_loss`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::info;

use crate::error::{Error, Result};
use crate::series::{DataIndexes, DataTimePoint, DataTimeSlot, Element, PointSeries, SlotSeries, DATA_LOSS};
use crate::timemath::{ceil, floor, shift, TimeUnit, TimeZone, Timestamp};

/// How uncovered portions of a window are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Linear,
    /// Holds the last value before the gap.
    Previous,
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Interpolation::Linear),
            "previous" => Ok(Interpolation::Previous),
            _ => Err(Error::UnknownName { what: "interpolation method", name: s.to_string() }),
        }
    }
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpolation::Linear => "linear",
            Interpolation::Previous => "previous",
        })
    }
}

/// Per-slot statistic computed by [`aggregate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggOp {
    Avg,
    Min,
    Max,
    Sum,
}

impl AggOp {
    pub fn name(self) -> &'static str {
        match self {
            AggOp::Avg => "avg",
            AggOp::Min => "min",
            AggOp::Max => "max",
            AggOp::Sum => "sum",
        }
    }

    /// Parses a comma-separated list such as `min,max,avg`.
    pub fn parse_list(text: &str) -> Result<Vec<AggOp>> {
        text.split(',').map(|s| s.trim().parse()).collect()
    }
}

impl FromStr for AggOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg" => Ok(AggOp::Avg),
            "min" => Ok(AggOp::Min),
            "max" => Ok(AggOp::Max),
            "sum" => Ok(AggOp::Sum),
            _ => Err(Error::UnknownName { what: "aggregation operation", name: s.to_string() }),
        }
    }
}

impl fmt::Display for AggOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Validity regions of a point series.
#[derive(Debug, Clone)]
pub struct Coverage {
    t: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// What a window sees of the source: overlapped validity regions and
/// uncovered gaps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowView {
    /// `(source position, overlap seconds)`, in time order.
    pub overlaps: Vec<(usize, f64)>,
    /// `(gap start, gap end, position of the point before the gap)`.
    pub gaps: Vec<(f64, f64, usize)>,
}

impl WindowView {
    pub fn uncovered(&self) -> f64 {
        self.gaps.iter().map(|(a, b, _)| b - a).sum()
    }
}

impl Coverage {
    /// Validity regions for points at `times` with sampling interval `interval`.
    pub fn new(times: &[f64], interval: f64) -> Self {
        let half = interval / 2.0;
        let n = times.len();
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for i in 0..n {
            let mut a = times[i] - half;
            let mut b = times[i] + half;
            if i > 0 {
                a = a.max((times[i - 1] + times[i]) / 2.0);
            }
            if i + 1 < n {
                b = b.min((times[i] + times[i + 1]) / 2.0);
            }
            lo.push(a);
            hi.push(b);
        }
        Coverage { t: times.to_vec(), lo, hi }
    }

    pub fn of(series: &PointSeries) -> Result<Self> {
        let interval = series_interval(series)?;
        Ok(Self::new(&series.iter().map(|p| p.t.0).collect::<Vec<_>>(), interval))
    }

    /// First and last covered instants.
    pub fn span(&self) -> (f64, f64) {
        (self.lo[0], self.hi[self.hi.len() - 1])
    }

    pub fn region(&self, i: usize) -> (f64, f64) {
        (self.lo[i], self.hi[i])
    }

    /// Overlaps and gaps of `[w0, w1)` against the validity regions.
    pub fn view(&self, w0: f64, w1: f64) -> WindowView {
        let mut view = WindowView::default();
        let mut j = self.hi.partition_point(|h| *h <= w0);
        let mut cursor = w0;
        while j < self.t.len() && self.lo[j] < w1 {
            let a = self.lo[j].max(w0);
            let b = self.hi[j].min(w1);
            if a > cursor && j > 0 {
                view.gaps.push((cursor, a, j - 1));
            }
            if b > a {
                view.overlaps.push((j, b - a));
            }
            cursor = cursor.max(b);
            j += 1;
        }
        if cursor < w1 && j > 0 && j < self.t.len() {
            view.gaps.push((cursor, w1, j - 1));
        }
        view
    }

    /// Value of label `k` imputed at `x` inside the gap after point `left`.
    fn impute<E: Element>(&self, elements: &[E], left: usize, k: usize, x: f64, method: Interpolation) -> f64 {
        let va = elements[left].data()[k];
        let Some(right) = elements.get(left + 1) else { return va };
        match method {
            Interpolation::Previous => va,
            Interpolation::Linear => {
                let (ta, tb) = (self.t[left], self.t[left + 1]);
                let vb = right.data()[k];
                let f = (x - ta) / (tb - ta);
                va + (vb - va) * f
            }
        }
    }
}

fn series_interval(series: &PointSeries) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::NotEnoughData(format!(
            "transformations need at least 2 points, series has {}",
            series.len()
        )));
    }
    series.auto_interval().ok_or_else(|| Error::NotEnoughData("no sampling interval".into()))
}

/// Overlap-weighted mean of every index except `data_loss`, over the
/// sources that define it.
pub fn carry_indexes<'a>(sources: impl IntoIterator<Item = (&'a DataIndexes, f64)>) -> DataIndexes {
    let mut acc: BTreeMap<&str, (f64, f64, usize, f64)> = BTreeMap::new();
    for (ix, w) in sources {
        if w <= 0.0 {
            continue;
        }
        for (name, v) in ix.iter() {
            if name == DATA_LOSS {
                continue;
            }
            let e = acc.entry(name).or_insert((0.0, 0.0, 0, v));
            e.0 += w * v;
            e.1 += w;
            e.2 += 1;
        }
    }
    let mut out = DataIndexes::new();
    for (name, (num, den, n, only)) in acc {
        let v = if n == 1 { only } else { num / den };
        out.put(name, v.clamp(0.0, 1.0));
    }
    out
}

/// Loss of a window: its uncovered share plus the losses its sources carried.
fn window_loss<E: Element>(view: &WindowView, elements: &[E], width: f64) -> f64 {
    let uncovered = view.uncovered();
    if uncovered >= width {
        return 1.0;
    }
    let inherited: f64 = view.overlaps.iter().map(|&(j, ov)| ov * elements[j].data_loss().unwrap_or(0.0)).sum();
    ((uncovered + inherited) / width).clamp(0.0, 1.0)
}

fn window_indexes<E: Element>(view: &WindowView, elements: &[E], width: f64) -> DataIndexes {
    let mut ix = carry_indexes(view.overlaps.iter().map(|&(j, ov)| (elements[j].indexes(), ov)));
    ix.put(DATA_LOSS, window_loss(view, elements, width));
    ix
}

/// Resamples a point series onto epoch-aligned multiples of a physical unit.
pub fn resample(series: &PointSeries, unit: TimeUnit, method: Interpolation) -> Result<PointSeries> {
    let Some(step) = unit.physical_seconds() else {
        return Err(Error::CalendarResample(unit.to_string()));
    };
    let interval = series_interval(series)?;
    if series.declared_unit().is_none() {
        info!("Using auto-detected sampling interval: {interval:?}s");
    }
    let cov = Coverage::of(series)?;
    let (lo, hi) = cov.span();
    let src = series.elements();
    let half = step / 2.0;
    let mut out = Vec::new();
    let mut t = ceil(Timestamp(lo + half), unit, TimeZone::UTC).0;
    while t + half <= hi {
        let (w0, w1) = (t - half, t + half);
        let view = cov.view(w0, w1);
        let data = (0..series.labels().len())
            .map(|k| {
                let mut v = 0.0;
                for &(j, ov) in &view.overlaps {
                    v += ov / step * src[j].data[k];
                }
                for &(a, b, left) in &view.gaps {
                    v += (b - a) / step * cov.impute(src, left, k, (a + b) / 2.0, method);
                }
                v
            })
            .collect();
        let mut p = DataTimePoint::new(t, data);
        p.indexes = window_indexes(&view, src, step);
        out.push(p);
        t += step;
    }
    info!("Resampled {} DataTimePoints in {} DataTimePoints", series.len(), out.len());
    Ok(PointSeries::from_parts(series.labels().to_vec(), out, series.tz(), Some(unit)))
}

/// Counts behind an aggregation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationStats {
    /// Points in the input series.
    pub source: usize,
    /// Points falling inside an emitted slot.
    pub consumed: usize,
    /// Points inside each emitted slot.
    pub per_slot: Vec<usize>,
}

/// Aggregates points into dense slots of `unit`, aligned in the series zone.
pub fn aggregate(series: &PointSeries, unit: TimeUnit, ops: &[AggOp], method: Interpolation) -> Result<SlotSeries> {
    aggregate_with_stats(series, unit, ops, method).map(|(s, _)| s)
}

/// Output label names for `ops` applied to `labels`.
pub fn aggregate_labels(labels: &[String], ops: &[AggOp]) -> Vec<String> {
    if ops == [AggOp::Avg] {
        return labels.to_vec();
    }
    labels.iter().flat_map(|l| ops.iter().map(move |op| format!("{l}_{op}"))).collect()
}

/// [`aggregate`], also returning how many points each slot consumed.
pub fn aggregate_with_stats(
    series: &PointSeries,
    unit: TimeUnit,
    ops: &[AggOp],
    method: Interpolation,
) -> Result<(SlotSeries, AggregationStats)> {
    if ops.is_empty() {
        return Err(Error::Invalid("at least one aggregation operation is required".into()));
    }
    let interval = series_interval(series)?;
    let cov = Coverage::of(series)?;
    let tz = series.tz();
    let (lo, hi) = cov.span();
    let src = series.elements();
    let times: Vec<f64> = src.iter().map(|p| p.t.0).collect();
    let nlabels = series.labels().len();

    let mut start = floor(Timestamp(lo), unit, tz);
    if start.0 < lo {
        start = shift(start, unit, 1, tz);
    }
    let mut slots = Vec::new();
    let mut per_slot = Vec::new();
    loop {
        let end = shift(start, unit, 1, tz);
        if end.0 > hi {
            break;
        }
        let (s, e) = (start.0, end.0);
        let view = cov.view(s, e);
        let a = times.partition_point(|t| *t < s);
        let b = times.partition_point(|t| *t < e);
        per_slot.push(b - a);

        let mut data = Vec::with_capacity(nlabels * ops.len());
        for k in 0..nlabels {
            // (value, mass) samples, plus extremes of the imputed segments.
            let mut samples: Vec<(f64, f64)> = src[a..b].iter().map(|p| (p.data[k], 1.0)).collect();
            let mut extremes: Vec<f64> = samples.iter().map(|s| s.0).collect();
            for &(g0, g1, left) in &view.gaps {
                let mid = cov.impute(src, left, k, (g0 + g1) / 2.0, method);
                samples.push((mid, (g1 - g0) / interval));
                extremes.push(cov.impute(src, left, k, g0, method));
                extremes.push(cov.impute(src, left, k, g1, method));
            }
            if samples.is_empty() {
                for &(j, ov) in &view.overlaps {
                    samples.push((src[j].data[k], ov / interval));
                    extremes.push(src[j].data[k]);
                }
            }
            let sum: f64 = samples.iter().map(|(v, m)| v * m).sum();
            let count: f64 = samples.iter().map(|(_, m)| m).sum();
            for op in ops {
                data.push(match op {
                    AggOp::Sum => sum,
                    AggOp::Avg => sum / count,
                    AggOp::Min => extremes.iter().copied().fold(f64::INFINITY, f64::min),
                    AggOp::Max => extremes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                });
            }
        }
        let mut slot = DataTimeSlot { start, end, unit, data, indexes: DataIndexes::new() };
        slot.indexes = window_indexes(&view, src, e - s);
        slots.push(slot);
        start = end;
    }
    let stats = AggregationStats { source: series.len(), consumed: per_slot.iter().sum(), per_slot };
    info!("Aggregated {} points in {} slots", series.len(), slots.len());
    let labels = aggregate_labels(series.labels(), ops);
    Ok((SlotSeries::from_parts(labels, slots, tz, Some(unit)), stats))
}
