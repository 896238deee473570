//! Points, slots and time series.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::timemath::{shift, TimeUnit, TimeZone, Timestamp};

pub const DATA_LOSS: &str = "data_loss";
pub const DATA_RECONSTRUCTED: &str = "data_reconstructed";
pub const FORECAST: &str = "forecast";
pub const ANOMALY: &str = "anomaly";

/// Per-element indicators in the 0-1 range, keyed by name.
///
/// A missing name means "not computed", which is not the same as 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataIndexes(BTreeMap<String, f64>);

impl DataIndexes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) -> Result<()> {
        let name = name.into();
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::IndexOutOfRange { name, value });
        }
        self.0.insert(name, value);
        Ok(())
    }

    /// Like [`set`](Self::set) for values already known to be in range.
    pub(crate) fn put(&mut self, name: &str, value: f64) {
        debug_assert!((0.0..=1.0).contains(&value), "{name}={value}");
        self.0.insert(name.to_string(), value.clamp(0.0, 1.0));
    }

    pub fn remove(&mut self, name: &str) -> Option<f64> {
        self.0.remove(name)
    }

    pub fn data_loss(&self) -> Option<f64> {
        self.get(DATA_LOSS)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for DataIndexes {
    /// Panics on out-of-range values; use [`DataIndexes::set`] for fallible insertion.
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        let mut out = DataIndexes::new();
        for (k, v) in iter {
            out.set(k, v).expect("data index value in [0, 1]");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Point,
    Slot,
}

impl ElementKind {
    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Point => "point",
            ElementKind::Slot => "slot",
        }
    }
}

/// Behaviour shared by points and slots.
pub trait Element: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    const KIND: ElementKind;

    /// The point timestamp, or the slot start.
    fn t(&self) -> Timestamp;
    fn data(&self) -> &[f64];
    fn data_mut(&mut self) -> &mut Vec<f64>;
    fn indexes(&self) -> &DataIndexes;
    fn indexes_mut(&mut self) -> &mut DataIndexes;

    /// Slot end; `None` for points.
    fn end(&self) -> Option<Timestamp> {
        None
    }

    /// Same placement in time, new payload, no indexes.
    fn with_data(&self, data: Vec<f64>) -> Self;

    /// The element one `unit` after this one, carrying `data`.
    fn successor(&self, unit: TimeUnit, tz: TimeZone, data: Vec<f64>) -> Self;

    #[doc(hidden)]
    fn check_follows(series: &TimeSeries<Self>, next: &Self) -> Result<()>;
    #[doc(hidden)]
    fn resolution_of(series: &TimeSeries<Self>) -> Resolution;
    #[doc(hidden)]
    fn auto_interval_of(series: &TimeSeries<Self>) -> Option<f64>;

    fn data_loss(&self) -> Option<f64> {
        self.indexes().data_loss()
    }

    /// True when the element is marked as entirely missing.
    fn fully_lost(&self) -> bool {
        self.data_loss().is_some_and(|l| l >= 1.0)
    }
}

/// A punctual observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTimePoint {
    pub t: Timestamp,
    pub data: Vec<f64>,
    pub indexes: DataIndexes,
}

impl DataTimePoint {
    pub fn new(t: impl Into<Timestamp>, data: Vec<f64>) -> Self {
        DataTimePoint { t: t.into(), data, indexes: DataIndexes::new() }
    }

    pub fn with_indexes(mut self, indexes: DataIndexes) -> Self {
        self.indexes = indexes;
        self
    }
}

impl Element for DataTimePoint {
    const KIND: ElementKind = ElementKind::Point;

    fn t(&self) -> Timestamp {
        self.t
    }
    fn data(&self) -> &[f64] {
        &self.data
    }
    fn data_mut(&mut self) -> &mut Vec<f64> {
        &mut self.data
    }
    fn indexes(&self) -> &DataIndexes {
        &self.indexes
    }
    fn indexes_mut(&mut self) -> &mut DataIndexes {
        &mut self.indexes
    }
    fn with_data(&self, data: Vec<f64>) -> Self {
        DataTimePoint::new(self.t, data)
    }
    fn successor(&self, unit: TimeUnit, tz: TimeZone, data: Vec<f64>) -> Self {
        DataTimePoint::new(shift(self.t, unit, 1, tz), data)
    }

    fn check_follows(series: &TimeSeries<Self>, next: &Self) -> Result<()> {
        match series.elements.last() {
            Some(last) if !(next.t.0 > last.t.0) => Err(Error::Ordering { last: last.t.0, new: next.t.0 }),
            _ => Ok(()),
        }
    }

    fn resolution_of(series: &TimeSeries<Self>) -> Resolution {
        if let Some(u) = series.declared {
            return Resolution::Unit(u);
        }
        series.detected().map_or(Resolution::Variable, |d| d.resolution)
    }

    fn auto_interval_of(series: &TimeSeries<Self>) -> Option<f64> {
        match (series.declared, series.elements.first()) {
            (Some(u), Some(first)) => Some(u.duration_at(first.t, series.tz)),
            (Some(u), None) => u.physical_seconds(),
            (None, _) => series.detected().map(|d| d.auto_interval),
        }
    }
}

/// Data aggregated over `[start, end)`, one `unit` long.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTimeSlot {
    pub start: Timestamp,
    pub end: Timestamp,
    pub unit: TimeUnit,
    pub data: Vec<f64>,
    pub indexes: DataIndexes,
}

impl DataTimeSlot {
    /// Builds the slot starting at `start`; its end is one `unit` later in `tz`.
    pub fn new(start: impl Into<Timestamp>, unit: TimeUnit, tz: TimeZone, data: Vec<f64>) -> Self {
        let start = start.into();
        DataTimeSlot { start, end: shift(start, unit, 1, tz), unit, data, indexes: DataIndexes::new() }
    }

    pub fn with_indexes(mut self, indexes: DataIndexes) -> Self {
        self.indexes = indexes;
        self
    }

    pub fn duration(&self) -> f64 {
        self.end.since(self.start)
    }
}

impl Element for DataTimeSlot {
    const KIND: ElementKind = ElementKind::Slot;

    fn t(&self) -> Timestamp {
        self.start
    }
    fn data(&self) -> &[f64] {
        &self.data
    }
    fn data_mut(&mut self) -> &mut Vec<f64> {
        &mut self.data
    }
    fn indexes(&self) -> &DataIndexes {
        &self.indexes
    }
    fn indexes_mut(&mut self) -> &mut DataIndexes {
        &mut self.indexes
    }
    fn end(&self) -> Option<Timestamp> {
        Some(self.end)
    }
    fn with_data(&self, data: Vec<f64>) -> Self {
        DataTimeSlot { start: self.start, end: self.end, unit: self.unit, data, indexes: DataIndexes::new() }
    }
    fn successor(&self, unit: TimeUnit, tz: TimeZone, data: Vec<f64>) -> Self {
        DataTimeSlot::new(self.end, unit, tz, data)
    }

    fn check_follows(series: &TimeSeries<Self>, next: &Self) -> Result<()> {
        let expected_end = shift(next.start, next.unit, 1, series.tz);
        if !(next.start.0 < next.end.0) || expected_end.0 != next.end.0 {
            return Err(Error::InvalidSlot { start: next.start.0, end: next.end.0, unit: next.unit.to_string() });
        }
        match (series.elements.last(), series.declared) {
            (Some(last), _) if last.end.0 != next.start.0 => {
                Err(Error::Succession { expected: last.end.0, got: next.start.0 })
            }
            (_, Some(unit)) if unit != next.unit => Err(Error::KindMismatch(format!(
                "slot unit {} differs from series unit {unit}",
                next.unit
            ))),
            _ => Ok(()),
        }
    }

    fn resolution_of(series: &TimeSeries<Self>) -> Resolution {
        series
            .declared
            .or_else(|| series.elements.first().map(|s| s.unit))
            .map_or(Resolution::Variable, Resolution::Unit)
    }

    fn auto_interval_of(series: &TimeSeries<Self>) -> Option<f64> {
        series.elements.first().map(|s| s.duration())
    }
}

/// Temporal resolution of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    Unit(TimeUnit),
    Variable,
}

impl Resolution {
    pub fn unit(&self) -> Option<TimeUnit> {
        match self {
            Resolution::Unit(u) => Some(*u),
            Resolution::Variable => None,
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Unit(u) => write!(f, "{u}"),
            Resolution::Variable => f.write_str("variable"),
        }
    }
}

/// Outcome of sampling-interval detection on a point series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedResolution {
    pub resolution: Resolution,
    /// Typical spacing in seconds: the constant delta, else the most
    /// frequent one, else the median.
    pub auto_interval: f64,
}

/// Sampling-interval detection over raw consecutive deltas.
///
/// Constant deltas give a unit resolution. Otherwise the resolution is
/// variable and the interval is the unique most frequent delta, falling
/// back to the median when the top count is shared.
pub fn detect_from_deltas(deltas: &[f64]) -> Result<DetectedResolution> {
    if deltas.is_empty() {
        return Err(Error::NotEnoughData("resolution detection needs at least 2 points".into()));
    }
    if deltas.iter().all(|d| *d == deltas[0]) {
        let resolution = TimeUnit::from_seconds(deltas[0]).map_or(Resolution::Variable, Resolution::Unit);
        return Ok(DetectedResolution { resolution, auto_interval: deltas[0] });
    }
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for d in deltas {
        *counts.entry(d.to_bits()).or_default() += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    let winners: Vec<u64> = counts.iter().filter(|(_, c)| **c == top).map(|(b, _)| *b).collect();
    let auto_interval = if winners.len() == 1 {
        f64::from_bits(winners[0])
    } else {
        median(deltas)
    };
    Ok(DetectedResolution { resolution: Resolution::Variable, auto_interval })
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// An ordered, homogeneous collection of points or slots.
///
/// All elements carry the same labels, in the order of [`labels`](Self::labels).
/// Point series are strictly increasing in time; slot series are dense,
/// each slot starting where the previous one ends.
#[derive(Debug, Clone)]
pub struct TimeSeries<E> {
    elements: Vec<E>,
    labels: Vec<String>,
    tz: TimeZone,
    declared: Option<TimeUnit>,
    detected: OnceLock<Option<DetectedResolution>>,
}

pub type PointSeries = TimeSeries<DataTimePoint>;
pub type SlotSeries = TimeSeries<DataTimeSlot>;

impl<E: Element> PartialEq for TimeSeries<E> {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements
            && self.labels == other.labels
            && self.tz == other.tz
            && self.resolution() == other.resolution()
    }
}

impl<E: Element> TimeSeries<E> {
    /// An empty series over `labels`, in UTC.
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        TimeSeries {
            elements: Vec::new(),
            labels: labels.into_iter().map(Into::into).collect(),
            tz: TimeZone::UTC,
            declared: None,
            detected: OnceLock::new(),
        }
    }

    pub fn from_elements<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        elements: impl IntoIterator<Item = E>,
        tz: TimeZone,
    ) -> Result<Self> {
        let mut series = Self::new(labels).with_tz(tz);
        for e in elements {
            series.push(e)?;
        }
        Ok(series)
    }

    /// Internal constructor for elements already known to be consistent.
    pub(crate) fn from_parts(labels: Vec<String>, elements: Vec<E>, tz: TimeZone, declared: Option<TimeUnit>) -> Self {
        TimeSeries { elements, labels, tz, declared, detected: OnceLock::new() }
    }

    fn with_tz(mut self, tz: TimeZone) -> Self {
        self.tz = tz;
        self
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn tz(&self) -> TimeZone {
        self.tz
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[E] {
        &self.elements
    }

    pub fn iter(&self) -> std::slice::Iter<'_, E> {
        self.elements.iter()
    }

    pub fn first(&self) -> Option<&E> {
        self.elements.first()
    }

    pub fn last(&self) -> Option<&E> {
        self.elements.last()
    }

    pub(crate) fn declared_unit(&self) -> Option<TimeUnit> {
        self.declared
    }

    pub(crate) fn rebuild(&self, elements: Vec<E>) -> Self {
        Self::from_parts(self.labels.clone(), elements, self.tz, self.declared)
    }

    pub(crate) fn rebuild_labeled(&self, labels: Vec<String>, elements: Vec<E>) -> Self {
        Self::from_parts(labels, elements, self.tz, self.declared)
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownLabel {
            label: label.to_string(),
            available: self.labels.join(", "),
        })
    }

    /// Names of every data index present on at least one element.
    pub fn index_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for e in &self.elements {
            for n in e.indexes().names() {
                if !names.iter().any(|x| x == n) {
                    names.push(n.to_string());
                }
            }
        }
        names.sort();
        names
    }

    fn check_element(&self, element: &E) -> Result<()> {
        if element.data().len() != self.labels.len() {
            return Err(Error::LabelMismatch {
                expected: self.labels.join(", "),
                got: format!("{} positional values", element.data().len()),
            });
        }
        for (label, v) in self.labels.iter().zip(element.data()) {
            if !v.is_finite() {
                return Err(Error::NonFinite { label: label.clone(), value: *v });
            }
        }
        for (name, v) in element.indexes().iter() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::IndexOutOfRange { name: name.to_string(), value: v });
            }
        }
        Ok(())
    }

    /// Appends an element, enforcing ordering (points) or succession (slots).
    pub fn push(&mut self, element: E) -> Result<()> {
        self.check_element(&element)?;
        E::check_follows(self, &element)?;
        if let (Some(unit), Some(last)) = (self.declared, self.elements.last()) {
            if E::KIND == ElementKind::Point && unit.duration_at(last.t(), self.tz) != element.t().since(last.t()) {
                self.declared = None;
            }
        }
        self.elements.push(element);
        self.detected = OnceLock::new();
        Ok(())
    }

    /// Value-semantics variant of [`push`](Self::push).
    pub fn append(mut self, element: E) -> Result<Self> {
        self.push(element)?;
        Ok(self)
    }

    /// Element at `index`; negative positions count from the end.
    pub fn get(&self, index: isize) -> Result<&E> {
        let len = self.elements.len();
        let pos = if index < 0 { len as isize + index } else { index };
        if pos < 0 || pos as usize >= len {
            return Err(Error::OutOfBounds { index, len });
        }
        Ok(&self.elements[pos as usize])
    }

    /// Element whose timestamp (or slot start) is exactly `t`.
    pub fn at(&self, t: impl Into<Timestamp>) -> Result<&E> {
        let t = t.into();
        self.elements
            .binary_search_by(|e| e.t().0.total_cmp(&t.0))
            .map(|i| &self.elements[i])
            .map_err(|_| Error::TimestampNotFound(t.0))
    }

    /// Position of the first element at or after `t`.
    pub(crate) fn lower_bound(&self, t: Timestamp) -> usize {
        self.elements.partition_point(|e| e.t().0 < t.0)
    }

    /// Elements at positions `[from, to)`.
    pub fn slice_positions(&self, range: Range<usize>) -> Result<Self> {
        if range.start > range.end {
            return Err(Error::InvalidRange(format!("{} > {}", range.start, range.end)));
        }
        if range.end > self.len() {
            return Err(Error::OutOfBounds { index: range.end as isize, len: self.len() });
        }
        Ok(self.rebuild(self.elements[range].to_vec()))
    }

    /// Elements with timestamps in `[from, to)`.
    pub fn slice_time(&self, from: impl Into<Timestamp>, to: impl Into<Timestamp>) -> Result<Self> {
        let (from, to) = (from.into(), to.into());
        if !(from.0 < to.0) {
            return Err(Error::InvalidRange(format!("from {from} is not before to {to}")));
        }
        let (a, b) = (self.lower_bound(from), self.lower_bound(to));
        Ok(self.rebuild(self.elements[a..b].to_vec()))
    }

    /// A new series holding only `labels`, in the given order. Indexes are kept.
    pub fn filter<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let positions = labels.iter().map(|l| self.label_index(l.as_ref())).collect::<Result<Vec<_>>>()?;
        let elements = self
            .elements
            .iter()
            .map(|e| {
                let mut out = e.clone();
                *out.data_mut() = positions.iter().map(|&p| e.data()[p]).collect();
                out
            })
            .collect();
        Ok(self.rebuild_labeled(labels.iter().map(|l| l.as_ref().to_string()).collect(), elements))
    }

    /// Dispatches a [`Selector`].
    pub fn select(&self, selector: Selector) -> Result<Selection<'_, E>> {
        Ok(match selector {
            Selector::Position(i) => Selection::Element(self.get(i)?),
            Selector::Time(t) => Selection::Element(self.at(t)?),
            Selector::Label(l) => Selection::Series(self.filter(&[l])?),
            Selector::Positions(r) => Selection::Series(self.slice_positions(r)?),
            Selector::TimeRange(a, b) => Selection::Series(self.slice_time(a, b)?),
        })
    }

    /// Same instants, different display and calendar zone.
    pub fn change_tz(&self, tz: TimeZone) -> Self {
        let mut out = self.clone();
        out.tz = tz;
        out
    }

    /// Labels sorted, payload columns permuted to match.
    pub fn sorted_labels(&self) -> Self {
        let mut order: Vec<usize> = (0..self.labels.len()).collect();
        order.sort_by(|a, b| self.labels[*a].cmp(&self.labels[*b]));
        let labels: Vec<String> = order.iter().map(|&i| self.labels[i].clone()).collect();
        self.filter(&labels).expect("labels come from the series")
    }

    pub fn resolution(&self) -> Resolution {
        E::resolution_of(self)
    }

    /// Typical spacing between elements, in seconds.
    pub fn auto_interval(&self) -> Option<f64> {
        E::auto_interval_of(self)
    }

    /// Fixed resolution unit, or an error for variable-resolution series.
    pub fn fixed_unit(&self) -> Result<TimeUnit> {
        self.resolution().unit().ok_or(Error::VariableResolution)
    }

    /// One-line description of the series.
    pub fn summarize(&self) -> String {
        let (Some(first), Some(last)) = (self.elements.first(), self.elements.last()) else {
            return "empty time series".to_string();
        };
        let n = self.len();
        let stamp = |t: Timestamp| format!("{t} ({})", self.tz.format(t));
        match E::KIND {
            ElementKind::Point => {
                let res = match (self.resolution(), self.auto_interval()) {
                    (Resolution::Unit(u), _) => format!("{u} resolution"),
                    (Resolution::Variable, Some(i)) => format!("variable resolution (~{i}s)"),
                    (Resolution::Variable, None) => "undefined resolution".to_string(),
                };
                let noun = if n == 1 { "point" } else { "points" };
                format!(
                    "Time series of #{n} {noun} at {res}, from point @ {} to point @ {}",
                    stamp(first.t()),
                    stamp(last.t())
                )
            }
            ElementKind::Slot => {
                let unit = self.resolution();
                let noun = if n == 1 { "slot" } else { "slots" };
                format!(
                    "Time series of #{n} {noun} of {unit}, from slot starting @ {} to slot starting @ {}",
                    stamp(first.t()),
                    stamp(last.t())
                )
            }
        }
    }
}

impl<E> std::ops::Index<usize> for TimeSeries<E> {
    type Output = E;

    fn index(&self, index: usize) -> &E {
        &self.elements[index]
    }
}

impl<'a, E> IntoIterator for &'a TimeSeries<E> {
    type Item = &'a E;
    type IntoIter = std::slice::Iter<'a, E>;

    fn into_iter(self) -> Self::IntoIter {
        self.elements.iter()
    }
}

impl<E: Element> TimeSeries<E> {
    pub(crate) fn detected(&self) -> Option<DetectedResolution> {
        *self.detected.get_or_init(|| {
            let deltas: Vec<f64> = self.elements.windows(2).map(|w| w[1].t().since(w[0].t())).collect();
            detect_from_deltas(&deltas).ok()
        })
    }
}

/// Ways of addressing a series, mirroring bracket access.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    Position(isize),
    Time(Timestamp),
    Label(String),
    Positions(Range<usize>),
    TimeRange(Timestamp, Timestamp),
}

#[derive(Debug, Clone)]
pub enum Selection<'a, E> {
    Element(&'a E),
    Series(TimeSeries<E>),
}

impl PointSeries {
    /// Resolution and auto interval of a point series; needs at least 2 points.
    pub fn detect_resolution(&self) -> Result<DetectedResolution> {
        if self.len() < 2 {
            return Err(Error::NotEnoughData(format!(
                "resolution detection needs at least 2 points, series has {}",
                self.len()
            )));
        }
        let detected = self.detected().expect("two or more points");
        Ok(match self.declared {
            Some(u) => DetectedResolution {
                resolution: Resolution::Unit(u),
                auto_interval: u.duration_at(self.elements[0].t, self.tz),
            },
            None => detected,
        })
    }

    /// Declares a fixed sampling unit. The points must be spaced accordingly.
    pub fn with_resolution(mut self, unit: TimeUnit) -> Result<Self> {
        for w in self.elements.windows(2) {
            if unit.duration_at(w[0].t, self.tz) != w[1].t.since(w[0].t) {
                return Err(Error::Invalid(format!(
                    "points at {} and {} are not one {unit} apart",
                    w[0].t, w[1].t
                )));
            }
        }
        self.declared = Some(unit);
        Ok(self)
    }
}

impl SlotSeries {
    /// An empty slot series of `unit`.
    pub fn new_slots<S: Into<String>>(labels: impl IntoIterator<Item = S>, unit: TimeUnit, tz: TimeZone) -> Self {
        let mut s = Self::new(labels).with_tz(tz);
        s.declared = Some(unit);
        s
    }
}

/// Either kind of series, for code that handles both (files, CLI).
#[derive(Debug, Clone, PartialEq)]
pub enum AnySeries {
    Points(PointSeries),
    Slots(SlotSeries),
}

impl AnySeries {
    pub fn len(&self) -> usize {
        match self {
            AnySeries::Points(s) => s.len(),
            AnySeries::Slots(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn summarize(&self) -> String {
        match self {
            AnySeries::Points(s) => s.summarize(),
            AnySeries::Slots(s) => s.summarize(),
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            AnySeries::Points(s) => s.labels(),
            AnySeries::Slots(s) => s.labels(),
        }
    }

    pub fn tz(&self) -> TimeZone {
        match self {
            AnySeries::Points(s) => s.tz(),
            AnySeries::Slots(s) => s.tz(),
        }
    }

    pub fn change_tz(&self, tz: TimeZone) -> Self {
        match self {
            AnySeries::Points(s) => AnySeries::Points(s.change_tz(tz)),
            AnySeries::Slots(s) => AnySeries::Slots(s.change_tz(tz)),
        }
    }

    pub fn kind(&self) -> ElementKind {
        match self {
            AnySeries::Points(_) => ElementKind::Point,
            AnySeries::Slots(_) => ElementKind::Slot,
        }
    }
}

impl From<PointSeries> for AnySeries {
    fn from(s: PointSeries) -> Self {
        AnySeries::Points(s)
    }
}

impl From<SlotSeries> for AnySeries {
    fn from(s: SlotSeries) -> Self {
        AnySeries::Slots(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(ts: &[f64]) -> PointSeries {
        TimeSeries::from_elements(["v"], ts.iter().map(|&t| DataTimePoint::new(t, vec![t])), TimeZone::UTC).unwrap()
    }

    #[test]
    fn append_enforces_strict_order() {
        let s = points(&[10.0]);
        let s = s.append(DataTimePoint::new(20.0, vec![1.0])).unwrap();
        let err = s.append(DataTimePoint::new(20.0, vec![1.0])).unwrap_err();
        assert!(matches!(err, Error::Ordering { last, new } if last == 20.0 && new == 20.0));
    }

    #[test]
    fn append_enforces_slot_succession() {
        let u = TimeUnit::seconds(10).unwrap();
        let mut s = SlotSeries::new_slots(["v"], u, TimeZone::UTC);
        s.push(DataTimeSlot::new(0.0, u, TimeZone::UTC, vec![1.0])).unwrap();
        s.push(DataTimeSlot::new(10.0, u, TimeZone::UTC, vec![1.0])).unwrap();
        let err = s.push(DataTimeSlot::new(21.0, u, TimeZone::UTC, vec![1.0])).unwrap_err();
        assert!(matches!(err, Error::Succession { expected, got } if expected == 20.0 && got == 21.0));

        let u9 = TimeUnit::seconds(9).unwrap();
        let mut other = SlotSeries::new(["v"]);
        other.push(DataTimeSlot::new(0.0, u9, TimeZone::UTC, vec![1.0])).unwrap();
        assert!(other.push(DataTimeSlot::new(10.0, u9, TimeZone::UTC, vec![1.0])).is_err());
    }

    #[test]
    fn append_rejects_label_mismatch() {
        let s = points(&[1.0]);
        let err = s.append(DataTimePoint::new(2.0, vec![1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::LabelMismatch { .. }));
    }

    #[test]
    fn detection_cases() {
        let s = points(&[0.0, 60.0, 120.0, 180.0]);
        let d = s.detect_resolution().unwrap();
        assert_eq!(d.resolution, Resolution::Unit("60s".parse().unwrap()));
        let s = points(&[0.0, 60.0, 120.0, 240.0]);
        let d = s.detect_resolution().unwrap();
        assert_eq!((d.resolution, d.auto_interval), (Resolution::Variable, 60.0));
        assert!(points(&[0.0]).detect_resolution().is_err());
        // all distinct: median of [1, 2, 4]
        let s = points(&[0.0, 1.0, 3.0, 7.0]);
        assert_eq!(s.detect_resolution().unwrap().auto_interval, 2.0);
    }

    #[test]
    fn access_by_position_time_label_range() {
        let s = TimeSeries::from_elements(
            ["a", "b"],
            (0..6).map(|i| DataTimePoint::new(i as f64 * 10.0, vec![i as f64, -(i as f64)])),
            TimeZone::UTC,
        )
        .unwrap();
        assert_eq!(s.get(2).unwrap().t.0, 20.0);
        assert_eq!(s.get(-1).unwrap().t.0, 50.0);
        assert!(matches!(s.get(6), Err(Error::OutOfBounds { .. })));
        assert_eq!(s.at(30.0).unwrap().data, vec![3.0, -3.0]);
        assert!(matches!(s.at(31.0), Err(Error::TimestampNotFound(_))));
        let b = s.filter(&["b"]).unwrap();
        assert_eq!(b.labels(), ["b"]);
        assert_eq!(b[4].data, vec![-4.0]);
        match s.select(Selector::Label("zz".into())) {
            Err(Error::UnknownLabel { available, .. }) => assert_eq!(available, "a, b"),
            other => panic!("{other:?}"),
        }
        let r = s.slice_positions(2..4).unwrap();
        assert_eq!(r.iter().map(|p| p.t.0).collect::<Vec<_>>(), vec![20.0, 30.0]);
        assert_eq!(s.slice_time(20.0, 40.0).unwrap(), r);
    }

    #[test]
    fn change_tz_keeps_instants() {
        let s = points(&[1546477200.0, 1546480800.0]);
        let rome: TimeZone = "Europe/Rome".parse().unwrap();
        let r = s.change_tz(rome);
        assert_eq!(r.elements(), s.elements());
        assert_eq!(r.tz(), rome);
        assert_eq!(s.change_tz(TimeZone::UTC), s);
        assert!(r.summarize().contains("02:00:00 +01:00"));
    }

    #[test]
    fn summaries() {
        assert_eq!(PointSeries::new(["v"]).summarize(), "empty time series");
        let s = points(&[0.0, 3600.0, 7200.0]);
        assert!(s.summarize().starts_with("Time series of #3 points at 1h resolution, from point @ 0.0"));
        let v = points(&[0.0, 600.0, 1200.0, 1900.0]);
        assert!(v.summarize().contains("variable resolution (~600s)"), "{}", v.summarize());
    }

    #[test]
    fn indexes_are_range_checked() {
        let mut ix = DataIndexes::new();
        assert!(ix.set(DATA_LOSS, 1.5).is_err());
        ix.set(DATA_LOSS, 0.25).unwrap();
        assert_eq!(ix.data_loss(), Some(0.25));
        assert_eq!(ix.get(ANOMALY), None);
    }
}
