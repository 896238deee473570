//! Forecasters, reconstructors and model-based anomaly detectors.
//!
//! A model supplies a window size, a fit hook and a predict (or
//! reconstruct) hook. The wrappers in this module take care of the rest:
//! window edge cases, skipping fully lost elements, tail extension,
//! evaluation, cross validation and persistence.

mod anomaly;
mod forecaster;
mod periodic;
mod reconstructor;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Element, Resolution, TimeSeries};
use crate::timemath::{units_between, TimeUnit, TimeZone, Timestamp};

pub use anomaly::{AnomalyDetector, ErrorDistribution};
pub use forecaster::ForecasterModel;
pub use periodic::{detect_periodicity, PeriodicAverage};
pub use reconstructor::ReconstructorModel;

pub type PeriodicAverageForecaster = ForecasterModel<PeriodicAverage>;
pub type PeriodicAverageReconstructor = ReconstructorModel<PeriodicAverage>;
pub type PeriodicAverageAnomalyDetector = AnomalyDetector<PeriodicAverage>;

/// Version tag written at the top of every model file.
pub const MODEL_FORMAT: &str = "cs-model v1";

/// Metric name to value, keyed `<label>_<METRIC>`.
pub type Report = BTreeMap<String, f64>;

/// What a model was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub labels: Vec<String>,
    pub unit: TimeUnit,
    pub tz: TimeZone,
    /// Timestamp of phase zero.
    pub origin: Timestamp,
}

impl FitMeta {
    fn of<E: Element>(series: &TimeSeries<E>) -> Result<Self> {
        let first = series.first().ok_or_else(|| Error::NotEnoughData("cannot fit on an empty series".into()))?;
        let unit = series.fixed_unit()?;
        Ok(FitMeta { labels: series.labels().to_vec(), unit, tz: series.tz(), origin: first.t() })
    }

    /// Position of `t` within a cycle of `period` units.
    pub fn phase(&self, t: Timestamp, period: usize) -> usize {
        units_between(self.origin, t, self.unit, self.tz).rem_euclid(period as i64) as usize
    }

    fn check<E: Element>(&self, series: &TimeSeries<E>) -> Result<()> {
        if series.labels() != self.labels.as_slice() {
            return Err(Error::LabelMismatch { expected: self.labels.join(", "), got: series.labels().join(", ") });
        }
        match series.resolution() {
            Resolution::Unit(u) if u != self.unit => {
                Err(Error::Invalid(format!("model was fitted at {} resolution, series is at {u}", self.unit)))
            }
            Resolution::Variable if series.len() > 1 => Err(Error::VariableResolution),
            _ => Ok(()),
        }
    }
}

/// One element as seen by model hooks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row<'a> {
    pub t: Timestamp,
    pub values: &'a [f64],
    /// False for elements marked as fully lost.
    pub usable: bool,
}

fn rows<E: Element>(elements: &[E]) -> Vec<Row<'_>> {
    elements.iter().map(|e| Row { t: e.t(), values: e.data(), usable: !e.fully_lost() }).collect()
}

/// Input to a fit hook: one or more contiguous segments of a series.
#[derive(Debug, Clone)]
pub struct FitData<'a> {
    pub meta: &'a FitMeta,
    pub segments: Vec<Vec<Row<'a>>>,
}

impl<'a> FitData<'a> {
    pub fn rows(&self) -> impl Iterator<Item = &Row<'a>> {
        self.segments.iter().flatten()
    }

    /// Rows not marked as fully lost.
    pub fn usable_rows(&self) -> impl Iterator<Item = &Row<'a>> {
        self.rows().filter(|r| r.usable)
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Input to a predict hook.
#[derive(Debug, Clone)]
pub struct PredictContext<'a> {
    pub meta: &'a FitMeta,
    /// The `window()` rows preceding the target, oldest first.
    pub window: &'a [Row<'a>],
    pub target: Timestamp,
}

/// Input to a reconstruct hook.
#[derive(Debug, Clone)]
pub struct GapContext<'a> {
    pub meta: &'a FitMeta,
    /// `window()` usable rows before the gap, if available.
    pub before: Option<&'a [Row<'a>]>,
    /// `window()` usable rows after the gap, if available.
    pub after: Option<&'a [Row<'a>]>,
    /// Timestamps of the elements to rebuild.
    pub targets: &'a [Timestamp],
}

/// Fitting shared by every model kind.
pub trait Model: Clone + fmt::Debug + Serialize + DeserializeOwned {
    /// Name stored in model files.
    const KIND: &'static str;

    fn window(&self) -> usize;
    fn fit(&mut self, data: &FitData<'_>) -> Result<()>;
}

/// A one-step-ahead predictor.
pub trait Forecaster: Model {
    /// Values for `ctx.target`, in label order.
    fn predict(&self, ctx: &PredictContext<'_>) -> Result<Vec<f64>>;
}

/// A gap filler.
pub trait Reconstructor: Model {
    /// One row of values per target, in label order.
    fn reconstruct(&self, ctx: &GapContext<'_>) -> Result<Vec<Vec<f64>>>;
}

fn check_output(meta: &FitMeta, values: &[f64]) -> Result<()> {
    if values.len() != meta.labels.len() {
        return Err(Error::ModelContract(format!(
            "hook returned {} values for labels [{}]",
            values.len(),
            meta.labels.join(", ")
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::ModelContract(format!("hook returned non-finite value {v}")));
    }
    Ok(())
}

/// A model plus what it was fitted on.
#[derive(Debug, Clone, PartialEq)]
struct Fitted<M> {
    model: M,
    meta: Option<FitMeta>,
}

impl<M: Model> Fitted<M> {
    fn meta(&self) -> Result<&FitMeta> {
        self.meta.as_ref().ok_or(Error::NotFitted)
    }

    fn fit_ranges<E: Element>(&mut self, series: &TimeSeries<E>, ranges: &[std::ops::Range<usize>]) -> Result<()> {
        let first = ranges.iter().find(|r| !r.is_empty()).map(|r| r.start).unwrap_or(0);
        let mut meta = FitMeta::of(series)?;
        meta.origin = series.get(first as isize)?.t();
        let segments = ranges.iter().filter(|r| !r.is_empty()).map(|r| rows(&series.elements()[r.clone()])).collect();
        self.model.fit(&FitData { meta: &meta, segments })?;
        self.meta = Some(meta);
        Ok(())
    }

    fn fit<E: Element>(&mut self, series: &TimeSeries<E>) -> Result<()> {
        self.fit_ranges(series, &[0..series.len()])
    }
}

fn model_json<T: Serialize>(kind: &str, meta: &FitMeta, model: &T) -> Result<String> {
    let file = ModelFile { format: MODEL_FORMAT.to_string(), kind: kind.to_string(), meta, model };
    Ok(serde_json::to_string_pretty(&file)?)
}

#[derive(Serialize)]
struct ModelFile<'a, T> {
    format: String,
    kind: String,
    meta: &'a FitMeta,
    model: &'a T,
}

#[derive(Deserialize)]
struct OwnedModelFile<T> {
    meta: FitMeta,
    model: T,
}

fn parse_model_file<T: DeserializeOwned>(text: &str, kind: &str) -> Result<(FitMeta, T)> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let found = value.get("format").and_then(|v| v.as_str()).unwrap_or("<missing>");
    if found != MODEL_FORMAT {
        return Err(Error::VersionMismatch { expected: MODEL_FORMAT.to_string(), found: found.to_string() });
    }
    let found = value.get("kind").and_then(|v| v.as_str()).unwrap_or("<missing>");
    if found != kind {
        return Err(Error::KindMismatch(format!("file holds a {found:?} model, expected {kind:?}")));
    }
    let file: OwnedModelFile<T> = serde_json::from_value(value)?;
    Ok((file.meta, file.model))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Positions whose preceding `window` elements are all usable.
fn valid_targets(rows: &[Row<'_>], window: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut lost = 0usize;
    for i in 0..rows.len() {
        if i >= window && lost == 0 {
            out.push(i);
        }
        if !rows[i].usable {
            lost += 1;
        }
        if i >= window && !rows[i - window].usable {
            lost -= 1;
        }
    }
    if window == 0 {
        return (0..rows.len()).collect();
    }
    out
}

/// Error metrics for [`ForecasterModel::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    Mae,
    Mape,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rmse, Metric::Mae, Metric::Mape];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rmse => "RMSE",
            Metric::Mae => "MAE",
            Metric::Mape => "MAPE",
        }
    }

    /// Metric over `(actual, predicted)` pairs.
    pub fn compute(self, pairs: &[(f64, f64)]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::NotEnoughData("no evaluation pairs".into()));
        }
        let n = pairs.len() as f64;
        Ok(match self {
            Metric::Rmse => (pairs.iter().map(|(a, p)| (a - p) * (a - p)).sum::<f64>() / n).sqrt(),
            Metric::Mae => pairs.iter().map(|(a, p)| (a - p).abs()).sum::<f64>() / n,
            Metric::Mape => {
                let ratios: Vec<f64> = pairs.iter().filter(|(a, _)| *a != 0.0).map(|(a, p)| ((a - p) / a).abs()).collect();
                if ratios.is_empty() {
                    return Err(Error::Invalid("MAPE is undefined when every actual value is zero".into()));
                }
                ratios.iter().sum::<f64>() / ratios.len() as f64
            }
        })
    }

    pub fn parse_list(text: &str) -> Result<Vec<Metric>> {
        text.split(',').map(|s| s.trim().parse()).collect()
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RMSE" => Ok(Metric::Rmse),
            "MAE" => Ok(Metric::Mae),
            "MAPE" => Ok(Metric::Mape),
            _ => Err(Error::UnknownName { what: "metric", name: s.to_string() }),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
