use std::path::Path;

use log::info;

use super::{
    check_output, model_json, parse_model_file, read_text, rows, valid_targets, write_text, FitMeta, Fitted, Forecaster, Metric,
    PredictContext, Report, Row,
};
use crate::error::{Error, Result};
use crate::series::{Element, TimeSeries, FORECAST};
use crate::timemath::{shift, Timestamp};

/// Framework wrapper turning a [`Forecaster`] into a usable model.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecasterModel<F> {
    inner: Fitted<F>,
}

impl<F: Forecaster> ForecasterModel<F> {
    pub fn new(model: F) -> Self {
        ForecasterModel { inner: Fitted { model, meta: None } }
    }

    pub fn model(&self) -> &F {
        &self.inner.model
    }

    pub fn meta(&self) -> Option<&FitMeta> {
        self.inner.meta.as_ref()
    }

    pub fn is_fitted(&self) -> bool {
        self.inner.meta.is_some()
    }

    pub fn window(&self) -> usize {
        self.inner.model.window()
    }

    /// Fits on a fixed-resolution series. Fully lost elements are excluded.
    pub fn fit<E: Element>(&mut self, series: &TimeSeries<E>) -> Result<()> {
        self.inner.fit(series)
    }

    fn fit_ranges<E: Element>(&mut self, series: &TimeSeries<E>, ranges: &[std::ops::Range<usize>]) -> Result<()> {
        self.inner.fit_ranges(series, ranges)
    }

    pub(super) fn predict_row(&self, meta: &FitMeta, window: &[Row<'_>], target: Timestamp) -> Result<Vec<f64>> {
        let values = self.inner.model.predict(&PredictContext { meta, window, target })?;
        check_output(meta, &values)?;
        Ok(values)
    }

    /// One-step predictions for every position with a usable window.
    pub(super) fn one_step<E: Element>(&self, series: &TimeSeries<E>) -> Result<Vec<(usize, Vec<f64>)>> {
        let meta = self.inner.meta()?;
        meta.check(series)?;
        let w = self.window();
        let rows = rows(series.elements());
        valid_targets(&rows, w)
            .into_iter()
            .map(|i| Ok((i, self.predict_row(meta, &rows[i - w..i], rows[i].t)?)))
            .collect()
    }

    /// Predicts `steps` elements past the end of `series`, recursively.
    pub fn predict<E: Element>(&self, series: &TimeSeries<E>, steps: usize) -> Result<Vec<Vec<f64>>> {
        let meta = self.inner.meta()?;
        meta.check(series)?;
        let w = self.window();
        if series.len() < w.max(1) {
            return Err(Error::WindowTooShort { len: series.len(), window: w });
        }
        let tail = &series.elements()[series.len() - w..];
        let mut history: Vec<(Timestamp, Vec<f64>, bool)> =
            tail.iter().map(|e| (e.t(), e.data().to_vec(), !e.fully_lost())).collect();
        let mut t = series.last().expect("non-empty").t();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            t = shift(t, meta.unit, 1, meta.tz);
            let window: Vec<Row<'_>> = history[history.len() - w..]
                .iter()
                .map(|(t, v, usable)| Row { t: *t, values: v, usable: *usable })
                .collect();
            let values = self.predict_row(meta, &window, t)?;
            if w > 0 {
                history.remove(0);
                history.push((t, values.clone(), true));
            }
            out.push(values);
        }
        Ok(out)
    }

    /// Extends `series` by `steps` predicted elements marked with the forecast index.
    pub fn apply<E: Element>(&self, series: &TimeSeries<E>, steps: usize) -> Result<TimeSeries<E>> {
        let predictions = self.predict(series, steps)?;
        let meta = self.inner.meta()?;
        let mut elements = series.elements().to_vec();
        for values in predictions {
            let mut next = elements.last().expect("non-empty").successor(meta.unit, meta.tz, values);
            next.indexes_mut().put(FORECAST, 1.0);
            elements.push(next);
        }
        Ok(series.rebuild(elements))
    }

    /// `(actual, predicted)` pairs per label, over usable targets with usable windows.
    pub(super) fn pairs<E: Element>(&self, series: &TimeSeries<E>) -> Result<Vec<Vec<(f64, f64)>>> {
        let mut pairs = vec![Vec::new(); series.labels().len()];
        for (i, predicted) in self.one_step(series)? {
            let e = &series[i];
            if e.fully_lost() {
                continue;
            }
            for (k, p) in predicted.into_iter().enumerate() {
                pairs[k].push((e.data()[k], p));
            }
        }
        Ok(pairs)
    }

    /// One-step-ahead error metrics, keyed `<label>_<METRIC>`.
    pub fn evaluate<E: Element>(&self, series: &TimeSeries<E>, metrics: &[Metric]) -> Result<Report> {
        let pairs = self.pairs(series)?;
        let mut report = Report::new();
        for (label, pairs) in series.labels().iter().zip(&pairs) {
            for m in metrics {
                report.insert(format!("{label}_{m}"), m.compute(pairs)?);
            }
        }
        Ok(report)
    }

    /// Splits `series` into `rounds` contiguous folds; each round validates on
    /// one fold after fitting a fresh copy of this model on the others.
    ///
    /// Reports `<label>_<METRIC>_avg` and `_stdev` (population) across rounds.
    pub fn cross_validate<E: Element>(&self, series: &TimeSeries<E>, rounds: usize, metrics: &[Metric]) -> Result<Report> {
        if rounds < 2 {
            return Err(Error::Invalid(format!("cross validation needs at least 2 rounds, got {rounds}")));
        }
        let n = series.len();
        let bounds = fold_bounds(n, rounds);
        let w = self.window();
        let mut samples: Report = Report::new();
        let mut per_key: Vec<(String, Vec<f64>)> = Vec::new();
        for r in 0..rounds {
            let (a, b) = (bounds[r], bounds[r + 1]);
            if b - a <= w {
                return Err(Error::WindowTooShort { len: b - a, window: w });
            }
            let to = series.elements().get(b).unwrap_or(&series[n - 1]).t();
            let from = series[a].t();
            info!(
                "Cross validation round {}/{rounds}: validate from {from} ({}) to {to} ({}), fit on the rest.",
                r + 1,
                series.tz().format(from),
                series.tz().format(to)
            );
            let mut model = ForecasterModel::new(self.inner.model.clone());
            model.fit_ranges(series, &[0..a, b..n])?;
            let report = model.evaluate(&series.slice_positions(a..b)?, metrics)?;
            for (key, value) in report {
                match per_key.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, v)) => v.push(value),
                    None => per_key.push((key, vec![value])),
                }
            }
        }
        for (key, values) in per_key {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
            samples.insert(format!("{key}_avg"), mean);
            samples.insert(format!("{key}_stdev"), var.sqrt());
        }
        Ok(samples)
    }

    pub fn to_json(&self) -> Result<String> {
        model_json(&format!("forecaster/{}", F::KIND), self.inner.meta()?, &self.inner.model)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let (meta, model) = parse_model_file::<F>(text, &format!("forecaster/{}", F::KIND))?;
        Ok(Self::from_parts(model, meta))
    }

    pub(super) fn from_parts(model: F, meta: FitMeta) -> Self {
        ForecasterModel { inner: Fitted { model, meta: Some(meta) } }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&read_text(path.as_ref())?)
    }
}

/// Fold start positions plus the end: `i * (n / rounds)`, the last fold
/// taking the remainder.
pub(super) fn fold_bounds(n: usize, rounds: usize) -> Vec<usize> {
    let size = n / rounds;
    let mut bounds: Vec<usize> = (0..rounds).map(|i| i * size).collect();
    bounds.push(n);
    bounds
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_the_series() {
        assert_eq!(fold_bounds(300, 3), vec![0, 100, 200, 300]);
        assert_eq!(fold_bounds(2519, 3), vec![0, 839, 1678, 2519]);
    }
}
