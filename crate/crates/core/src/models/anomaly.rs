use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use super::{model_json, parse_model_file, read_text, write_text, FitMeta, Forecaster, ForecasterModel};
use crate::error::{Error, Result};
use crate::series::{Element, TimeSeries, ANOMALY};

/// Fit-time distribution of absolute one-step prediction errors for a label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDistribution {
    pub mean: f64,
    pub stdev: f64,
    pub max: f64,
    pub count: usize,
}

impl ErrorDistribution {
    pub fn from_errors(errors: &[f64]) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::NotEnoughData("no prediction errors to build a distribution from".into()));
        }
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(ErrorDistribution { mean: mean.min(max), stdev: var.sqrt(), max, count: errors.len() })
    }

    /// Position of `error` between the mean and the maximum fit error, clamped to `[0, 1]`.
    pub fn index(&self, error: f64) -> f64 {
        if self.max == self.mean {
            return if error > self.mean { 1.0 } else { 0.0 };
        }
        ((error - self.mean) / (self.max - self.mean)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DetectorState<F> {
    forecaster: F,
    errors: BTreeMap<String, ErrorDistribution>,
}

/// Scores elements by how far they are from what a forecaster expects.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyDetector<F> {
    forecaster: ForecasterModel<F>,
    errors: Option<BTreeMap<String, ErrorDistribution>>,
}

impl<F: Forecaster> AnomalyDetector<F> {
    pub fn new(model: F) -> Self {
        AnomalyDetector { forecaster: ForecasterModel::new(model), errors: None }
    }

    pub fn forecaster(&self) -> &ForecasterModel<F> {
        &self.forecaster
    }

    pub fn errors(&self) -> Option<&BTreeMap<String, ErrorDistribution>> {
        self.errors.as_ref()
    }

    pub fn is_fitted(&self) -> bool {
        self.errors.is_some()
    }

    /// Fits the forecaster, then records its absolute one-step errors.
    pub fn fit<E: Element>(&mut self, series: &TimeSeries<E>) -> Result<()> {
        self.forecaster.fit(series)?;
        info!("Predictive model(s) fitted, now evaluating...");
        let pairs = self.forecaster.pairs(series)?;
        let mut errors = BTreeMap::new();
        let mut by_label: Vec<(&String, Vec<(f64, f64)>)> = series.labels().iter().zip(pairs).collect();
        by_label.sort_by(|a, b| a.0.cmp(b.0));
        for (label, pairs) in by_label {
            info!("Computing actual vs predicted for \"{label}\"...");
            let abs: Vec<f64> = pairs.iter().map(|(a, p)| (a - p).abs()).collect();
            errors.insert(label.clone(), ErrorDistribution::from_errors(&abs)?);
        }
        info!("Model(s) evaluated, now computing the error distribution(s)...");
        self.errors = Some(errors);
        info!("Anomaly detector fitted");
        Ok(())
    }

    /// Adds an anomaly index to every usable element with a usable window.
    /// The index is the largest per-label index.
    pub fn apply<E: Element>(&self, series: &TimeSeries<E>) -> Result<TimeSeries<E>> {
        let errors = self.errors.as_ref().ok_or(Error::NotFitted)?;
        let dists: Vec<&ErrorDistribution> = series
            .labels()
            .iter()
            .map(|l| errors.get(l).ok_or_else(|| Error::UnknownLabel { label: l.clone(), available: keys(errors) }))
            .collect::<Result<_>>()?;
        let mut out = series.elements().to_vec();
        for (i, predicted) in self.forecaster.one_step(series)? {
            let e = &mut out[i];
            if e.fully_lost() {
                continue;
            }
            let index = predicted
                .iter()
                .zip(e.data())
                .zip(&dists)
                .map(|((p, a), d)| d.index((a - p).abs()))
                .fold(0.0, f64::max);
            e.indexes_mut().put(ANOMALY, index);
        }
        Ok(series.rebuild(out))
    }

    fn meta(&self) -> Result<&FitMeta> {
        self.forecaster.meta().ok_or(Error::NotFitted)
    }

    pub fn to_json(&self) -> Result<String> {
        let state = DetectorState {
            forecaster: self.forecaster.model().clone(),
            errors: self.errors.clone().ok_or(Error::NotFitted)?,
        };
        model_json(&kind::<F>(), self.meta()?, &state)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let (meta, state) = parse_model_file::<DetectorState<F>>(text, &kind::<F>())?;
        let forecaster = ForecasterModel::from_parts(state.forecaster, meta);
        Ok(AnomalyDetector { forecaster, errors: Some(state.errors) })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&read_text(path.as_ref())?)
    }
}

fn keys(errors: &BTreeMap<String, ErrorDistribution>) -> String {
    errors.keys().cloned().collect::<Vec<_>>().join(", ")
}

fn kind<F: Forecaster>() -> String {
    format!("anomaly-detector/{}", F::KIND)
}
