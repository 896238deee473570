use log::info;
use serde::{Deserialize, Serialize};

use super::{FitData, FitMeta, Forecaster, GapContext, Model, PredictContext, Reconstructor, Row};
use crate::error::{Error, Result};
use crate::series::{Element, TimeSeries};

/// Per-phase averages over a cycle of `periodicity` elements, shifted by the
/// mean deviation observed over the last `window` elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicAverage {
    periodicity: usize,
    window: usize,
    /// `means[label][phase]`.
    means: Vec<Vec<f64>>,
}

impl PeriodicAverage {
    /// A model with window equal to the periodicity.
    pub fn new(periodicity: usize) -> Self {
        PeriodicAverage { periodicity, window: periodicity, means: Vec::new() }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn periodicity(&self) -> usize {
        self.periodicity
    }

    /// Fitted averages, per label and phase.
    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    fn expected(&self, meta: &FitMeta, k: usize, t: crate::timemath::Timestamp) -> f64 {
        self.means[k][meta.phase(t, self.periodicity)]
    }

    /// Mean deviation of `rows` from the periodic averages, per label.
    fn offsets(&self, meta: &FitMeta, rows: &[Row<'_>]) -> Vec<f64> {
        (0..meta.labels.len())
            .map(|k| {
                let mut m = 0.0;
                for (n, r) in rows.iter().enumerate() {
                    m += (r.values[k] - self.expected(meta, k, r.t) - m) / (n + 1) as f64;
                }
                m
            })
            .collect()
    }
}

impl Model for PeriodicAverage {
    const KIND: &'static str = "periodic-average";

    fn window(&self) -> usize {
        self.window
    }

    fn fit(&mut self, data: &FitData<'_>) -> Result<()> {
        let p = self.periodicity;
        if p < 2 {
            return Err(Error::Invalid(format!("periodicity must be at least 2, got {p}")));
        }
        if data.len() < 2 * p {
            return Err(Error::NotEnoughData(format!(
                "fitting a periodicity of {p} needs at least {} elements, got {}",
                2 * p,
                data.len()
            )));
        }
        let labels = &data.meta.labels;
        let mut sorted: Vec<&String> = labels.iter().collect();
        sorted.sort();
        for l in sorted {
            info!("Using a window of \"{}\" for \"{l}\"", self.window);
        }
        let mut means = vec![vec![0.0; p]; labels.len()];
        let mut counts = vec![0usize; p];
        for r in data.usable_rows() {
            let phase = data.meta.phase(r.t, p);
            counts[phase] += 1;
            for (k, m) in means.iter_mut().enumerate() {
                m[phase] += (r.values[k] - m[phase]) / counts[phase] as f64;
            }
        }
        if let Some(phase) = counts.iter().position(|c| *c == 0) {
            return Err(Error::NotEnoughData(format!("no usable data for phase {phase} of {p}")));
        }
        self.means = means;
        Ok(())
    }
}

impl Forecaster for PeriodicAverage {
    fn predict(&self, ctx: &PredictContext<'_>) -> Result<Vec<f64>> {
        let offsets = self.offsets(ctx.meta, ctx.window);
        Ok(offsets.iter().enumerate().map(|(k, o)| self.expected(ctx.meta, k, ctx.target) + o).collect())
    }
}

impl Reconstructor for PeriodicAverage {
    fn reconstruct(&self, ctx: &GapContext<'_>) -> Result<Vec<Vec<f64>>> {
        let sides: Vec<Vec<f64>> = [ctx.before, ctx.after].into_iter().flatten().map(|r| self.offsets(ctx.meta, r)).collect();
        let offsets: Vec<f64> = (0..ctx.meta.labels.len())
            .map(|k| sides.iter().map(|s| s[k]).sum::<f64>() / sides.len().max(1) as f64)
            .collect();
        Ok(ctx
            .targets
            .iter()
            .map(|t| offsets.iter().enumerate().map(|(k, o)| self.expected(ctx.meta, k, *t) + o).collect())
            .collect())
    }
}

/// Lag of the highest autocorrelation peak, averaged over labels.
pub fn detect_periodicity<E: Element>(series: &TimeSeries<E>) -> Result<usize> {
    let n = series.len();
    if n < 6 {
        return Err(Error::NotEnoughData(format!("periodicity detection needs at least 6 elements, got {n}")));
    }
    let max_lag = n / 2;
    let mut acf = vec![0.0; max_lag + 2];
    let mut used = 0usize;
    for k in 0..series.labels().len() {
        let x: Vec<f64> = series.iter().map(|e| e.data()[k]).collect();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
        if var == 0.0 {
            continue;
        }
        used += 1;
        for (lag, a) in acf.iter_mut().enumerate().take(max_lag + 1).skip(1) {
            *a += (0..n - lag).map(|i| (x[i] - mean) * (x[i + lag] - mean)).sum::<f64>() / var;
        }
    }
    if used == 0 {
        return Err(Error::Invalid("cannot detect periodicity on constant data".into()));
    }
    (2..max_lag)
        .filter(|&l| acf[l] > acf[l - 1] && acf[l] >= acf[l + 1])
        .max_by(|&a, &b| acf[a].total_cmp(&acf[b]).then(b.cmp(&a)))
        .ok_or_else(|| Error::NotEnoughData("no autocorrelation peak found".into()))
}
