use std::path::Path;

use log::warn;

use super::{check_output, model_json, parse_model_file, read_text, rows, write_text, FitMeta, Fitted, GapContext, Reconstructor};
use crate::error::{Error, Result};
use crate::series::{Element, TimeSeries, DATA_RECONSTRUCTED};
use crate::timemath::Timestamp;

/// Framework wrapper turning a [`Reconstructor`] into a gap filler.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructorModel<R> {
    inner: Fitted<R>,
}

impl<R: Reconstructor> ReconstructorModel<R> {
    pub fn new(model: R) -> Self {
        ReconstructorModel { inner: Fitted { model, meta: None } }
    }

    pub fn model(&self) -> &R {
        &self.inner.model
    }

    pub fn meta(&self) -> Option<&FitMeta> {
        self.inner.meta.as_ref()
    }

    pub fn is_fitted(&self) -> bool {
        self.inner.meta.is_some()
    }

    /// Fits on a fixed-resolution series. Fully lost elements are excluded.
    pub fn fit<E: Element>(&mut self, series: &TimeSeries<E>) -> Result<()> {
        self.inner.fit(series)
    }

    /// Rebuilds every gap (maximal run of fully lost elements followed by
    /// at least one element) and marks it with the reconstructed index.
    ///
    /// Gaps at the tail, or without a full usable window on either side,
    /// are left as they are.
    pub fn apply<E: Element>(&self, series: &TimeSeries<E>) -> Result<TimeSeries<E>> {
        let meta = self.inner.meta()?;
        meta.check(series)?;
        let w = self.inner.model.window();
        let rows = rows(series.elements());
        let mut out = series.elements().to_vec();
        let mut i = 0;
        while i < rows.len() {
            if rows[i].usable {
                i += 1;
                continue;
            }
            let start = i;
            while i < rows.len() && !rows[i].usable {
                i += 1;
            }
            let end = i;
            if end == rows.len() {
                warn!("Gap starting at {} has no following element, leaving it untouched", rows[start].t);
                break;
            }
            let side = |r: std::ops::Range<usize>| {
                (r.end <= rows.len() && rows[r.clone()].iter().all(|x| x.usable)).then(|| &rows[r])
            };
            let before = (start >= w).then(|| side(start - w..start)).flatten();
            let after = side(end..end + w);
            if before.is_none() && after.is_none() {
                warn!(
                    "Gap from {} to {} has no usable window of {w} on either side, leaving it untouched",
                    rows[start].t,
                    rows[end - 1].t
                );
                continue;
            }
            let targets: Vec<Timestamp> = rows[start..end].iter().map(|r| r.t).collect();
            let values = self.inner.model.reconstruct(&GapContext { meta, before, after, targets: &targets })?;
            if values.len() != targets.len() {
                return Err(Error::ModelContract(format!(
                    "reconstruct returned {} rows for a gap of {}",
                    values.len(),
                    targets.len()
                )));
            }
            for (e, v) in out[start..end].iter_mut().zip(values) {
                check_output(meta, &v)?;
                *e.data_mut() = v;
                e.indexes_mut().put(DATA_RECONSTRUCTED, 1.0);
            }
        }
        Ok(series.rebuild(out))
    }

    pub fn to_json(&self) -> Result<String> {
        model_json(&kind::<R>(), self.inner.meta()?, &self.inner.model)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let (meta, model) = parse_model_file::<R>(text, &kind::<R>())?;
        Ok(ReconstructorModel { inner: Fitted { model, meta: Some(meta) } })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&read_text(path.as_ref())?)
    }
}

fn kind<R: Reconstructor>() -> String {
    format!("reconstructor/{}", R::KIND)
}
