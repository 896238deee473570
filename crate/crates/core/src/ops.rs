//! Operations that keep the temporal resolution of a series.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::series::{DataIndexes, Element, Resolution, TimeSeries, DATA_LOSS};

pub type LabelValues = BTreeMap<String, f64>;

fn non_empty<E: Element>(series: &TimeSeries<E>) -> Result<()> {
    if series.is_empty() {
        return Err(Error::NotEnoughData("the series is empty".into()));
    }
    Ok(())
}

fn at_least_two<E: Element>(series: &TimeSeries<E>) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::NotEnoughData(format!("need at least 2 elements, series has {}", series.len())));
    }
    Ok(())
}

fn per_label<E: Element>(series: &TimeSeries<E>, f: impl Fn(&mut dyn Iterator<Item = f64>) -> f64) -> Result<LabelValues> {
    non_empty(series)?;
    Ok(series
        .labels()
        .iter()
        .enumerate()
        .map(|(k, l)| (l.clone(), f(&mut series.iter().map(|e| e.data()[k]))))
        .collect())
}

pub fn min<E: Element>(series: &TimeSeries<E>) -> Result<LabelValues> {
    per_label(series, |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min))
}

pub fn max<E: Element>(series: &TimeSeries<E>) -> Result<LabelValues> {
    per_label(series, |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max))
}

pub fn sum<E: Element>(series: &TimeSeries<E>) -> Result<LabelValues> {
    per_label(series, |it: &mut dyn Iterator<Item = f64>| it.sum())
}

/// Unweighted arithmetic mean per label.
pub fn avg<E: Element>(series: &TimeSeries<E>) -> Result<LabelValues> {
    let n = series.len() as f64;
    per_label(series, |it: &mut dyn Iterator<Item = f64>| it.sum::<f64>() / n)
}

fn map_values<E: Element>(series: &TimeSeries<E>, f: impl Fn(usize, f64) -> f64) -> TimeSeries<E> {
    let elements = series
        .iter()
        .map(|e| {
            let mut out = e.clone();
            for (k, v) in out.data_mut().iter_mut().enumerate() {
                *v = f(k, *v);
            }
            out
        })
        .collect();
    series.rebuild(elements)
}

/// Successive differences; the first element is dropped.
pub fn diff<E: Element>(series: &TimeSeries<E>) -> Result<TimeSeries<E>> {
    at_least_two(series)?;
    let elements = series
        .elements()
        .windows(2)
        .map(|w| {
            let mut out = w[1].clone();
            for (k, v) in out.data_mut().iter_mut().enumerate() {
                *v -= w[0].data()[k];
            }
            out
        })
        .collect();
    Ok(series.rebuild(elements))
}

/// Running sum.
pub fn csum<E: Element>(series: &TimeSeries<E>) -> Result<TimeSeries<E>> {
    non_empty(series)?;
    let mut acc = vec![0.0; series.labels().len()];
    let elements = series
        .iter()
        .map(|e| {
            let mut out = e.clone();
            for (k, v) in out.data_mut().iter_mut().enumerate() {
                acc[k] += *v;
                *v = acc[k];
            }
            out
        })
        .collect();
    Ok(series.rebuild(elements))
}

fn fixed_resolution<E: Element>(series: &TimeSeries<E>) -> Result<()> {
    at_least_two(series)?;
    if series.resolution() == Resolution::Variable {
        return Err(Error::VariableResolution);
    }
    Ok(())
}

fn duration<E: Element>(a: &E, b: &E) -> f64 {
    b.t().since(a.t())
}

/// Differences divided by the actual seconds between each pair.
pub fn derivative<E: Element>(series: &TimeSeries<E>) -> Result<TimeSeries<E>> {
    fixed_resolution(series)?;
    let elements = series
        .elements()
        .windows(2)
        .map(|w| {
            let dt = duration(&w[0], &w[1]);
            let mut out = w[1].clone();
            for (k, v) in out.data_mut().iter_mut().enumerate() {
                *v = (*v - w[0].data()[k]) / dt;
            }
            out
        })
        .collect();
    Ok(series.rebuild(elements))
}

/// Running trapezoidal integral in value-seconds, starting at 0.
pub fn integral<E: Element>(series: &TimeSeries<E>) -> Result<TimeSeries<E>> {
    fixed_resolution(series)?;
    let src = series.elements();
    let mut acc = vec![0.0; series.labels().len()];
    let mut elements = Vec::with_capacity(src.len());
    for (i, e) in src.iter().enumerate() {
        if i > 0 {
            let dt = duration(&src[i - 1], e);
            for (k, a) in acc.iter_mut().enumerate() {
                *a += (src[i - 1].data()[k] + e.data()[k]) / 2.0 * dt;
            }
        }
        let mut out = e.clone();
        out.data_mut().copy_from_slice(&acc);
        elements.push(out);
    }
    Ok(series.rebuild(elements))
}

/// Maps each label onto `[0, 1]` through its own min and max.
pub fn normalize<E: Element>(series: &TimeSeries<E>) -> Result<TimeSeries<E>> {
    let (lo, hi) = (min(series)?, max(series)?);
    let mut bounds = Vec::new();
    for l in series.labels() {
        let (a, b) = (lo[l], hi[l]);
        if a == b {
            return Err(Error::ConstantLabel(l.clone()));
        }
        bounds.push((a, b));
    }
    Ok(map_values(series, |k, v| {
        let (a, b) = bounds[k];
        ((v - a) / (b - a)).clamp(0.0, 1.0)
    }))
}

fn finite(value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::Invalid(format!("parameter {value} is not finite")));
    }
    Ok(value)
}

pub fn offset<E: Element>(series: &TimeSeries<E>, by: f64) -> Result<TimeSeries<E>> {
    let by = finite(by)?;
    Ok(map_values(series, |_, v| v + by))
}

pub fn rescale<E: Element>(series: &TimeSeries<E>, by: f64) -> Result<TimeSeries<E>> {
    let by = finite(by)?;
    Ok(map_values(series, |_, v| v * by))
}

/// Trailing moving average over `window` elements.
pub fn mavg<E: Element>(series: &TimeSeries<E>, window: usize) -> Result<TimeSeries<E>> {
    if window == 0 || window > series.len() {
        return Err(Error::Invalid(format!("moving average window {window} for a series of {}", series.len())));
    }
    let src = series.elements();
    let elements = (window - 1..src.len())
        .map(|i| {
            let mut out = src[i].clone();
            for (k, v) in out.data_mut().iter_mut().enumerate() {
                *v = src[i + 1 - window..=i].iter().map(|e| e.data()[k]).sum::<f64>() / window as f64;
            }
            out
        })
        .collect();
    Ok(series.rebuild(elements))
}

/// Labels kept as given, in order.
pub fn filter<E: Element, S: AsRef<str>>(series: &TimeSeries<E>, labels: &[S]) -> Result<TimeSeries<E>> {
    series.filter(labels)
}

/// Elements with timestamps in `[from, to)`.
pub fn slice<E: Element>(series: &TimeSeries<E>, from: f64, to: f64) -> Result<TimeSeries<E>> {
    series.slice_time(from, to)
}

/// Joins series sharing a time grid into one series over the union of
/// their labels, restricted to the common time range.
///
/// `data_loss` becomes the maximum across inputs. Other indexes are kept
/// as is when all inputs agree, otherwise each input's value is stored
/// under `<index>_<first label of that input>`.
pub fn merge<E: Element>(series: &[&TimeSeries<E>]) -> Result<TimeSeries<E>> {
    let (first, rest) = series.split_first().ok_or_else(|| Error::Merge("nothing to merge".into()))?;
    if rest.is_empty() {
        return Ok((*first).clone());
    }
    let mut labels: Vec<String> = Vec::new();
    let mut dupes: Vec<String> = Vec::new();
    for s in series {
        if s.tz() != first.tz() {
            return Err(Error::Merge(format!("time zones differ: {} and {}", first.tz(), s.tz())));
        }
        if s.resolution() != first.resolution() {
            return Err(Error::Merge(format!(
                "resolutions differ: {} and {}",
                first.resolution(),
                s.resolution()
            )));
        }
        if s.is_empty() {
            return Err(Error::Merge("cannot merge an empty series".into()));
        }
        for l in s.labels() {
            if labels.contains(l) {
                dupes.push(l.clone());
            } else {
                labels.push(l.clone());
            }
        }
    }
    if !dupes.is_empty() {
        return Err(Error::Merge(format!("duplicate labels: {}", dupes.join(", "))));
    }
    let from = series.iter().map(|s| s[0].t().0).fold(f64::NEG_INFINITY, f64::max);
    let to = series.iter().map(|s| s.last().expect("non-empty").t().0).fold(f64::INFINITY, f64::min);
    if from > to {
        return Err(Error::Merge("the series do not overlap in time".into()));
    }
    let parts: Vec<&[E]> = series
        .iter()
        .map(|s| {
            let a = s.lower_bound(from.into());
            let b = s.elements().partition_point(|e| e.t().0 <= to);
            &s.elements()[a..b]
        })
        .collect();
    let n = parts[0].len();
    for (p, s) in parts.iter().zip(series) {
        if p.len() != n || p.iter().zip(parts[0]).any(|(a, b)| a.t() != b.t() || a.end() != b.end()) {
            return Err(Error::Merge(format!(
                "series labelled [{}] is not on the same time grid",
                s.labels().join(", ")
            )));
        }
    }
    let tags: Vec<String> = series
        .iter()
        .map(|s| s.labels().iter().min().cloned().unwrap_or_default())
        .collect();
    let elements = (0..n)
        .map(|i| {
            let row: Vec<&E> = parts.iter().map(|p| &p[i]).collect();
            let data = row.iter().flat_map(|e| e.data().iter().copied()).collect();
            let mut out = row[0].with_data(data);
            *out.indexes_mut() = merge_indexes(&row, &tags);
            out
        })
        .collect();
    Ok(first.rebuild_labeled(labels, elements))
}

fn merge_indexes<E: Element>(row: &[&E], tags: &[String]) -> DataIndexes {
    let mut names: Vec<&str> = row.iter().flat_map(|e| e.indexes().names()).collect();
    names.sort_unstable();
    names.dedup();
    let mut out = DataIndexes::new();
    for name in names {
        let values: Vec<Option<f64>> = row.iter().map(|e| e.indexes().get(name)).collect();
        if name == DATA_LOSS {
            let m = values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
            out.put(name, m);
        } else if values.iter().all(|v| *v == values[0]) {
            out.put(name, values[0].expect("present on some element"));
        } else {
            for (v, tag) in values.iter().zip(tags) {
                if let Some(v) = v {
                    out.put(&format!("{name}_{tag}"), *v);
                }
            }
        }
    }
    out
}
