//! Time series with calendar-aware time math, resampling, aggregation,
//! forecasting, reconstruction and anomaly detection.

pub mod error;
pub mod io;
pub mod models;
pub mod ops;
pub mod plot;
pub mod series;
pub mod timemath;
pub mod transform;

pub use error::{Error, Result};
pub use series::{
    AnySeries, DataIndexes, DataTimePoint, DataTimeSlot, DetectedResolution, Element, ElementKind, PointSeries,
    Resolution, Selection, Selector, SlotSeries, TimeSeries,
};
pub use timemath::{TimeUnit, TimeZone, Timestamp};
