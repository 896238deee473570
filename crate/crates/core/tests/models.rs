mod common;

use chronoseries::models::{
    detect_periodicity, AnomalyDetector, FitData, ForecasterModel, Forecaster, Metric, Model, PeriodicAverage,
    PredictContext, ReconstructorModel, MODEL_FORMAT,
};
use chronoseries::{DataIndexes, DataTimePoint, Element, Error, PointSeries, Result, TimeSeries, TimeZone};
use common::{hourly, periodic, unit};
use serde::{Deserialize, Serialize};

/// Averages the last two values with the fit-time mean.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct TwoStepMean {
    avg: Vec<f64>,
}

impl Model for TwoStepMean {
    const KIND: &'static str = "two-step-mean";

    fn window(&self) -> usize {
        2
    }

    fn fit(&mut self, data: &FitData<'_>) -> Result<()> {
        let rows: Vec<_> = data.usable_rows().collect();
        self.avg = (0..data.meta.labels.len())
            .map(|k| rows.iter().map(|r| r.values[k]).sum::<f64>() / rows.len() as f64)
            .collect();
        Ok(())
    }
}

impl Forecaster for TwoStepMean {
    fn predict(&self, ctx: &PredictContext<'_>) -> Result<Vec<f64>> {
        let w = ctx.window;
        Ok(self.avg.iter().enumerate().map(|(k, a)| (w[1].values[k] + w[0].values[k] + a) / 3.0).collect())
    }
}

/// Returns one value too few.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Broken;

impl Model for Broken {
    const KIND: &'static str = "broken";

    fn window(&self) -> usize {
        1
    }

    fn fit(&mut self, _: &FitData<'_>) -> Result<()> {
        Ok(())
    }
}

impl Forecaster for Broken {
    fn predict(&self, _: &PredictContext<'_>) -> Result<Vec<f64>> {
        Ok(Vec::new())
    }
}

fn lost(mut p: DataTimePoint) -> DataTimePoint {
    let mut ix = DataIndexes::new();
    ix.set("data_loss", 1.0).unwrap();
    p.indexes = ix;
    p
}

fn with_lost(series: &PointSeries, positions: &[usize], garbage: f64) -> PointSeries {
    let elements = series.elements().iter().enumerate().map(|(i, p)| {
        if positions.contains(&i) {
            lost(DataTimePoint::new(p.t, vec![garbage; p.data.len()]))
        } else {
            p.clone()
        }
    });
    TimeSeries::from_elements(series.labels().to_vec(), elements.collect::<Vec<_>>(), series.tz())
        .unwrap()
        .with_resolution(unit("1h"))
        .unwrap()
}

#[test]
fn periodic_means_per_phase() {
    let rows: Vec<Vec<f64>> = [10.0, 20.0, 30.0, 16.0, 26.0, 36.0, 10.0, 20.0, 30.0, 16.0, 26.0, 36.0]
        .iter()
        .map(|v| vec![*v])
        .collect();
    let s = hourly(&["v"], 0.0, &rows);
    let mut f = ForecasterModel::new(PeriodicAverage::new(3));
    f.fit(&s).unwrap();
    assert_eq!(f.model().means(), [vec![13.0, 23.0, 33.0]]);
}

#[test]
fn periodic_fit_needs_two_cycles() {
    let s = hourly(&["v"], 0.0, &(0..5).map(|i| vec![i as f64]).collect::<Vec<_>>());
    let mut f = ForecasterModel::new(PeriodicAverage::new(3));
    assert!(matches!(f.fit(&s), Err(Error::NotEnoughData(_))));
    let mut f = ForecasterModel::new(PeriodicAverage::new(1));
    assert!(matches!(f.fit(&s), Err(Error::Invalid(_))));
}

#[test]
fn fit_skips_fully_lost_elements() {
    let data = periodic(4);
    let corrupted = with_lost(&data, &[5, 30, 31], 1e6);
    let mut clean = ForecasterModel::new(PeriodicAverage::new(24));
    clean.fit(&data).unwrap();
    let mut dirty = ForecasterModel::new(PeriodicAverage::new(24));
    dirty.fit(&corrupted).unwrap();
    assert_eq!(clean.model().means(), dirty.model().means());
}

#[test]
fn forecast_continues_the_cycle() {
    let data = periodic(5);
    let mut f = ForecasterModel::new(PeriodicAverage::new(24));
    f.fit(&data).unwrap();
    let predicted = f.predict(&data, 30).unwrap();
    for (i, row) in predicted.iter().enumerate() {
        let h = (i % 24) as f64;
        assert_eq!(row, &vec![10.0 + h, 50.0 - (h - 12.0).abs()]);
    }
    let extended = f.apply(&data, 3).unwrap();
    assert_eq!(extended.len(), data.len() + 3);
    let tail = &extended.elements()[data.len()..];
    assert!(tail.iter().all(|p| p.indexes.get("forecast") == Some(1.0)));
    assert_eq!(tail[0].t.0, data.last().unwrap().t.0 + 3600.0);
    assert!(data.iter().all(|p| p.indexes.get("forecast").is_none()));
}

#[test]
fn forecast_requires_fit_and_window() {
    let data = periodic(3);
    let f = ForecasterModel::new(PeriodicAverage::new(24));
    assert!(matches!(f.predict(&data, 1), Err(Error::NotFitted)));
    let mut f = ForecasterModel::new(PeriodicAverage::new(24));
    f.fit(&data).unwrap();
    let short = data.slice_positions(0..10).unwrap();
    assert!(matches!(f.predict(&short, 1), Err(Error::WindowTooShort { len: 10, window: 24 })));
}

#[test]
fn forecast_rejects_other_labels() {
    let data = periodic(3);
    let mut f = ForecasterModel::new(PeriodicAverage::new(24));
    f.fit(&data).unwrap();
    let other = hourly(&["x", "y"], 0.0, &vec![vec![1.0, 2.0]; 30]);
    assert!(matches!(f.predict(&other, 1), Err(Error::LabelMismatch { .. })));
}

#[test]
fn variable_resolution_cannot_be_fitted() {
    let s = TimeSeries::from_elements(
        ["v"],
        [0.0, 10.0, 25.0, 60.0].iter().map(|t| DataTimePoint::new(*t, vec![1.0])),
        TimeZone::UTC,
    )
    .unwrap();
    let mut f = ForecasterModel::new(PeriodicAverage::new(2));
    assert!(matches!(f.fit(&s), Err(Error::VariableResolution)));
}

#[test]
fn custom_forecaster_uses_framework() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
    let s = hourly(&["a", "b"], 0.0, &rows);
    let mut f = ForecasterModel::new(TwoStepMean::default());
    f.fit(&s).unwrap();
    assert_eq!(f.model().avg, [4.5, 9.0]);
    let next = f.predict(&s, 1).unwrap();
    assert_eq!(next, [vec![(9.0 + 8.0 + 4.5) / 3.0, (18.0 + 16.0 + 9.0) / 3.0]]);
    let report = f.evaluate(&s, &[Metric::Mae]).unwrap();
    let expected: f64 = (2..10).map(|i| (i as f64 - ((i - 1) as f64 + (i - 2) as f64 + 4.5) / 3.0).abs()).sum::<f64>() / 8.0;
    assert!((report["a_MAE"] - expected).abs() < 1e-12);

    let json = f.to_json().unwrap();
    let back = ForecasterModel::<TwoStepMean>::from_json(&json).unwrap();
    assert_eq!(back.predict(&s, 2).unwrap(), f.predict(&s, 2).unwrap());

    let mut detector = AnomalyDetector::new(TwoStepMean::default());
    detector.fit(&s).unwrap();
    let scored = detector.apply(&s).unwrap();
    assert!(scored.iter().skip(2).all(|p| p.indexes.get("anomaly").is_some()));
    assert!(scored.iter().take(2).all(|p| p.indexes.get("anomaly").is_none()));
}

#[test]
fn contract_violations_are_reported() {
    let data = periodic(2);
    let mut f = ForecasterModel::new(Broken);
    f.fit(&data).unwrap();
    assert!(matches!(f.predict(&data, 1), Err(Error::ModelContract(_))));
}

#[test]
fn reconstruction_fills_gaps_exactly() {
    let data = periodic(6);
    let holed = with_lost(&data, &[50, 51, 52, 53, 100], 0.0);
    let mut r = ReconstructorModel::new(PeriodicAverage::new(24));
    r.fit(&holed).unwrap();
    let rebuilt = r.apply(&holed).unwrap();
    for i in [50, 51, 52, 53, 100] {
        assert_eq!(rebuilt[i].data, data[i].data);
        assert_eq!(rebuilt[i].indexes.get("data_reconstructed"), Some(1.0));
        assert_eq!(rebuilt[i].data_loss(), Some(1.0));
    }
    let marked = rebuilt.iter().filter(|p| p.indexes.get("data_reconstructed").is_some()).count();
    assert_eq!(marked, 5);
}

#[test]
fn reconstruction_leaves_tail_gaps() {
    let data = periodic(3);
    let n = data.len();
    let holed = with_lost(&data, &[n - 2, n - 1], 0.0);
    let mut r = ReconstructorModel::new(PeriodicAverage::new(24));
    r.fit(&holed).unwrap();
    let rebuilt = r.apply(&holed).unwrap();
    assert_eq!(rebuilt, holed);
}

#[test]
fn anomaly_detector_skips_lost_elements() {
    let data = with_lost(&periodic(4), &[60], 0.0);
    let mut d = AnomalyDetector::new(PeriodicAverage::new(24));
    d.fit(&data).unwrap();
    let scored = d.apply(&data).unwrap();
    assert!(scored[60].indexes.get("anomaly").is_none());
    assert!(scored.iter().all(|p| p.indexes.get("anomaly").is_none_or(|a| (0.0..=1.0).contains(&a))));
}

#[test]
fn model_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = periodic(4);
    let mut d = AnomalyDetector::new(PeriodicAverage::new(24));
    d.fit(&data).unwrap();
    let path = dir.path().join("detector.json");
    d.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["format"], MODEL_FORMAT);
    assert_eq!(doc["kind"], "anomaly-detector/periodic-average");
    let back = AnomalyDetector::<PeriodicAverage>::load(&path).unwrap();
    assert_eq!(back, d);

    assert!(matches!(ForecasterModel::<PeriodicAverage>::from_json(&text), Err(Error::KindMismatch(_))));
    let bumped = text.replace(MODEL_FORMAT, "cs-model v9");
    assert!(matches!(AnomalyDetector::<PeriodicAverage>::from_json(&bumped), Err(Error::VersionMismatch { .. })));
    assert!(matches!(ForecasterModel::new(PeriodicAverage::new(24)).to_json(), Err(Error::NotFitted)));
}

#[test]
fn cross_validation_reports_per_label_statistics() {
    let data = periodic(9);
    let f = ForecasterModel::new(PeriodicAverage::new(24));
    let report = f.cross_validate(&data, 3, &[Metric::Rmse, Metric::Mape]).unwrap();
    assert_eq!(report.len(), 8);
    assert!(report.values().all(|v| *v == 0.0));
    assert!(f.cross_validate(&data, 1, &[Metric::Rmse]).is_err());
    assert!(matches!(f.cross_validate(&data, 20, &[Metric::Rmse]), Err(Error::WindowTooShort { .. })));
}

#[test]
fn metrics() {
    let pairs = [(1.0, 2.0), (2.0, 2.0), (4.0, 1.0)];
    assert_eq!(Metric::Mae.compute(&pairs).unwrap(), 4.0 / 3.0);
    assert_eq!(Metric::Rmse.compute(&pairs).unwrap(), (10.0f64 / 3.0).sqrt());
    assert_eq!(Metric::Mape.compute(&pairs).unwrap(), (1.0 + 0.0 + 0.75) / 3.0);
    assert_eq!(Metric::parse_list("rmse,MAE").unwrap(), [Metric::Rmse, Metric::Mae]);
    assert!(Metric::parse_list("mse").is_err());
}

#[test]
fn periodicity_detection() {
    assert_eq!(detect_periodicity(&periodic(10)).unwrap(), 24);
}
