//! Station metadata and observation loading, gap cleaning, min-max scaling
//! and sliding-window sample construction.
//!
//! Missing observations are represented as `f64::NAN` throughout.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::Range;
use std::path::Path;

use chrono::{NaiveDateTime, Timelike};
use ndarray::{s, Array2, Array3, ArrayView3, Axis};

use crate::error::{Error, Result};
use crate::fusion::FusionMatrix;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// A monitoring point and the targets its source type measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: String,
    pub source_id: String,
    pub x: f64,
    pub y: f64,
    pub targets: Vec<String>,
}

impl Station {
    pub fn measures(&self, target: &str) -> bool {
        self.targets.iter().any(|t| t == target)
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Time-aligned hourly observations, `values[[t, s, k]]`.
#[derive(Debug, Clone)]
pub struct ObservationPanel {
    pub timestamps: Vec<NaiveDateTime>,
    pub stations: Vec<Station>,
    pub target_ids: Vec<String>,
    pub values: Array3<f64>,
}

impl ObservationPanel {
    /// Builds a panel after checking the hourly timeline and array shape.
    pub fn new(
        timestamps: Vec<NaiveDateTime>,
        stations: Vec<Station>,
        target_ids: Vec<String>,
        values: Array3<f64>,
    ) -> Result<Self> {
        check_hourly(&timestamps)?;
        let expected = (timestamps.len(), stations.len(), target_ids.len());
        if values.dim() != expected {
            let d = values.dim();
            return Err(Error::shape(
                "ObservationPanel::new",
                &[d.0, d.1, d.2],
                &[expected.0, expected.1, expected.2],
            ));
        }
        Ok(Self {
            timestamps,
            stations,
            target_ids,
            values,
        })
    }

    pub fn n_times(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    pub fn n_targets(&self) -> usize {
        self.target_ids.len()
    }

    /// `native[[s, k]]` is true when station `s` measures target `k`.
    pub fn native_mask(&self) -> Array2<bool> {
        native_mask(&self.stations, &self.target_ids)
    }

    pub fn target_index(&self, target: &str) -> Option<usize> {
        self.target_ids.iter().position(|t| t == target)
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }
}

pub(crate) fn native_mask(stations: &[Station], target_ids: &[String]) -> Array2<bool> {
    Array2::from_shape_fn((stations.len(), target_ids.len()), |(s, k)| {
        stations[s].measures(&target_ids[k])
    })
}

pub fn parse_timestamp(raw: &str) -> std::result::Result<NaiveDateTime, String> {
    let raw = raw.trim();
    for fmt in [
        TIMESTAMP_FORMAT,
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(ts) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Ok(ts);
        }
    }
    Err(format!("unparseable timestamp {raw:?}"))
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

pub(crate) fn check_hourly(timestamps: &[NaiveDateTime]) -> Result<()> {
    for pair in timestamps.windows(2) {
        if pair[1] - pair[0] != chrono::Duration::hours(1) {
            return Err(Error::Validation(format!(
                "timestamps must advance by exactly one hour ({} -> {})",
                format_timestamp(&pair[0]),
                format_timestamp(&pair[1])
            )));
        }
    }
    Ok(())
}

pub(crate) fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

pub(crate) fn check_header(path: &Path, rdr: &mut csv::Reader<std::fs::File>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header {:?}, found {:?}", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

/// Reads `station_id,source_id,x,y,targets` where `targets` is `|`-separated.
pub fn load_stations(path: impl AsRef<Path>) -> Result<Vec<Station>> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    check_header(path, &mut rdr, &["station_id", "source_id", "x", "y", "targets"])?;

    let mut stations = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if record.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, found {}", record.len())));
        }
        let coord = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = record[i]
                .parse()
                .map_err(|_| parse_err(format!("invalid {name} {:?}", &record[i])))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite {name}")));
            }
            Ok(v)
        };
        let x = coord(2, "x")?;
        let y = coord(3, "y")?;
        let targets: Vec<String> = record[4]
            .split('|')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(String::from)
            .collect();
        if targets.is_empty() {
            return Err(parse_err("station lists no targets".into()));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_err("empty station_id".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate station id {id:?} at line {line}"
            )));
        }
        stations.push(Station {
            id,
            source_id: record[1].to_string(),
            x,
            y,
            targets,
        });
    }
    Ok(stations)
}

/// Target ids in order of first appearance across the station list.
pub fn target_union(stations: &[Station]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for st in stations {
        for t in &st.targets {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
    }
    out
}

/// Reads `timestamp,station_id,target_id,value` rows into a panel spanning the
/// first to the last timestamp at hourly resolution. Empty values and hours
/// without a row are missing.
pub fn load_observations(path: impl AsRef<Path>, stations: &[Station]) -> Result<ObservationPanel> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    check_header(path, &mut rdr, &["timestamp", "station_id", "target_id", "value"])?;

    let station_idx: HashMap<&str, usize> = stations
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let target_ids = target_union(stations);
    let target_idx: HashMap<&str, usize> = target_ids
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();

    let mut rows: Vec<(NaiveDateTime, usize, usize, f64)> = Vec::new();
    let mut times = BTreeSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if record.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, found {}", record.len())));
        }
        let ts = parse_timestamp(&record[0]).map_err(parse_err)?;
        if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
            return Err(Error::Validation(format!(
                "line {line}: timestamp {} is not on the hour",
                &record[0]
            )));
        }
        let s = *station_idx.get(&record[1]).ok_or_else(|| {
            Error::Validation(format!("line {line}: unknown station_id {:?}", &record[1]))
        })?;
        let k = *target_idx
            .get(&record[2])
            .filter(|&&k| stations[s].measures(&target_ids[k]))
            .ok_or_else(|| {
                Error::Validation(format!(
                    "line {line}: station {:?} does not measure target {:?}",
                    &record[1], &record[2]
                ))
            })?;
        let value = if record[3].is_empty() {
            f64::NAN
        } else {
            record[3]
                .parse::<f64>()
                .map_err(|_| parse_err(format!("invalid value {:?}", &record[3])))?
        };
        times.insert(ts);
        rows.push((ts, s, k, value));
    }

    let timestamps: Vec<NaiveDateTime> = match (times.first(), times.last()) {
        (Some(&first), Some(&last)) => {
            let hours = (last - first).num_hours() as usize;
            (0..=hours)
                .map(|h| first + chrono::Duration::hours(h as i64))
                .collect()
        }
        _ => Vec::new(),
    };
    let t0 = timestamps.first().copied();
    let mut values = Array3::from_elem((timestamps.len(), stations.len(), target_ids.len()), f64::NAN);
    let mut seen = HashSet::new();
    for (ts, s, k, v) in rows {
        let t = (ts - t0.expect("non-empty")).num_hours() as usize;
        if !seen.insert((t, s, k)) {
            return Err(Error::Validation(format!(
                "duplicate observation for station {:?}, target {:?} at {}",
                stations[s].id,
                target_ids[k],
                format_timestamp(&ts)
            )));
        }
        values[[t, s, k]] = v;
    }

    ObservationPanel::new(timestamps, stations.to_vec(), target_ids, values)
}

/// Linearly fills interior runs of missing values no longer than `max_gap`.
/// Leading and trailing gaps are left untouched.
pub fn fill_short_gaps(series: &mut [f64], max_gap: usize) {
    let mut last_obs: Option<usize> = None;
    for i in 0..series.len() {
        if series[i].is_nan() {
            continue;
        }
        if let Some(prev) = last_obs {
            let gap = i - prev - 1;
            if gap > 0 && gap <= max_gap {
                let (a, b) = (series[prev], series[i]);
                let span = (i - prev) as f64;
                for j in prev + 1..i {
                    let frac = (j - prev) as f64 / span;
                    series[j] = a + (b - a) * frac;
                }
            }
        }
        last_obs = Some(i);
    }
}

/// Gap-fills every natively measured (station, target) series.
pub fn clean_panel(panel: &ObservationPanel, max_gap: usize) -> ObservationPanel {
    let mut out = panel.clone();
    let native = panel.native_mask();
    let mut buf = vec![0.0; panel.n_times()];
    for ((s, k), &is_native) in native.indexed_iter() {
        if !is_native {
            continue;
        }
        let mut lane = out.values.slice_mut(s![.., s, k]);
        for (b, v) in buf.iter_mut().zip(lane.iter()) {
            *b = *v;
        }
        fill_short_gaps(&mut buf, max_gap);
        for (v, b) in lane.iter_mut().zip(buf.iter()) {
            *v = *b;
        }
    }
    out
}

/// Per-target min/max fitted on a time range.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationParams {
    pub target_ids: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    /// Fits min/max per target over `values[train_range, .., k]`, skipping NaN.
    pub fn fit(values: ArrayView3<'_, f64>, target_ids: &[String], train_range: Range<usize>) -> Result<Self> {
        let (t, _, k) = values.dim();
        if train_range.is_empty() || train_range.end > t {
            return Err(Error::Validation(format!(
                "training range {train_range:?} is empty or exceeds {t} time steps"
            )));
        }
        if target_ids.len() != k {
            return Err(Error::shape("NormalizationParams::fit", &[target_ids.len()], &[k]));
        }
        let window = values.slice(s![train_range, .., ..]);
        let mut min = Vec::with_capacity(k);
        let mut max = Vec::with_capacity(k);
        for (ki, lane) in window.axis_iter(Axis(2)).enumerate() {
            let (lo, hi) = lane
                .iter()
                .filter(|v| !v.is_nan())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if lo > hi {
                return Err(Error::MissingData(format!(
                    "target {:?} has no observations in the training range",
                    target_ids[ki]
                )));
            }
            min.push(lo);
            max.push(hi);
        }
        Ok(Self {
            target_ids: target_ids.to_vec(),
            min,
            max,
        })
    }

    pub fn apply_value(&self, k: usize, v: f64) -> f64 {
        let span = self.max[k] - self.min[k];
        if span == 0.0 {
            if v.is_nan() {
                v
            } else {
                0.0
            }
        } else {
            (v - self.min[k]) / span
        }
    }

    pub fn invert_value(&self, k: usize, v: f64) -> f64 {
        v * (self.max[k] - self.min[k]) + self.min[k]
    }

    /// Scales a T×S×K array in place (NaN stays NaN).
    pub fn apply_in_place(&self, values: &mut Array3<f64>) {
        for ((_, _, k), v) in values.indexed_iter_mut() {
            *v = self.apply_value(k, *v);
        }
    }

    pub fn index_of(&self, target: &str) -> Option<usize> {
        self.target_ids.iter().position(|t| t == target)
    }
}

pub fn fit_normalization(panel: &ObservationPanel, train_range: Range<usize>) -> Result<NormalizationParams> {
    NormalizationParams::fit(panel.values.view(), &panel.target_ids, train_range)
}

pub fn apply_normalization(panel: &ObservationPanel, params: &NormalizationParams) -> ObservationPanel {
    let mut out = panel.clone();
    params.apply_in_place(&mut out.values);
    out
}

/// Maps scaled values of target `k` back to original units.
pub fn invert_normalization(values: &[f64], k: usize, params: &NormalizationParams) -> Vec<f64> {
    values.iter().map(|&v| params.invert_value(k, v)).collect()
}

/// Chronological train/validation/test ranges over window indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl Split {
    pub fn from_fractions(n: usize, fracs: (f64, f64, f64)) -> Result<Self> {
        let (a, b, c) = fracs;
        if [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions {fracs:?} must be in [0, 1] and sum to 1"
            )));
        }
        let n_train = ((a * n as f64).round() as usize).min(n);
        let n_val = ((b * n as f64).round() as usize).min(n - n_train);
        Ok(Self {
            train: 0..n_train,
            val: n_train..n_train + n_val,
            test: n_train + n_val..n,
        })
    }
}

/// Sliding windows over a dense T×S×K array. Window `i` consumes times
/// `starts[i] .. starts[i] + history` and targets the predicted channel over
/// the following `horizon` steps.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    pub data: Array3<f64>,
    pub starts: Vec<usize>,
    pub history: usize,
    pub horizon: usize,
    pub target_channel: usize,
    pub target_id: String,
    pub split: Split,
    pub dropped: usize,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn n_stations(&self) -> usize {
        self.data.dim().1
    }

    pub fn n_channels(&self) -> usize {
        self.data.dim().2
    }

    /// P×S×K input of window `i`.
    pub fn input(&self, i: usize) -> ArrayView3<'_, f64> {
        let t0 = self.starts[i];
        self.data.slice(s![t0..t0 + self.history, .., ..])
    }

    /// Q×S target of window `i`.
    pub fn target(&self, i: usize) -> Array2<f64> {
        let t0 = self.starts[i] + self.history;
        self.data
            .slice(s![t0..t0 + self.horizon, .., self.target_channel])
            .to_owned()
    }

    /// Time index of the last input step of window `i`.
    pub fn end_time(&self, i: usize) -> usize {
        self.starts[i] + self.history - 1
    }
}

/// Slices stride-1 windows out of `fused`, dropping any that touch a missing
/// value, then splits them chronologically.
pub fn make_windows(
    fused: &FusionMatrix,
    history: usize,
    horizon: usize,
    predicted_target: &str,
    split_fracs: (f64, f64, f64),
) -> Result<WindowedDataset> {
    windows_from_values(
        fused.values.clone(),
        &fused.target_order,
        history,
        horizon,
        predicted_target,
        split_fracs,
    )
}

pub(crate) fn windows_from_values(
    data: Array3<f64>,
    target_ids: &[String],
    history: usize,
    horizon: usize,
    predicted_target: &str,
    split_fracs: (f64, f64, f64),
) -> Result<WindowedDataset> {
    if history == 0 || horizon == 0 {
        return Err(Error::Config("history and horizon must both be at least 1".into()));
    }
    let t = data.dim().0;
    if t < history + horizon {
        return Err(Error::Validation(format!(
            "series of length {t} is shorter than history {history} + horizon {horizon}"
        )));
    }
    let target_channel = target_ids
        .iter()
        .position(|id| id == predicted_target)
        .ok_or_else(|| Error::Config(format!("unknown predicted target {predicted_target:?}")))?;

    // a time step is complete when every station/channel is present
    let complete: Vec<bool> = data
        .axis_iter(Axis(0))
        .map(|frame| frame.iter().all(|v| !v.is_nan()))
        .collect();
    let span = history + horizon;
    let mut starts = Vec::new();
    let mut dropped = 0;
    for start in 0..=t - span {
        if complete[start..start + span].iter().all(|&c| c) {
            starts.push(start);
        } else {
            dropped += 1;
        }
    }
    let split = Split::from_fractions(starts.len(), split_fracs)?;
    Ok(WindowedDataset {
        data,
        starts,
        history,
        horizon,
        target_channel,
        target_id: predicted_target.to_string(),
        split,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const STATIONS: &str = "station_id,source_id,x,y,targets\n\
        aq_01,aq,0.0,0.0,pm25\n\
        met_01,met,1.0,0.0,temp|rh\n";

    #[test]
    fn header_only_gives_no_stations() {
        let f = write_tmp("station_id,source_id,x,y,targets\n");
        assert!(load_stations(f.path()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_station_rejected() {
        let f = write_tmp(
            "station_id,source_id,x,y,targets\naq_01,aq,0,0,pm25\naq_01,aq,1,1,pm25\n",
        );
        assert!(matches!(load_stations(f.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_row_names_line() {
        let f = write_tmp("station_id,source_id,x,y,targets\naq_01,aq,0,0,pm25\naq_02,aq,abc,0,pm25\n");
        match load_stations(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimal_observation_panel() {
        let st = write_tmp("station_id,source_id,x,y,targets\ns1,a,0,0,t\n");
        let stations = load_stations(st.path()).unwrap();
        let obs = write_tmp(
            "timestamp,station_id,target_id,value\n\
             2020-01-01T00:00:00,s1,t,1.5\n\
             2020-01-01T01:00:00,s1,t,\n\
             2020-01-01T02:00:00,s1,t,2.5\n",
        );
        let panel = load_observations(obs.path(), &stations).unwrap();
        assert_eq!(panel.values.dim(), (3, 1, 1));
        assert_eq!(panel.values[[0, 0, 0]], 1.5);
        assert!(panel.values[[1, 0, 0]].is_nan());
    }

    #[test]
    fn unknown_station_and_off_hour_rejected() {
        let st = write_tmp(STATIONS);
        let stations = load_stations(st.path()).unwrap();
        let obs = write_tmp("timestamp,station_id,target_id,value\n2020-01-01T00:00:00,zz,pm25,1\n");
        assert!(matches!(load_observations(obs.path(), &stations), Err(Error::Validation(_))));
        let obs = write_tmp("timestamp,station_id,target_id,value\n2020-01-01T00:30:00,aq_01,pm25,1\n");
        assert!(matches!(load_observations(obs.path(), &stations), Err(Error::Validation(_))));
    }

    #[test]
    fn missing_hours_are_padded() {
        let st = write_tmp(STATIONS);
        let stations = load_stations(st.path()).unwrap();
        let obs = write_tmp(
            "timestamp,station_id,target_id,value\n\
             2020-01-01T00:00:00,aq_01,pm25,1\n\
             2020-01-01T03:00:00,met_01,rh,4\n",
        );
        let panel = load_observations(obs.path(), &stations).unwrap();
        assert_eq!(panel.n_times(), 4);
        assert_eq!(panel.target_ids, vec!["pm25", "temp", "rh"]);
        assert_eq!(panel.values[[3, 1, 2]], 4.0);
    }

    #[test]
    fn gap_filling_rules() {
        let nan = f64::NAN;
        let mut a = vec![10.0, nan, nan, 16.0];
        fill_short_gaps(&mut a, 3);
        assert_eq!(a, vec![10.0, 12.0, 14.0, 16.0]);

        let mut b = vec![10.0, nan, nan, nan, nan, 20.0];
        fill_short_gaps(&mut b, 3);
        assert!(b[1..5].iter().all(|v| v.is_nan()));

        let mut c = vec![nan, 1.0, 2.0, nan];
        fill_short_gaps(&mut c, 3);
        assert!(c[0].is_nan() && c[3].is_nan());

        let mut d = vec![1.0, 2.0, 3.0];
        fill_short_gaps(&mut d, 3);
        assert_eq!(d, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_max_gap_fills_nothing() {
        let mut a = vec![1.0, f64::NAN, 3.0];
        fill_short_gaps(&mut a, 0);
        assert!(a[1].is_nan());
    }

    fn one_target_values(v: &[f64]) -> Array3<f64> {
        Array3::from_shape_vec((v.len(), 1, 1), v.to_vec()).unwrap()
    }

    #[test]
    fn normalization_examples() {
        let vals = one_target_values(&[2.0, 4.0, 6.0]);
        let ids = vec!["t".to_string()];
        let p = NormalizationParams::fit(vals.view(), &ids, 0..3).unwrap();
        assert_eq!((p.min[0], p.max[0]), (2.0, 6.0));
        let mut scaled = vals.clone();
        p.apply_in_place(&mut scaled);
        assert_eq!(scaled.iter().copied().collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(invert_normalization(&[0.5], 0, &p), vec![4.0]);

        let flat = one_target_values(&[5.0, 5.0, 5.0]);
        let p = NormalizationParams::fit(flat.view(), &ids, 0..3).unwrap();
        assert_eq!(p.apply_value(0, 5.0), 0.0);

        let missing = one_target_values(&[f64::NAN, f64::NAN]);
        assert!(matches!(
            NormalizationParams::fit(missing.view(), &ids, 0..2),
            Err(Error::MissingData(_))
        ));
    }

    #[test]
    fn normalization_uses_training_range_only() {
        let vals = one_target_values(&[1.0, 3.0, 100.0]);
        let p = NormalizationParams::fit(vals.view(), &["t".into()], 0..2).unwrap();
        assert_eq!(p.max[0], 3.0);
    }

    #[test]
    fn split_sizes() {
        let s = Split::from_fractions(10, (0.6, 0.2, 0.2)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
        assert!(Split::from_fractions(10, (0.6, 0.6, 0.2)).is_err());
    }

    #[test]
    fn window_count_and_slices() {
        let t = 20;
        let data = Array3::from_shape_fn((t, 2, 2), |(t, s, k)| (t * 100 + s * 10 + k) as f64);
        let ids = vec!["a".to_string(), "b".to_string()];
        let ds = windows_from_values(data.clone(), &ids, 5, 3, "b", (0.6, 0.2, 0.2)).unwrap();
        assert_eq!(ds.len(), t - 5 - 3 + 1);
        assert_eq!(ds.input(2)[[0, 1, 0]], data[[2, 1, 0]]);
        assert_eq!(ds.target(2)[[0, 1]], data[[7, 1, 1]]);

        let exact = windows_from_values(data.slice(s![0..8, .., ..]).to_owned(), &ids, 5, 3, "a", (1.0, 0.0, 0.0)).unwrap();
        assert_eq!(exact.len(), 1);
        assert!(windows_from_values(data.slice(s![0..7, .., ..]).to_owned(), &ids, 5, 3, "a", (1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn windows_touching_missing_are_dropped() {
        let mut data = Array3::from_elem((10, 1, 1), 1.0);
        data[[4, 0, 0]] = f64::NAN;
        let ds = windows_from_values(data, &["a".into()], 2, 1, "a", (1.0, 0.0, 0.0)).unwrap();
        // spans of 3 covering index 4 start at 2, 3, 4
        assert_eq!(ds.starts, vec![0, 1, 5, 6, 7]);
        assert_eq!(ds.dropped, 3);
    }
}
