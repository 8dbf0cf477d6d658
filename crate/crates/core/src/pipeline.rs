//! File formats and stage orchestration behind the command-line tool.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use ndarray::{s, Array2, Array3, ArrayView3};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::fusion::{fuse_panel, pairwise_distances, DistanceMetric, FusionMatrix, Provenance};
use crate::graph::{build_adjacency, build_adjacency_with_sigma, graph_operator, WeightedAdjacency};
use crate::ingest::{
    check_header, check_hourly, clean_panel, csv_reader, format_timestamp, load_observations, load_stations,
    make_windows, parse_timestamp, NormalizationParams, ObservationPanel, Station, WindowedDataset,
};
use crate::metrics::{consistency_report, ConsistencyReport, MetricReport, Units};
use crate::stgcn::{rollout, train, GraphContext, StgcnModel, TrainReport, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Fusion,
    Graph,
    Training,
    Evaluation,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Ingest => 3,
            Stage::Fusion => 4,
            Stage::Graph => 5,
            Stage::Training => 6,
            Stage::Evaluation => 7,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Fusion => "fusion",
            Stage::Graph => "graph",
            Stage::Training => "training",
            Stage::Evaluation => "evaluation",
        }
    }
}

/// An error tagged with the stage that raised it. Configuration errors map
/// to the config exit code whichever stage reports them.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub error: Error,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self.error {
            Error::Config(_) => Stage::Config.exit_code(),
            _ => self.stage.exit_code(),
        }
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage: {}", self.stage.as_str(), self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

pub type StageResult<T> = std::result::Result<T, StageError>;

pub trait AtStage<T> {
    fn at(self, stage: Stage) -> StageResult<T>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> StageResult<T> {
        self.map_err(|error| StageError { stage, error })
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

// ---- file formats ----

pub fn fused_csv(fm: &FusionMatrix) -> String {
    let mut out = String::from("timestamp,station_id,target_id,value,provenance\n");
    let (t, s, k) = fm.dim();
    for ti in 0..t {
        let stamp = format_timestamp(&fm.timestamps[ti]);
        for si in 0..s {
            for ki in 0..k {
                let _ = writeln!(
                    out,
                    "{stamp},{},{},{},{}",
                    fm.station_order[si],
                    fm.target_order[ki],
                    fm.values[[ti, si, ki]],
                    fm.provenance[[ti, si, ki]].as_str()
                );
            }
        }
    }
    out
}

pub fn write_fused_csv(fm: &FusionMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &fused_csv(fm))
}

/// Reads a long-format fused file. Station and target order follow first appearance.
pub fn read_fused_csv(path: impl AsRef<Path>) -> Result<FusionMatrix> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    check_header(path, &mut rdr, &["timestamp", "station_id", "target_id", "value", "provenance"])?;
    let mut times: Vec<NaiveDateTime> = Vec::new();
    let mut time_idx: HashMap<NaiveDateTime, usize> = HashMap::new();
    let mut stations: Vec<String> = Vec::new();
    let mut station_idx: HashMap<String, usize> = HashMap::new();
    let mut targets: Vec<String> = Vec::new();
    let mut target_idx: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<(usize, usize, usize, f64, Provenance, usize)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != 5 {
            return Err(parse_err(path, line, format!("expected 5 fields, found {}", rec.len())));
        }
        let ts = parse_timestamp(&rec[0]).map_err(|m| parse_err(path, line, m))?;
        let intern = |map: &mut HashMap<String, usize>, list: &mut Vec<String>, key: &str| {
            *map.entry(key.to_string()).or_insert_with(|| {
                list.push(key.to_string());
                list.len() - 1
            })
        };
        let ti = *time_idx.entry(ts).or_insert_with(|| {
            times.push(ts);
            times.len() - 1
        });
        let si = intern(&mut station_idx, &mut stations, &rec[1]);
        let ki = intern(&mut target_idx, &mut targets, &rec[2]);
        let value: f64 = rec[3]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad value {:?}", &rec[3])))?;
        let prov = match &rec[4] {
            "raw" => Provenance::Raw,
            "fused" => Provenance::Fused,
            other => return Err(parse_err(path, line, format!("bad provenance {other:?}"))),
        };
        rows.push((ti, si, ki, value, prov, line));
    }
    check_hourly(&times)?;
    let dim = (times.len(), stations.len(), targets.len());
    let mut values = Array3::from_elem(dim, f64::NAN);
    let mut provenance = Array3::from_elem(dim, Provenance::Fused);
    let mut seen = Array3::from_elem(dim, false);
    for (ti, si, ki, v, p, line) in rows {
        if seen[[ti, si, ki]] {
            return Err(parse_err(path, line, "duplicate (timestamp, station, target) row"));
        }
        seen[[ti, si, ki]] = true;
        values[[ti, si, ki]] = v;
        provenance[[ti, si, ki]] = p;
    }
    let missing = seen.iter().filter(|s| !**s).count();
    if missing > 0 {
        return Err(Error::MissingData(format!(
            "{}: {missing} (timestamp, station, target) cells are absent",
            path.display()
        )));
    }
    Ok(FusionMatrix {
        timestamps: times,
        station_order: stations,
        target_order: targets,
        values,
        provenance,
    })
}

pub fn adjacency_csv(ids: &[String], adj: &WeightedAdjacency) -> String {
    let mut out = format!("station_id,{}\n", ids.join(","));
    for (i, id) in ids.iter().enumerate() {
        out.push_str(id);
        for j in 0..ids.len() {
            let _ = write!(out, ",{}", adj.values[[i, j]]);
        }
        out.push('\n');
    }
    out
}

pub fn write_adjacency_csv(ids: &[String], adj: &WeightedAdjacency, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &adjacency_csv(ids, adj))
}

/// Reads a square adjacency file. The bandwidth is not stored, so `sigma` is NaN.
pub fn read_adjacency_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, WeightedAdjacency)> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("station_id") {
        return Err(parse_err(path, 1, "first column must be station_id"));
    }
    let ids: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let n = ids.len();
    let mut values = Array2::zeros((n, n));
    let mut count = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if i >= n || rec.len() != n + 1 || rec[0] != *ids[i] {
            return Err(parse_err(path, line, "rows must follow the header's station order"));
        }
        for j in 0..n {
            values[[i, j]] = rec[j + 1]
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad weight {:?}", &rec[j + 1])))?;
        }
        count += 1;
    }
    if count != n {
        return Err(parse_err(path, count + 2, format!("expected {n} rows, found {count}")));
    }
    Ok((ids, WeightedAdjacency::from_matrix(values, f64::NAN)?))
}

/// Permutes an adjacency from `ids` order into `order`.
pub fn reorder_adjacency(ids: &[String], adj: &WeightedAdjacency, order: &[String]) -> Result<WeightedAdjacency> {
    let pos: Vec<usize> = order
        .iter()
        .map(|id| {
            ids.iter()
                .position(|x| x == id)
                .ok_or_else(|| Error::Validation(format!("station {id:?} is missing from the adjacency")))
        })
        .collect::<Result<_>>()?;
    if pos.len() != ids.len() {
        return Err(Error::Validation(format!(
            "adjacency has {} stations but the panel has {}",
            ids.len(),
            pos.len()
        )));
    }
    let values = Array2::from_shape_fn((pos.len(), pos.len()), |(i, j)| adj.values[[pos[i], pos[j]]]);
    Ok(WeightedAdjacency {
        values,
        sigma: adj.sigma,
    })
}

pub fn history_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,val_mae,val_rmse,best\n");
    for r in &report.history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch,
            r.train_loss,
            r.val_loss,
            r.val_mae,
            r.val_rmse,
            u8::from(r.epoch == report.best_epoch)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub model: String,
    pub horizon: usize,
    pub report: MetricReport,
}

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("model,split,horizon,units,n,mae,rmse,mape,mape_excluded,r2\n");
    for r in rows {
        let m = &r.report;
        let _ = writeln!(
            out,
            "{},test,{},{},{},{},{},{},{},{}",
            r.model,
            r.horizon,
            m.units.as_str(),
            m.n,
            m.mae,
            m.rmse,
            m.mape,
            m.mape_excluded,
            m.r2
        );
    }
    out
}

// ---- stages ----

pub fn load_raw(stations: &Path, observations: &Path) -> Result<ObservationPanel> {
    let st = load_stations(stations)?;
    load_observations(observations, &st)
}

pub fn fuse(panel: &ObservationPanel, cfg: &PipelineConfig) -> Result<FusionMatrix> {
    fuse_panel(&clean_panel(panel, cfg.max_gap_hours), &cfg.rbf)
}

pub fn build_graph(stations: &[Station], metric: DistanceMetric, sigma: Option<f64>) -> Result<WeightedAdjacency> {
    let coords: Vec<[f64; 2]> = stations.iter().map(Station::coords).collect();
    let d = pairwise_distances(&coords, metric)?;
    Ok(match sigma {
        Some(s) => build_adjacency_with_sigma(&d, s),
        None => build_adjacency(&d),
    })
}

/// Windows over the fused matrix, min-max scaled with parameters fitted on
/// the time steps covered by the training windows.
pub fn prepare_dataset(fused: &FusionMatrix, cfg: &PipelineConfig) -> Result<(WindowedDataset, NormalizationParams)> {
    let target = cfg.require_target()?;
    let mut ds = make_windows(fused, cfg.history_steps, cfg.horizon_steps, target, cfg.split)?;
    if ds.split.train.is_empty() {
        return Err(Error::Validation("no complete training windows".into()));
    }
    let train_end = ds.starts[ds.split.train.end - 1] + ds.history + ds.horizon;
    let norm = NormalizationParams::fit(fused.values.view(), &fused.target_order, 0..train_end)?;
    norm.apply_in_place(&mut ds.data);
    Ok((ds, norm))
}

/// Windows scaled with an existing model's parameters.
pub fn dataset_for_model(fused: &FusionMatrix, trained: &TrainedModel, cfg: &PipelineConfig) -> Result<WindowedDataset> {
    check_layout(fused, trained)?;
    let mut ds = make_windows(
        fused,
        trained.model.config.history,
        cfg.horizon_steps,
        &trained.predicted_target,
        cfg.split,
    )?;
    trained.normalization.apply_in_place(&mut ds.data);
    Ok(ds)
}

fn check_layout(fused: &FusionMatrix, trained: &TrainedModel) -> Result<()> {
    if fused.station_order != trained.station_order || fused.target_order != trained.normalization.target_ids {
        return Err(Error::Validation(
            "fused matrix stations or targets differ from those the model was trained on".into(),
        ));
    }
    Ok(())
}

pub struct Trained {
    pub model: TrainedModel,
    pub report: TrainReport,
    pub dataset: WindowedDataset,
}

pub fn train_model(fused: &FusionMatrix, adj: &WeightedAdjacency, cfg: &PipelineConfig) -> StageResult<Trained> {
    let (dataset, normalization) = prepare_dataset(fused, cfg).at(Stage::Training)?;
    let op = graph_operator(adj, cfg.graph_mode.operator_kind()).at(Stage::Graph)?;
    let ctx = GraphContext::new(&op, cfg.graph_mode, cfg.graph_kernel).at(Stage::Graph)?;
    let mut mc = cfg.model_config(fused.target_order.len()).at(Stage::Config)?;
    mc.target_channel = dataset.target_channel;
    let mut model = StgcnModel::new(mc).at(Stage::Config)?;
    let report = train(&mut model, &dataset, &ctx, &cfg.train_config()).at(Stage::Training)?;
    Ok(Trained {
        model: TrainedModel {
            model,
            operator: op,
            normalization,
            station_order: fused.station_order.clone(),
            predicted_target: dataset.target_id.clone(),
        },
        report,
        dataset,
    })
}

/// Test-split metrics for the model and the persistence baseline at every
/// horizon, in normalized and original units.
pub fn evaluate(trained: &TrainedModel, ds: &WindowedDataset) -> Result<Vec<MetricRow>> {
    let test: Vec<usize> = ds.split.test.clone().collect();
    if test.is_empty() {
        return Err(Error::Validation("test split is empty".into()));
    }
    let ctx = trained.graph_context()?;
    let k = ds.target_channel;
    let q = ds.horizon;
    let s = ds.n_stations();
    let mut model_pred = vec![Vec::new(); q];
    let mut base_pred = vec![Vec::new(); q];
    let mut truth = vec![Vec::new(); q];
    for chunk in test.chunks(64) {
        let windows: Vec<ArrayView3<'_, f64>> = chunk.iter().map(|&i| ds.input(i)).collect();
        let preds = rollout(&trained.model, &ctx, &windows, q)?;
        for (&i, p) in chunk.iter().zip(preds) {
            let tgt = ds.target(i);
            let last = ds.data.slice(s![ds.end_time(i), .., k]);
            for h in 0..q {
                for st in 0..s {
                    model_pred[h].push(p[[h, st]]);
                    base_pred[h].push(last[st]);
                    truth[h].push(tgt[[h, st]]);
                }
            }
        }
    }
    let norm = &trained.normalization;
    let mut rows = Vec::new();
    for (name, preds) in [("stgcn", &model_pred), ("persistence", &base_pred)] {
        for h in 0..q {
            rows.push(MetricRow {
                model: name.into(),
                horizon: h + 1,
                report: MetricReport::compute(&preds[h], &truth[h], Units::Normalized)?,
            });
            let po: Vec<f64> = preds[h].iter().map(|&v| norm.invert_value(k, v)).collect();
            let to: Vec<f64> = truth[h].iter().map(|&v| norm.invert_value(k, v)).collect();
            rows.push(MetricRow {
                model: name.into(),
                horizon: h + 1,
                report: MetricReport::compute(&po, &to, Units::Original)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct Forecast {
    pub origin: NaiveDateTime,
    pub station_order: Vec<String>,
    pub target: String,
    /// `values[[h, s]]` is the forecast for `origin + h + 1` hours.
    pub values: Array2<f64>,
}

impl Forecast {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("timestamp,station_id,target_id,horizon,value\n");
        for h in 0..self.values.nrows() {
            let ts = format_timestamp(&(self.origin + chrono::Duration::hours(h as i64 + 1)));
            for (si, id) in self.station_order.iter().enumerate() {
                let _ = writeln!(out, "{ts},{id},{},{},{}", self.target, h + 1, self.values[[h, si]]);
            }
        }
        out
    }
}

/// Forecasts `horizon` steps past `origin` (default: the last timestamp)
/// from the `P` fused frames ending there.
pub fn forecast(
    trained: &TrainedModel,
    fused: &FusionMatrix,
    origin: Option<NaiveDateTime>,
    horizon: usize,
) -> Result<Forecast> {
    check_layout(fused, trained)?;
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let p = trained.model.config.history;
    let end = match origin {
        Some(ts) => fused
            .timestamps
            .iter()
            .position(|t| *t == ts)
            .ok_or_else(|| Error::Validation(format!("{} is not in the fused matrix", format_timestamp(&ts))))?,
        None => fused.timestamps.len() - 1,
    };
    if end + 1 < p {
        return Err(Error::Validation(format!(
            "need {p} steps of history before the forecast origin, found {}",
            end + 1
        )));
    }
    let window = fused.values.slice(s![end + 1 - p..=end, .., ..]);
    let ctx = trained.graph_context()?;
    let values = crate::stgcn::predict(&trained.model, &ctx, window, horizon, &trained.normalization)?;
    Ok(Forecast {
        origin: fused.timestamps[end],
        station_order: fused.station_order.clone(),
        target: trained.predicted_target.clone(),
        values,
    })
}

pub const KDE_GRID_POINTS: usize = 256;

/// Writes `variance.csv`, `variance_station.csv`, and `kde_<target>.csv` and
/// `overlay_<target>.csv` for each target.
pub fn write_report(report: &ConsistencyReport, fused: &FusionMatrix, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let p = dir.join(name);
        write_file(&p, &body)?;
        written.push(p);
        Ok(())
    };
    let v = &report.variance;
    let mut body = String::from("target_id,raw_var,fused_var,ratio,kde_l1\n");
    for (tv, d) in v.targets.iter().zip(&report.densities) {
        let _ = writeln!(body, "{},{},{},{},{}", tv.target, tv.raw_var, tv.fused_var, tv.ratio, d.l1_distance());
    }
    emit("variance.csv".into(), body)?;

    let mut body = String::from("station_id,target_id,raw_var,fused_var\n");
    for (si, id) in fused.station_order.iter().enumerate() {
        for (ki, t) in fused.target_order.iter().enumerate() {
            let _ = writeln!(
                body,
                "{id},{t},{},{}",
                v.raw_per_station[[si, ki]],
                v.fused_per_station[[si, ki]]
            );
        }
    }
    emit("variance_station.csv".into(), body)?;

    for (ki, d) in report.densities.iter().enumerate() {
        let mut body = String::from("x,raw_density,fused_density\n");
        for ((x, r), f) in d.grid.iter().zip(&d.raw).zip(&d.fused) {
            let _ = writeln!(body, "{x},{r},{f}");
        }
        emit(format!("kde_{}.csv", d.target), body)?;

        let mut body = String::from("timestamp,raw_var,fused_var\n");
        for (ti, ts) in fused.timestamps.iter().enumerate() {
            let _ = writeln!(
                body,
                "{},{},{}",
                format_timestamp(ts),
                v.raw_trajectory[[ti, ki]],
                v.fused_trajectory[[ti, ki]]
            );
        }
        emit(format!("overlay_{}.csv", d.target), body)?;
    }
    Ok(written)
}

pub fn report(raw: &ObservationPanel, fused: &FusionMatrix, dir: &Path) -> Result<ConsistencyReport> {
    let r = consistency_report(raw, fused, KDE_GRID_POINTS)?;
    write_report(&r, fused, dir)?;
    Ok(r)
}

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub metrics: Vec<MetricRow>,
    pub best_epoch: usize,
}

/// Ingest, fuse, build the graph, train, evaluate and report, writing every
/// artifact under `out_dir`.
pub fn run_all(cfg: &PipelineConfig) -> StageResult<RunSummary> {
    let need = |p: &Option<PathBuf>, key: &str| {
        p.clone()
            .ok_or_else(|| Error::Config(format!("{key} is not set")))
            .at(Stage::Config)
    };
    let stations = need(&cfg.stations, "stations")?;
    let observations = need(&cfg.observations, "observations")?;
    let out = need(&cfg.out_dir, "out_dir")?;
    cfg.require_target().map_err(|e| StageError {
        stage: Stage::Config,
        error: Error::Config(e.to_string()),
    })?;

    let raw = load_raw(&stations, &observations).at(Stage::Ingest)?;
    let fused = fuse(&raw, cfg).at(Stage::Fusion)?;
    write_fused_csv(&fused, out.join("fused.csv")).at(Stage::Fusion)?;

    let adj = build_graph(&raw.stations, cfg.rbf.metric, cfg.sigma).at(Stage::Graph)?;
    write_adjacency_csv(&fused.station_order, &adj, out.join("adjacency.csv")).at(Stage::Graph)?;

    let trained = train_model(&fused, &adj, cfg)?;
    trained.model.save(out.join("model.ckpt")).at(Stage::Training)?;
    write_file(&out.join("history.csv"), &history_csv(&trained.report)).at(Stage::Training)?;

    let metrics = evaluate(&trained.model, &trained.dataset).at(Stage::Evaluation)?;
    write_file(&out.join("metrics.csv"), &metrics_csv(&metrics)).at(Stage::Evaluation)?;
    report(&raw, &fused, &out.join("report")).at(Stage::Evaluation)?;

    Ok(RunSummary {
        out_dir: out,
        metrics,
        best_epoch: trained.report.best_epoch,
    })
}

/// Writes a text file, creating parent directories.
pub fn write_text(path: impl AsRef<Path>, body: &str) -> Result<()> {
    write_file(path.as_ref(), body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    fn small_fused() -> (tempfile::TempDir, ObservationPanel, FusionMatrix) {
        let dir = tempfile::tempdir().unwrap();
        let data = generate(&SynthConfig::diffusion(2, 40)).unwrap();
        data.write(dir.path()).unwrap();
        let raw = load_raw(&dir.path().join("stations.csv"), &dir.path().join("observations.csv")).unwrap();
        let fused = fuse(&raw, &PipelineConfig::default()).unwrap();
        (dir, raw, fused)
    }

    #[test]
    fn fused_csv_round_trips() {
        let (dir, _, fused) = small_fused();
        let p = dir.path().join("fused.csv");
        write_fused_csv(&fused, &p).unwrap();
        let back = read_fused_csv(&p).unwrap();
        assert_eq!(back.values, fused.values);
        assert_eq!(back.provenance, fused.provenance);
        assert_eq!(back.station_order, fused.station_order);
        assert_eq!(back.timestamps, fused.timestamps);
    }

    #[test]
    fn adjacency_csv_round_trips_and_reorders() {
        let (dir, raw, fused) = small_fused();
        let adj = build_graph(&raw.stations, DistanceMetric::Euclidean, None).unwrap();
        let p = dir.path().join("adjacency.csv");
        write_adjacency_csv(&fused.station_order, &adj, &p).unwrap();
        let (ids, back) = read_adjacency_csv(&p).unwrap();
        assert_eq!(back.values, adj.values);
        let mut rev = ids.clone();
        rev.reverse();
        let r = reorder_adjacency(&ids, &back, &rev).unwrap();
        let n = ids.len();
        assert_eq!(r.values[[0, 1]], adj.values[[n - 1, n - 2]]);
        assert!(reorder_adjacency(&ids, &back, &rev[1..]).is_err());
    }

    #[test]
    fn incomplete_fused_file_is_rejected() {
        let (dir, _, fused) = small_fused();
        let text = fused_csv(&fused);
        let trimmed: String = text
            .lines()
            .enumerate()
            .filter(|(i, _)| *i != 7)
            .map(|(_, l)| format!("{l}\n"))
            .collect();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, trimmed).unwrap();
        assert!(matches!(read_fused_csv(&p), Err(Error::MissingData(_))));
    }

    #[test]
    fn config_errors_map_to_exit_two() {
        let e: StageResult<()> = Err(Error::Config("x".into())).at(Stage::Training);
        assert_eq!(e.unwrap_err().exit_code(), 2);
        let e: StageResult<()> = Err(Error::Validation("x".into())).at(Stage::Graph);
        assert_eq!(e.unwrap_err().exit_code(), 5);
    }
}
