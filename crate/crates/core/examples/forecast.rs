//! Trains briefly, saves the checkpoint, reloads it and rolls a three-hour
//! forecast forward from the end of the record.
//!
//! cargo run --release --example forecast

use geofuse::config::PipelineConfig;
use geofuse::ingest::ObservationPanel;
use geofuse::pipeline::{build_graph, forecast, fuse, train_model};
use geofuse::stgcn::TrainedModel;
use geofuse::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&SynthConfig::diffusion(4, 600))?;
    let panel = ObservationPanel::new(data.timestamps, data.stations, data.target_ids, data.values)?;
    let cfg = PipelineConfig {
        predicted_target: Some("pm25".into()),
        channels: [8, 4, 8],
        epochs: 10,
        ..PipelineConfig::default()
    };
    let fused = fuse(&panel, &cfg)?;
    let adj = build_graph(&panel.stations, cfg.rbf.metric, cfg.sigma)?;
    let trained = train_model(&fused, &adj, &cfg)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.ckpt");
    trained.model.save(&path)?;
    let model = TrainedModel::load(&path)?;

    let fc = forecast(&model, &fused, None, 3)?;
    print!("{}", fc.to_csv());
    Ok(())
}
