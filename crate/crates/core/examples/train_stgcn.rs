//! Trains the forecaster on the synthetic diffusion layout and compares it
//! with persistence on the test split.
//!
//! cargo run --release --example train_stgcn -- [epochs] [seed]

use std::time::Instant;

use geofuse::config::PipelineConfig;
use geofuse::pipeline::{build_graph, evaluate, fuse, train_model};
use geofuse::ingest::ObservationPanel;
use geofuse::metrics::Units;
use geofuse::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map_or(Ok(60), |a| a.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(0), |a| a.parse())?;

    let data = generate(&SynthConfig::diffusion(seed, 2000))?;
    let panel = ObservationPanel::new(data.timestamps, data.stations, data.target_ids, data.values)?;
    let cfg = PipelineConfig {
        predicted_target: Some("pm25".into()),
        channels: [16, 8, 16],
        epochs,
        seed,
        ..PipelineConfig::default()
    };
    cfg.validate()?;
    let fused = fuse(&panel, &cfg)?;
    let adj = build_graph(&panel.stations, cfg.rbf.metric, cfg.sigma)?;

    let start = Instant::now();
    let trained = train_model(&fused, &adj, &cfg)?;
    for r in &trained.report.history {
        println!(
            "epoch {:>3}  train {:.5}  val {:.5}  val_mae {:.5}",
            r.epoch, r.train_loss, r.val_loss, r.val_mae
        );
    }
    println!("trained in {:.1?}, best epoch {}", start.elapsed(), trained.report.best_epoch);

    for row in evaluate(&trained.model, &trained.dataset)? {
        if row.report.units == Units::Normalized {
            println!(
                "{:<12} h={}  mae {:.5}  rmse {:.5}  r2 {:.4}",
                row.model, row.horizon, row.report.mae, row.report.rmse, row.report.r2
            );
        }
    }
    Ok(())
}
