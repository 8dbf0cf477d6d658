//! Reads station and observation CSVs with gaps, fills short gaps, fuses,
//! and cuts the panel into forecasting windows.
//!
//! cargo run --example ingest_windows

use geofuse::config::PipelineConfig;
use geofuse::ingest::make_windows;
use geofuse::pipeline::{fuse, load_raw};
use geofuse::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let data = generate(&SynthConfig {
        gap_prob: 0.02,
        max_gap_len: 5,
        ..SynthConfig::diffusion(3, 400)
    })?;
    data.write(dir.path())?;

    let raw = load_raw(&dir.path().join("stations.csv"), &dir.path().join("observations.csv"))?;
    let native = raw.native_mask();
    let missing = raw
        .values
        .indexed_iter()
        .filter(|((_, s, k), v)| native[[*s, *k]] && v.is_nan())
        .count();
    println!("{} hours x {} stations x {} targets, {missing} missing readings", raw.n_times(), raw.n_stations(), raw.n_targets());

    let cfg = PipelineConfig::default();
    let fused = fuse(&raw, &cfg)?;
    let ds = make_windows(&fused, cfg.history_steps, cfg.horizon_steps, "pm25", cfg.split)?;
    println!(
        "{} windows of {} steps ({} dropped over unfilled gaps); train {:?}, val {:?}, test {:?}",
        ds.len(),
        ds.history,
        ds.dropped,
        ds.split.train,
        ds.split.val,
        ds.split.test
    );
    Ok(())
}
