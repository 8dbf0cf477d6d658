//! Writes a synthetic dataset and a run configuration, then runs the whole
//! pipeline from the configuration file.
//!
//! cargo run --release --example run_all -- [dir]

use geofuse::config::PipelineConfig;
use geofuse::pipeline::run_all;
use geofuse::synth::{generate, SynthConfig};

const CONFIG: &str = "\
# paths are relative to this file
stations = data/stations.csv
observations = data/observations.csv
out_dir = out
predicted_target = pm25
channels = 8, 4, 8
epochs = 5
seed = 1
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/run_all".into()));
    generate(&SynthConfig::diffusion(1, 300))?.write(dir.join("data"))?;
    std::fs::write(dir.join("run.conf"), CONFIG)?;

    let cfg = PipelineConfig::from_file(dir.join("run.conf"))?;
    let summary = run_all(&cfg)?;
    println!("best epoch {}; artifacts in {}", summary.best_epoch, summary.out_dir.display());
    print!("{}", std::fs::read_to_string(summary.out_dir.join("metrics.csv"))?);
    Ok(())
}
