//! Compares raw and fused distributions per target: variance ratio and the
//! L1 distance between kernel density estimates.
//!
//! cargo run --release --example consistency_report -- [out_dir]

use geofuse::config::PipelineConfig;
use geofuse::ingest::ObservationPanel;
use geofuse::pipeline::{fuse, report};
use geofuse::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/consistency_report".into());
    let data = generate(&SynthConfig::three_source_layout(7, 500))?;
    let panel = ObservationPanel::new(data.timestamps, data.stations, data.target_ids, data.values)?;
    let fused = fuse(&panel, &PipelineConfig::default())?;
    let rep = report(&panel, &fused, out.as_ref())?;

    println!("{:<6} {:>10} {:>10} {:>7} {:>7}", "target", "raw var", "fused var", "ratio", "KDE L1");
    for (v, d) in rep.variance.targets.iter().zip(&rep.densities) {
        println!(
            "{:<6} {:>10.4} {:>10.4} {:>7.3} {:>7.3}",
            v.target,
            v.raw_var,
            v.fused_var,
            v.ratio,
            d.l1_distance()
        );
    }
    println!("curves written to {out}");
    Ok(())
}
