//! Fits a Gaussian RBF interpolant to a handful of stations, then fuses one
//! step of the 13-station, three-source layout.
//!
//! cargo run --example rbf_fusion

use geofuse::fusion::{Fuser, Provenance, RbfConfig, RbfInterpolant};
use geofuse::synth::{generate, SynthConfig};
use ndarray::s;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let points = [[0.1, 0.2], [0.8, 0.3], [0.4, 0.9], [0.6, 0.6]];
    let values = [12.0, 15.5, 9.0, 13.25];
    let exact = RbfConfig {
        ridge: Some(0.0),
        ..RbfConfig::default()
    };
    let f = RbfInterpolant::fit(&points, &values, &exact)?;
    println!("shape c = {:.4}, offset = {:.4}", f.shape_c, f.offset);
    for (p, v) in points.iter().zip(&values) {
        println!("  at {p:?}: observed {v:>6.2}  interpolated {:>12.9}", f.evaluate_at(*p));
    }
    for q in [[0.5, 0.5], [0.0, 0.0], [3.0, 3.0]] {
        println!("  at {q:?}: {:.4}", f.evaluate_at(q));
    }

    let data = generate(&SynthConfig::three_source_layout(7, 24))?;
    let mut fuser = Fuser::new(&data.stations, &data.target_ids, &RbfConfig::default())?;
    let step = fuser.fuse_step(data.values.slice(s![0, .., ..]), "first hour")?;
    println!("\nfused step, * marks interpolated cells");
    print!("{:<10}", "");
    for t in &data.target_ids {
        print!("{t:>9}");
    }
    println!();
    for (si, st) in data.stations.iter().enumerate() {
        print!("{:<10}", st.id);
        for k in 0..data.target_ids.len() {
            let mark = if step.provenance[[si, k]] == Provenance::Fused { '*' } else { ' ' };
            print!("{:>8.3}{mark}", step.values[[si, k]]);
        }
        println!();
    }
    Ok(())
}
