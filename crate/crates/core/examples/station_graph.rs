//! Builds the weighted station graph and the two graph-convolution operators.
//!
//! cargo run --example station_graph -- [seed]

use geofuse::fusion::{pairwise_distances, DistanceMetric};
use geofuse::graph::{build_adjacency, distance_sigma, normalized_laplacian, power_iteration_lambda_max, renormalized_adjacency, scaled_laplacian};
use geofuse::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |a| a.parse())?;
    let data = generate(&SynthConfig::diffusion(seed, 1))?;
    let coords: Vec<[f64; 2]> = data.stations.iter().map(|s| s.coords()).collect();
    let dists = pairwise_distances(&coords, DistanceMetric::Euclidean)?;

    let adj = build_adjacency(&dists);
    println!("{} stations, {} edges, sigma = {:.4}", adj.n_nodes(), adj.edge_count(), distance_sigma(&dists));
    let n = adj.n_nodes();
    let mut edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    edges.sort_by(|a, b| adj.values[[b.0, b.1]].total_cmp(&adj.values[[a.0, a.1]]));
    for (label, (i, j)) in [("strongest", edges[0]), ("weakest", edges[edges.len() - 1])] {
        println!(
            "  {label} edge {} - {}: d = {:.3}, w = {:.3e}",
            data.stations[i].id,
            data.stations[j].id,
            dists.get(i, j),
            adj.values[[i, j]]
        );
    }

    let lap = normalized_laplacian(&adj);
    // power iteration returns the eigenvalue of largest magnitude, with its sign
    println!("dominant eigenvalue of L: {:.6}", power_iteration_lambda_max(&lap)?);
    let cheb = scaled_laplacian(&adj)?;
    println!("dominant eigenvalue of 2L/lambda_max - I: {:.6}", power_iteration_lambda_max(&cheb.matrix)?);
    let first = renormalized_adjacency(&adj);
    println!("dominant eigenvalue of D^-1/2 (W + I) D^-1/2: {:.6}", power_iteration_lambda_max(&first.matrix)?);
    Ok(())
}
