//! Shared fixtures for the criterion benches.

use corematch::gen::{generate, DegreeModel, GenConfig, WeightModel};
use corematch::WeightedGraph;

/// Standard benchmark graph: uniform degrees, uniform weights.
pub fn bench_graph(n: u32, m: u64, seed: u64) -> WeightedGraph {
    generate(&GenConfig {
        n,
        m,
        degrees: DegreeModel::Uniform,
        weights: WeightModel::Uniform,
        seed,
    })
    .expect("benchmark parameters are valid")
}
