//! Seeded random graph generation for tests, benchmarks and experiments.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{VertexId, WeightedEdge, WeightedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DegreeModel {
    /// Endpoints uniform over the vertex set.
    Uniform,
    /// Endpoints Zipf-distributed: low vertex ids become hubs.
    PowerLaw { exponent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightModel {
    /// Uniform on (0, 1].
    Uniform,
    /// Standard exponential, resampled on the off chance of a zero draw.
    Exp,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: u32,
    pub m: u64,
    pub degrees: DegreeModel,
    pub weights: WeightModel,
    pub seed: u64,
}

/// Dense instances get materialized pair lists; keep those bounded.
const DENSE_PAIR_LIMIT: u64 = 100_000_000;

fn draw_weight<R: Rng>(rng: &mut R, model: WeightModel) -> f64 {
    match model {
        WeightModel::Uniform => 1.0 - rng.gen::<f64>(),
        WeightModel::Exp => loop {
            let w: f64 = Exp1.sample(rng);
            if w > 0.0 && w.is_finite() {
                break w;
            }
        },
    }
}

/// Generates a simple undirected graph with exactly `m` distinct weighted
/// edges, deterministically from the seed.
pub fn generate(cfg: &GenConfig) -> Result<WeightedGraph> {
    if cfg.n < 2 {
        return Err(Error::Config("need at least two vertices".into()));
    }
    let total_pairs = cfg.n as u64 * (cfg.n as u64 - 1) / 2;
    if cfg.m > total_pairs {
        return Err(Error::Config(format!(
            "{} edges requested but only {total_pairs} distinct pairs exist",
            cfg.m
        )));
    }
    if let DegreeModel::PowerLaw { exponent } = cfg.degrees {
        if !exponent.is_finite() || exponent <= 0.0 {
            return Err(Error::Config("power-law exponent must be positive".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let pairs = match cfg.degrees {
        DegreeModel::Uniform if cfg.m * 2 > total_pairs => {
            dense_uniform_pairs(cfg.n, cfg.m as usize, total_pairs, &mut rng)?
        }
        DegreeModel::Uniform => sparse_pairs(cfg.m as usize, &mut rng, |rng| {
            (rng.gen_range(0..cfg.n), rng.gen_range(0..cfg.n))
        })?,
        DegreeModel::PowerLaw { exponent } => {
            let zipf = Zipf::new(cfg.n as u64, exponent)
                .map_err(|e| Error::Config(format!("zipf: {e}")))?;
            sparse_pairs(cfg.m as usize, &mut rng, |rng| {
                (
                    zipf.sample(rng) as VertexId - 1,
                    zipf.sample(rng) as VertexId - 1,
                )
            })?
        }
    };

    let edges: Vec<WeightedEdge> = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (u, v))| WeightedEdge {
            eid: i as u64,
            u,
            v,
            w: draw_weight(&mut rng, cfg.weights),
        })
        .collect();
    WeightedGraph::new(cfg.n, edges)
}

/// Rejection sampling of distinct non-loop pairs. The attempt budget only
/// trips for skewed degree models that cannot reach the requested density.
fn sparse_pairs<R: Rng>(
    m: usize,
    rng: &mut R,
    mut propose: impl FnMut(&mut R) -> (VertexId, VertexId),
) -> Result<Vec<(VertexId, VertexId)>> {
    let mut seen: HashSet<u64> = HashSet::with_capacity(m * 2);
    let mut out = Vec::with_capacity(m);
    let budget = 50 * m as u64 + 1_000_000;
    let mut attempts = 0u64;
    while out.len() < m {
        attempts += 1;
        if attempts > budget {
            return Err(Error::Config(format!(
                "gave up after {attempts} attempts; the degree model cannot reach {m} distinct edges"
            )));
        }
        let (a, b) = propose(rng);
        if a == b {
            continue;
        }
        let (u, v) = (a.min(b), a.max(b));
        if seen.insert((u as u64) << 32 | v as u64) {
            out.push((u, v));
        }
    }
    Ok(out)
}

/// Materializes every pair and keeps a shuffled prefix; only for dense
/// requests where rejection would thrash.
fn dense_uniform_pairs<R: Rng>(
    n: u32,
    m: usize,
    total_pairs: u64,
    rng: &mut R,
) -> Result<Vec<(VertexId, VertexId)>> {
    if total_pairs > DENSE_PAIR_LIMIT {
        return Err(Error::Config(format!(
            "dense request over {total_pairs} pairs is too large; lower m below half the pair count"
        )));
    }
    let mut pairs: Vec<(VertexId, VertexId)> = Vec::with_capacity(total_pairs as usize);
    for u in 0..n {
        for v in (u + 1)..n {
            pairs.push((u, v));
        }
    }
    let (chosen, _) = pairs.partial_shuffle(rng, m);
    Ok(chosen.to_vec())
}
