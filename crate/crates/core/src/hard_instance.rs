//! Generator for the planted bipartite family on which small coresets lose
//! most of the matching: a dense random block between small planted sides A
//! and B swamps the machines, while the bulk of the optimum hides in a
//! perfect matching on the complements that random subsampling dilutes.
//! All weights are 1, so weight and cardinality coincide and the exact
//! optimum decomposes as (n - n_ab) plus the block's maximum matching.

use std::collections::HashSet;
use std::io::Write;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{cluster, machine_edge_positions, ClusterConfig};
use crate::error::{Error, Result};
use crate::graph::{VertexId, WeightedEdge, WeightedGraph};
use crate::pipeline::{run_pipeline, PipelineConfig};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HardParams {
    /// Vertices per side; the graph has 2n vertices.
    pub n: u32,
    pub k: u32,
    pub c: f64,
    /// Target approximation factor the construction is sized against.
    pub alpha: f64,
    /// Planted-side scale; must stay below 1/8.
    pub gamma: f64,
}

impl HardParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("need at least two vertices per side".into()));
        }
        if self.k < 1 {
            return Err(Error::Config("need at least one machine".into()));
        }
        if !self.c.is_finite() || self.c < 1.0 {
            return Err(Error::Config("multiplicity must be >= 1".into()));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 || self.gamma >= 0.125 {
            return Err(Error::Config("gamma must lie in (0, 1/8)".into()));
        }
        let n_ab = self.n_ab();
        if n_ab >= self.n {
            return Err(Error::Config(format!(
                "planted side {n_ab} would swallow the whole side {}",
                self.n
            )));
        }
        let p = self.p_ab();
        if p > 1.0 {
            return Err(Error::Config(format!(
                "block probability {p:.3} exceeds 1; the dense block would be trivial"
            )));
        }
        Ok(())
    }

    pub fn n_ab(&self) -> u32 {
        (self.gamma * self.n as f64 / (self.c * self.alpha)).ceil() as u32
    }

    pub fn p_ab(&self) -> f64 {
        self.k as f64 / (self.c * self.n_ab() as f64)
    }
}

#[derive(Clone, Debug)]
pub struct HardInstance {
    /// Bipartite graph: left side 0..n, right side n..2n, unit weights.
    pub graph: WeightedGraph,
    /// Planted left vertices, sorted.
    pub a: Vec<VertexId>,
    /// Planted right vertices, sorted.
    pub b: Vec<VertexId>,
    /// Eids of the complement perfect matching; always the tail range of
    /// the edge list.
    pub planted_matching: Vec<u64>,
    /// Number of block edges; block eids are 0..ab_edges.
    pub ab_edges: u64,
    pub n_ab: u32,
    pub p_ab: f64,
}

/// Samples one instance: planted sides uniform, block edges i.i.d. with
/// probability k/(c*n_ab), and a uniformly shuffled perfect matching on the
/// complements.
pub fn generate_hard(params: &HardParams, seed: u64) -> Result<HardInstance> {
    params.validate()?;
    let n = params.n;
    let n_ab = params.n_ab();
    let p_ab = params.p_ab();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut a: Vec<VertexId> = index::sample(&mut rng, n as usize, n_ab as usize)
        .iter()
        .map(|i| i as VertexId)
        .collect();
    a.sort_unstable();
    let mut b: Vec<VertexId> = index::sample(&mut rng, n as usize, n_ab as usize)
        .iter()
        .map(|i| n + i as VertexId)
        .collect();
    b.sort_unstable();

    let mut edges: Vec<WeightedEdge> = Vec::new();
    for &u in &a {
        for &v in &b {
            if rng.gen::<f64>() < p_ab {
                edges.push(WeightedEdge {
                    eid: edges.len() as u64,
                    u,
                    v,
                    w: 1.0,
                });
            }
        }
    }
    let ab_edges = edges.len() as u64;

    let a_set: HashSet<VertexId> = a.iter().copied().collect();
    let b_set: HashSet<VertexId> = b.iter().copied().collect();
    let a_rest: Vec<VertexId> = (0..n).filter(|v| !a_set.contains(v)).collect();
    let mut b_rest: Vec<VertexId> = (n..2 * n).filter(|v| !b_set.contains(v)).collect();
    b_rest.shuffle(&mut rng);
    let mut planted_matching = Vec::with_capacity(a_rest.len());
    for (&u, &v) in a_rest.iter().zip(b_rest.iter()) {
        planted_matching.push(edges.len() as u64);
        edges.push(WeightedEdge {
            eid: edges.len() as u64,
            u,
            v,
            w: 1.0,
        });
    }

    let graph = WeightedGraph::new(2 * n, edges)?;
    Ok(HardInstance {
        graph,
        a,
        b,
        planted_matching,
        ab_edges,
        n_ab,
        p_ab,
    })
}

fn kuhn_augment(
    u: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    match_right: &mut [Option<usize>],
) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if match_right[v].is_none() || kuhn_augment(match_right[v].unwrap(), adj, seen, match_right)
        {
            match_right[v] = Some(u);
            return true;
        }
    }
    false
}

/// Exact maximum-matching size: every complement edge is always takeable, so
/// only the block needs an augmenting-path search.
pub fn exact_opt_cardinality(inst: &HardInstance) -> usize {
    let a_index: std::collections::HashMap<VertexId, usize> =
        inst.a.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let b_index: std::collections::HashMap<VertexId, usize> =
        inst.b.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut adj = vec![Vec::new(); inst.a.len()];
    for e in &inst.graph.edges()[..inst.ab_edges as usize] {
        adj[a_index[&e.u]].push(b_index[&e.v]);
    }
    let mut match_right = vec![None; inst.b.len()];
    let mut block = 0;
    for u in 0..adj.len() {
        let mut seen = vec![false; inst.b.len()];
        if kuhn_augment(u, &adj, &mut seen, &mut match_right) {
            block += 1;
        }
    }
    inst.planted_matching.len() + block
}

/// Companion file naming the planted structure: one line per planted vertex
/// ("A\tid" / "B\tid") and per complement matching edge ("P\tu\tv").
pub fn write_sidecar<W: Write>(inst: &HardInstance, mut out: W) -> Result<()> {
    for v in &inst.a {
        writeln!(out, "A\t{v}")?;
    }
    for v in &inst.b {
        writeln!(out, "B\t{v}")?;
    }
    for eid in &inst.planted_matching {
        let e = inst.graph.find_by_eid(*eid).expect("planted eid valid");
        writeln!(out, "P\t{}\t{}", e.u, e.v)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HardReport {
    pub params: HardParams,
    pub seeds: usize,
    pub mean_output_size: f64,
    pub mean_opt_size: f64,
    /// Mean of per-seed output/opt cardinality ratios.
    pub mean_output_ratio: f64,
    /// Mean fraction of the planted matching that survived into the union.
    pub mean_planted_in_union: f64,
    pub mean_ab_edges: f64,
    /// n_ab * k / c: the block's expected edge count.
    pub expected_ab_edges: f64,
    /// Mean over machines and seeds of block edges landing per partition.
    pub mean_partition_ab_edges: f64,
}

/// Runs the pipeline across seeds and summarizes how much of the optimum the
/// coresets keep. This is descriptive: the pipeline's coresets scale with n,
/// so the construction's adversarial small-coreset bound does not apply to
/// it; the interesting signal is how the planted matching thins out per
/// partition.
pub fn hard_experiment(params: &HardParams, seeds: &[u64], workers: usize) -> Result<HardReport> {
    params.validate()?;
    if workers == 0 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;

    struct SeedStats {
        output: usize,
        opt: usize,
        planted_fraction: f64,
        ab_edges: u64,
        partition_ab_mean: f64,
    }

    let stats: Vec<SeedStats> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| -> Result<SeedStats> {
                let inst = generate_hard(params, seed)?;
                let cluster_cfg = ClusterConfig::new(params.k, params.c, seed)?;
                let pipe_cfg = PipelineConfig::new(cluster_cfg);
                let result = run_pipeline(&inst.graph, &pipe_cfg)?;
                let opt = exact_opt_cardinality(&inst);
                let in_union = inst
                    .planted_matching
                    .iter()
                    .filter(|eid| result.union_graph.find_by_eid(**eid).is_some())
                    .count();
                let clustering = cluster(&inst.graph, &cluster_cfg);
                let lists = machine_edge_positions(&clustering);
                let partition_ab_mean = lists
                    .iter()
                    .map(|l| l.iter().filter(|&&p| (p as u64) < inst.ab_edges).count() as f64)
                    .sum::<f64>()
                    / lists.len() as f64;
                Ok(SeedStats {
                    output: result.final_matching.len(),
                    opt,
                    planted_fraction: if inst.planted_matching.is_empty() {
                        1.0
                    } else {
                        in_union as f64 / inst.planted_matching.len() as f64
                    },
                    ab_edges: inst.ab_edges,
                    partition_ab_mean,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let count = stats.len().max(1) as f64;
    Ok(HardReport {
        params: *params,
        seeds: stats.len(),
        mean_output_size: stats.iter().map(|s| s.output as f64).sum::<f64>() / count,
        mean_opt_size: stats.iter().map(|s| s.opt as f64).sum::<f64>() / count,
        mean_output_ratio: stats
            .iter()
            .map(|s| s.output as f64 / s.opt.max(1) as f64)
            .sum::<f64>()
            / count,
        mean_planted_in_union: stats.iter().map(|s| s.planted_fraction).sum::<f64>() / count,
        mean_ab_edges: stats.iter().map(|s| s.ab_edges as f64).sum::<f64>() / count,
        expected_ab_edges: params.n_ab() as f64 * params.k as f64 / params.c,
        mean_partition_ab_edges: stats.iter().map(|s| s.partition_ab_mean).sum::<f64>() / count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{opt_weight, OracleLimits};

    fn reference_params() -> HardParams {
        HardParams {
            n: 1024,
            k: 32,
            c: 2.0,
            alpha: 2.0,
            gamma: 0.1,
        }
    }

    #[test]
    fn reference_arithmetic() {
        let p = reference_params();
        assert_eq!(p.n_ab(), 26);
        assert!((p.p_ab() - 32.0 / 52.0).abs() < 1e-12);
        let inst = generate_hard(&p, 0).unwrap();
        assert_eq!(inst.planted_matching.len(), 1024 - 26);
        // E[|E_AB|] = 26 * 32 / 2 = 416, sigma ~ 12.65.
        let sigma = (676.0 * inst.p_ab * (1.0 - inst.p_ab)).sqrt();
        assert!((inst.ab_edges as f64 - 416.0).abs() <= 5.0 * sigma);
    }

    #[test]
    fn structure_invariants_hold_per_seed() {
        let p = HardParams {
            n: 64,
            k: 4,
            c: 2.0,
            alpha: 2.0,
            gamma: 0.12,
        };
        for seed in 0..10 {
            let inst = generate_hard(&p, seed).unwrap();
            assert_eq!(inst.a.len(), inst.n_ab as usize);
            assert_eq!(inst.b.len(), inst.n_ab as usize);
            assert!(inst.a.iter().all(|&v| v < p.n));
            assert!(inst.b.iter().all(|&v| (p.n..2 * p.n).contains(&v)));
            let a_set: HashSet<_> = inst.a.iter().collect();
            let b_set: HashSet<_> = inst.b.iter().collect();
            let mut seen = HashSet::new();
            for e in inst.graph.edges() {
                assert!(e.u < p.n && e.v >= p.n, "edge keeps left-right direction");
                assert_eq!(e.w, 1.0);
                let planted = inst.planted_matching.binary_search(&e.eid).is_ok();
                if planted {
                    assert!(!a_set.contains(&e.u) && !b_set.contains(&e.v));
                    assert!(
                        seen.insert(e.u) && seen.insert(e.v),
                        "planted edges disjoint"
                    );
                } else {
                    assert!(a_set.contains(&e.u) && b_set.contains(&e.v));
                }
            }
        }
    }

    #[test]
    fn degenerate_gamma_keeps_single_planted_pair() {
        let p = HardParams {
            n: 64,
            k: 1,
            c: 1.0,
            alpha: 2.0,
            gamma: 1e-6,
        };
        assert_eq!(p.n_ab(), 1);
        assert_eq!(p.p_ab(), 1.0);
        let inst = generate_hard(&p, 3).unwrap();
        assert_eq!(inst.ab_edges, 1);
        assert_eq!(exact_opt_cardinality(&inst), 64);
        // One machine sees everything; the planted edges are untouchable.
        let report = hard_experiment(&p, &[3], 1).unwrap();
        assert!(report.mean_output_size >= (p.n - 2 * p.n_ab()) as f64);
    }

    #[test]
    fn kuhn_agrees_with_exact_oracle_on_small_instances() {
        let p = HardParams {
            n: 10,
            k: 1,
            c: 1.0,
            alpha: 2.0,
            gamma: 0.12,
        };
        for seed in 0..8 {
            let inst = generate_hard(&p, seed).unwrap();
            let limits = OracleLimits {
                max_edges: 32,
                max_vertices: inst.graph.n() as usize,
            };
            let opt = opt_weight(&inst.graph, &limits).unwrap();
            assert_eq!(opt, exact_opt_cardinality(&inst) as f64);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = reference_params();
        p.gamma = 0.2;
        assert!(p.validate().is_err());
        let mut p = reference_params();
        p.gamma = 1e-9; // n_ab = 1 but p_ab = 16 > 1
        assert!(generate_hard(&p, 0).is_err());
        let mut p = reference_params();
        p.c = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn sidecar_lists_planted_structure() {
        let p = HardParams {
            n: 16,
            k: 1,
            c: 1.0,
            alpha: 2.0,
            gamma: 0.12,
        };
        let inst = generate_hard(&p, 1).unwrap();
        let mut buf = Vec::new();
        write_sidecar(&inst, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let a_lines = text.lines().filter(|l| l.starts_with("A\t")).count();
        let b_lines = text.lines().filter(|l| l.starts_with("B\t")).count();
        let p_lines = text.lines().filter(|l| l.starts_with("P\t")).count();
        assert_eq!(a_lines, inst.n_ab as usize);
        assert_eq!(b_lines, inst.n_ab as usize);
        assert_eq!(p_lines, inst.planted_matching.len());
    }

    #[test]
    fn experiment_report_is_sane() {
        let p = HardParams {
            n: 128,
            k: 8,
            c: 2.0,
            alpha: 2.0,
            gamma: 0.1,
        };
        let report = hard_experiment(&p, &[0, 1, 2], 2).unwrap();
        assert_eq!(report.seeds, 3);
        assert!(report.mean_opt_size >= (p.n - p.n_ab()) as f64);
        assert!(report.mean_output_size > 0.0);
        assert!(report.mean_output_ratio <= 1.0 + 1e-9);
        assert!((0.0..=1.0).contains(&report.mean_planted_in_union));
        assert!(report.mean_ab_edges > 0.0);
    }
}
