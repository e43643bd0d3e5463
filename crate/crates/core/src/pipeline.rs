//! The two-round distributed simulation: random clustering, per-machine
//! greedy coresets in parallel, union into H, and post-processing. Round 2
//! sees only H and the per-machine matchings, never the input edges.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{cluster, machine_edge_positions, ClusterConfig};
use crate::error::{Error, Result};
use crate::graph::{WeightedEdge, WeightedGraph};
use crate::greedy::{greedy, greedy_subset, Matching};
use crate::oracle::{exact_mwm, OracleLimits};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PostProcess {
    /// Greedy over the union graph H.
    Greedy,
    /// Maximum-weight of Greedy(H) and every per-machine matching (default).
    BestOf,
    /// Exact oracle on H when H is small enough, else fall back to BestOf.
    Exact { max_union_edges: usize },
    /// Greedy(H) improved by bounded passes of length-3 augmentations.
    LocalSearch { rounds: u32 },
}

#[derive(Clone, Copy, Debug)]
pub struct PipelineConfig {
    pub cluster: ClusterConfig,
    pub post: PostProcess,
    /// Worker threads simulating the machines; >= 1.
    pub workers: usize,
    /// Also run sequential greedy on the input and attach quality ratios.
    /// Costs a full baseline run, so timing-sensitive callers turn it off.
    pub compute_quality: bool,
}

impl PipelineConfig {
    pub fn new(cluster: ClusterConfig) -> Self {
        PipelineConfig {
            cluster,
            post: PostProcess::BestOf,
            workers: 1,
            compute_quality: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Timings {
    pub cluster_ms: f64,
    pub coreset_ms: f64,
    pub post_ms: f64,
}

/// Quality of a matching relative to a baseline, in percent.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QualityReport {
    pub weight_ratio_vs_greedy: f64,
    pub cardinality_ratio_vs_greedy: f64,
    /// Set when the baseline is empty but the result is not (ratios are +inf).
    pub infinite: bool,
}

/// Advisory memory accounting: the per-machine edge budget follows the
/// sqrt(m*c*s) shape with s taken as the coreset scale n; reported only,
/// never enforced.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MemoryAdvisory {
    pub budget_edges: u64,
    pub max_machine_edges: u64,
    pub within_budget: bool,
}

#[derive(Debug)]
pub struct PipelineResult {
    pub final_matching: Matching,
    pub per_machine: Vec<Matching>,
    pub union_graph: WeightedGraph,
    pub timings: Timings,
    pub quality: Option<QualityReport>,
    pub advisory: MemoryAdvisory,
    /// True when Exact post-processing fell back to BestOf because H
    /// exceeded the threshold.
    pub exact_fallback: bool,
}

/// The greedy coreset of one partition: just Greedy restricted to it.
pub fn greedy_coreset(partition: &WeightedGraph) -> Matching {
    greedy(partition).0
}

/// Union graph H over the parent graph's vertex set; each edge appears once
/// (dedup by eid), weights preserved.
pub fn union_coresets(graph: &WeightedGraph, matchings: &[Matching]) -> WeightedGraph {
    let mut edges: Vec<WeightedEdge> = matchings
        .iter()
        .flat_map(|m| m.edges().iter().copied())
        .collect();
    edges.sort_unstable_by_key(|e| e.eid);
    edges.dedup_by_key(|e| e.eid);
    WeightedGraph::from_parts_unchecked(graph.n(), edges, Arc::clone(graph.labels()))
}

/// Percentage ratios of `result` against `baseline`. Both empty counts as
/// 100%; empty baseline with nonempty result is flagged infinite.
pub fn quality_report(result: &Matching, baseline: &Matching) -> QualityReport {
    let pct = |num: f64, den: f64| -> (f64, bool) {
        if den == 0.0 {
            if num == 0.0 {
                (100.0, false)
            } else {
                (f64::INFINITY, true)
            }
        } else {
            (100.0 * num / den, false)
        }
    };
    let (weight, winf) = pct(result.total_weight(), baseline.total_weight());
    let (card, cinf) = pct(result.len() as f64, baseline.len() as f64);
    QualityReport {
        weight_ratio_vs_greedy: weight,
        cardinality_ratio_vs_greedy: card,
        infinite: winf || cinf,
    }
}

fn round2(
    union_graph: &WeightedGraph,
    per_machine: &[Matching],
    post: &PostProcess,
) -> Result<(Matching, bool)> {
    let best_of = |start: Matching| -> Matching {
        let mut best = start;
        for m in per_machine {
            if m.total_weight() > best.total_weight() {
                best = m.clone();
            }
        }
        best
    };
    match post {
        PostProcess::Greedy => Ok((greedy(union_graph).0, false)),
        PostProcess::BestOf => Ok((best_of(greedy(union_graph).0), false)),
        PostProcess::Exact { max_union_edges } => {
            if union_graph.m() <= *max_union_edges {
                let limits = OracleLimits::edges_only(*max_union_edges);
                Ok((exact_mwm(union_graph, &limits)?, false))
            } else {
                Ok((best_of(greedy(union_graph).0), true))
            }
        }
        PostProcess::LocalSearch { rounds } => Ok((
            local_search(union_graph, greedy(union_graph).0, *rounds),
            false,
        )),
    }
}

/// Bounded local search on H: starting from `start`, repeatedly apply the
/// best gain-positive replacement of one matching edge by up to two union
/// edges (plus take any edge that became entirely free). Deterministic scan
/// order; weight never decreases.
fn local_search(h: &WeightedGraph, start: Matching, rounds: u32) -> Matching {
    let n = h.n() as usize;
    let mut incident: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, e) in h.edges().iter().enumerate() {
        incident[e.u as usize].push(i as u32);
        incident[e.v as usize].push(i as u32);
    }
    let mut in_matching: Vec<bool> = vec![false; h.m()];
    let mut cover: Vec<Option<u32>> = vec![None; n];
    for e in start.edges() {
        let i = h
            .edges()
            .binary_search_by_key(&e.eid, |x| x.eid)
            .expect("start matching drawn from H");
        in_matching[i] = true;
        cover[e.u as usize] = Some(i as u32);
        cover[e.v as usize] = Some(i as u32);
    }

    for _ in 0..rounds {
        let mut improved = false;

        // Take edges whose endpoints both became free.
        for (i, e) in h.edges().iter().enumerate() {
            if !in_matching[i] && cover[e.u as usize].is_none() && cover[e.v as usize].is_none() {
                in_matching[i] = true;
                cover[e.u as usize] = Some(i as u32);
                cover[e.v as usize] = Some(i as u32);
                improved = true;
            }
        }

        // One-for-up-to-two swaps around each matched edge.
        for i in 0..h.m() {
            if !in_matching[i] {
                continue;
            }
            let e = h.edges()[i];
            // Best free-ended candidate per endpoint: the other endpoint must
            // be uncovered or covered by e itself.
            let candidate = |at: u32| -> Option<u32> {
                let mut best: Option<u32> = None;
                for &j in &incident[at as usize] {
                    if j as usize == i || in_matching[j as usize] {
                        continue;
                    }
                    let other = h.edges()[j as usize].other(at).unwrap();
                    match cover[other as usize] {
                        Some(c) if c as usize != i => continue,
                        _ => {}
                    }
                    match best {
                        None => best = Some(j),
                        Some(b) => {
                            if h.edges()[j as usize].key() < h.edges()[b as usize].key() {
                                best = Some(j);
                            }
                        }
                    }
                }
                best
            };
            let a = candidate(e.u);
            let b = candidate(e.v);
            let w_of = |x: Option<u32>| x.map_or(0.0, |j| h.edges()[j as usize].w);
            // A pair is only usable if the two replacement edges are
            // vertex-disjoint from each other.
            let pair_ok = match (a, b) {
                (Some(x), Some(y)) => {
                    let (ex, ey) = (h.edges()[x as usize], h.edges()[y as usize]);
                    x != y && !ex.shares_endpoint(&ey)
                }
                _ => false,
            };
            let gain_pair = if pair_ok {
                w_of(a) + w_of(b) - e.w
            } else {
                f64::MIN
            };
            let gain_a = w_of(a) - e.w;
            let gain_b = w_of(b) - e.w;
            let best_gain = gain_pair.max(gain_a).max(gain_b);
            if best_gain <= 0.0 {
                continue;
            }
            let replacements: Vec<u32> = if best_gain == gain_pair {
                vec![a.unwrap(), b.unwrap()]
            } else if best_gain == gain_a {
                vec![a.unwrap()]
            } else {
                vec![b.unwrap()]
            };
            in_matching[i] = false;
            cover[e.u as usize] = None;
            cover[e.v as usize] = None;
            for j in replacements {
                let r = h.edges()[j as usize];
                in_matching[j as usize] = true;
                cover[r.u as usize] = Some(j);
                cover[r.v as usize] = Some(j);
            }
            improved = true;
        }

        if !improved {
            break;
        }
    }

    let edges: Vec<WeightedEdge> = h
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, _)| in_matching[*i])
        .map(|(_, e)| *e)
        .collect();
    Matching::from_edges(edges).expect("local search preserves matchinghood")
}

/// Runs both rounds. See module docs for the structure; timings cover
/// clustering, the parallel coreset round, and round 2 respectively.
pub fn run_pipeline(graph: &WeightedGraph, config: &PipelineConfig) -> Result<PipelineResult> {
    if config.workers == 0 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    if let PostProcess::Exact { max_union_edges } = config.post {
        if max_union_edges == 0 {
            return Err(Error::Config("exact threshold must be >= 1".into()));
        }
    }

    let t0 = Instant::now();
    let clustering = cluster(graph, &config.cluster);
    let lists = machine_edge_positions(&clustering);
    let cluster_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let per_machine: Vec<Matching> = pool.install(|| {
        lists
            .par_iter()
            .map(|list| {
                let taken = greedy_subset(graph.edges(), list, graph.n());
                let edges: Vec<WeightedEdge> =
                    taken.iter().map(|&i| graph.edges()[i as usize]).collect();
                Matching::from_edges(edges).expect("greedy output is vertex-disjoint")
            })
            .collect()
    });
    let coreset_ms = t1.elapsed().as_secs_f64() * 1e3;

    let t2 = Instant::now();
    let union_graph = union_coresets(graph, &per_machine);
    let (final_matching, exact_fallback) = round2(&union_graph, &per_machine, &config.post)?;
    let post_ms = t2.elapsed().as_secs_f64() * 1e3;

    validate_final(&final_matching, graph)?;

    let m = graph.m() as f64;
    let budget = (m * config.cluster.c * graph.n().max(1) as f64)
        .sqrt()
        .ceil() as u64;
    let max_machine = lists.iter().map(|l| l.len() as u64).max().unwrap_or(0);
    let advisory = MemoryAdvisory {
        budget_edges: budget,
        max_machine_edges: max_machine,
        within_budget: max_machine <= budget,
    };

    let quality = if config.compute_quality {
        let baseline = greedy(graph).0;
        Some(quality_report(&final_matching, &baseline))
    } else {
        None
    };

    Ok(PipelineResult {
        final_matching,
        per_machine,
        union_graph,
        timings: Timings {
            cluster_ms,
            coreset_ms,
            post_ms,
        },
        quality,
        advisory,
        exact_fallback,
    })
}

fn validate_final(matching: &Matching, graph: &WeightedGraph) -> Result<()> {
    for e in matching.edges() {
        match graph.find_by_eid(e.eid) {
            Some(g) if g.u == e.u && g.v == e.v && g.w == e.w => {}
            _ => {
                return Err(Error::Internal(format!(
                    "final matching edge {} not present in the input graph",
                    e.eid
                )))
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusterConfig;
    use crate::gen::{generate, DegreeModel, GenConfig, WeightModel};
    use crate::graph::WeightedGraph;

    fn random_graph(n: u32, m: u64, seed: u64) -> WeightedGraph {
        generate(&GenConfig {
            n,
            m,
            degrees: DegreeModel::Uniform,
            weights: WeightModel::Uniform,
            seed,
        })
        .unwrap()
    }

    fn cfg(k: u32, c: f64, seed: u64) -> PipelineConfig {
        PipelineConfig::new(ClusterConfig::new(k, c, seed).unwrap())
    }

    #[test]
    fn collapse_k1_c1_equals_sequential_greedy() {
        for seed in 0..5 {
            let g = random_graph(60, 240, seed);
            let mut config = cfg(1, 1.0, seed);
            config.post = PostProcess::Greedy;
            let result = run_pipeline(&g, &config).unwrap();
            let (base, _) = greedy(&g);
            let got: Vec<u64> = result
                .final_matching
                .edges()
                .iter()
                .map(|e| e.eid)
                .collect();
            let want: Vec<u64> = base.edges().iter().map(|e| e.eid).collect();
            assert_eq!(got, want);
            assert_eq!(result.final_matching.total_weight(), base.total_weight());
        }
    }

    #[test]
    fn coreset_edges_appear_in_union() {
        let g = random_graph(80, 400, 3);
        let result = run_pipeline(&g, &cfg(6, 2.0, 3)).unwrap();
        assert_eq!(result.per_machine.len(), 6);
        for m in &result.per_machine {
            for e in m.edges() {
                assert!(result.union_graph.find_by_eid(e.eid).is_some());
            }
            assert!(m.len() <= g.n() as usize / 2);
        }
        assert!(result.union_graph.m() <= 6 * g.n() as usize / 2);
    }

    #[test]
    fn best_of_dominates_each_machine_and_union_greedy() {
        for seed in 0..10 {
            let g = random_graph(50, 300, seed);
            let result = run_pipeline(&g, &cfg(8, 2.0, seed)).unwrap();
            let w = result.final_matching.total_weight();
            for m in &result.per_machine {
                assert!(w >= m.total_weight());
            }
            let (gh, _) = greedy(&result.union_graph);
            assert!(w >= gh.total_weight());
        }
    }

    #[test]
    fn union_deduplicates_shared_edges() {
        let g = random_graph(40, 100, 1);
        // c = k: every machine sees everything, so all coresets coincide.
        let result = run_pipeline(&g, &cfg(4, 4.0, 1)).unwrap();
        let first = &result.per_machine[0];
        for m in &result.per_machine[1..] {
            assert_eq!(m.total_weight(), first.total_weight());
            assert_eq!(m.len(), first.len());
        }
        assert_eq!(result.union_graph.m(), first.len());
    }

    #[test]
    fn exact_post_small_union_beats_or_ties_best_of() {
        for seed in 0..6 {
            let g = random_graph(12, 28, seed);
            let mut exact_cfg = cfg(3, 1.0, seed);
            exact_cfg.post = PostProcess::Exact {
                max_union_edges: 64,
            };
            let exact = run_pipeline(&g, &exact_cfg).unwrap();
            assert!(!exact.exact_fallback);
            let best = run_pipeline(&g, &cfg(3, 1.0, seed)).unwrap();
            assert!(exact.final_matching.total_weight() >= best.final_matching.total_weight());
        }
    }

    #[test]
    fn exact_post_falls_back_when_union_too_big() {
        let g = random_graph(100, 600, 9);
        let mut config = cfg(8, 3.0, 9);
        config.post = PostProcess::Exact { max_union_edges: 4 };
        let result = run_pipeline(&g, &config).unwrap();
        assert!(result.exact_fallback);
        // Fallback equals plain BestOf.
        let best = run_pipeline(&g, &cfg(8, 3.0, 9)).unwrap();
        assert_eq!(
            result.final_matching.total_weight(),
            best.final_matching.total_weight()
        );
    }

    #[test]
    fn local_search_never_below_union_greedy() {
        for seed in 0..8 {
            let g = random_graph(70, 350, seed);
            let mut config = cfg(6, 2.0, seed);
            config.post = PostProcess::LocalSearch { rounds: 4 };
            let result = run_pipeline(&g, &config).unwrap();
            let (gh, _) = greedy(&result.union_graph);
            assert!(result.final_matching.total_weight() >= gh.total_weight());
            assert!(crate::greedy::is_valid_matching(
                result.final_matching.edges(),
                &g
            ));
        }
    }

    #[test]
    fn quality_report_ratios() {
        let g = random_graph(30, 90, 2);
        let (base, _) = greedy(&g);
        let same = quality_report(&base, &base);
        assert_eq!(same.weight_ratio_vs_greedy, 100.0);
        assert_eq!(same.cardinality_ratio_vs_greedy, 100.0);
        assert!(!same.infinite);

        let empty = Matching::empty();
        let zero = quality_report(&empty, &empty);
        assert_eq!(zero.weight_ratio_vs_greedy, 100.0);
        let inf = quality_report(&base, &empty);
        assert!(inf.infinite);
        assert!(inf.weight_ratio_vs_greedy.is_infinite());
    }

    #[test]
    fn workers_zero_rejected_and_scheduling_invariance() {
        let g = random_graph(40, 160, 5);
        let mut config = cfg(4, 2.0, 5);
        config.workers = 0;
        assert!(run_pipeline(&g, &config).is_err());

        config.workers = 1;
        let one = run_pipeline(&g, &config).unwrap();
        config.workers = 4;
        let four = run_pipeline(&g, &config).unwrap();
        let a: Vec<u64> = one.final_matching.edges().iter().map(|e| e.eid).collect();
        let b: Vec<u64> = four.final_matching.edges().iter().map(|e| e.eid).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn quality_attached_when_requested() {
        let g = random_graph(60, 300, 7);
        let mut config = cfg(4, 2.0, 7);
        assert!(run_pipeline(&g, &config).unwrap().quality.is_none());
        config.compute_quality = true;
        let q = run_pipeline(&g, &config).unwrap().quality.unwrap();
        assert!(q.weight_ratio_vs_greedy > 0.0);
        assert!(q.cardinality_ratio_vs_greedy > 0.0);
    }
}
