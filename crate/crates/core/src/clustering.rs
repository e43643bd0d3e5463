//! Random k-clustering of the edge set with expected multiplicity c.
//!
//! Every edge independently draws a copy count c_e ~ Binomial(k, c/k) and is
//! placed on that many distinct machines chosen uniformly. All randomness for
//! an edge is derived from (seed, eid) by a splittable counter-based
//! construction, so the assignment is a product distribution, reproducible,
//! and independent of edge iteration order or thread scheduling.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{WeightedEdge, WeightedGraph};

#[derive(Clone, Copy, Debug)]
pub struct ClusterConfig {
    /// Machine count, k >= 1.
    pub k: u32,
    /// Expected multiplicity, 1 <= c <= k. Need not be an integer.
    pub c: f64,
    pub seed: u64,
}

impl ClusterConfig {
    pub fn new(k: u32, c: f64, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("machine count k must be >= 1".into()));
        }
        if !(c.is_finite() && c >= 1.0 && c <= k as f64) {
            return Err(Error::Config(format!(
                "multiplicity c={} out of range [1, k={}]",
                c, k
            )));
        }
        Ok(ClusterConfig { k, c, seed })
    }

    /// Maps an accuracy parameter to a multiplicity:
    /// c = max(1, ceil((1/eps) * ln(1/eps))), a stated convention.
    pub fn from_epsilon(k: u32, eps: f64, seed: u64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Config(format!("epsilon={} must be in (0,1)", eps)));
        }
        let c = ((1.0 / eps) * (1.0 / eps).ln()).ceil().max(1.0);
        if c > k as f64 {
            return Err(Error::Config(format!(
                "epsilon={} maps to c={} which exceeds k={}",
                eps, c, k
            )));
        }
        ClusterConfig::new(k, c, seed)
    }
}

/// Edge-to-machines assignment in compressed form, parallel to the graph's
/// edge slice. Per-edge machine lists are sorted and duplicate-free; a list
/// may be empty (the binomial drew zero).
#[derive(Clone, Debug)]
pub struct Clustering {
    k: u32,
    offsets: Vec<u64>,
    machines: Vec<u32>,
}

impl Clustering {
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Number of edges covered (equals the graph's edge count).
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Machines holding the edge at position `idx` in the graph's edge slice.
    pub fn machines_of(&self, idx: usize) -> &[u32] {
        let lo = self.offsets[idx] as usize;
        let hi = self.offsets[idx + 1] as usize;
        &self.machines[lo..hi]
    }

    pub fn copy_count(&self, idx: usize) -> u32 {
        (self.offsets[idx + 1] - self.offsets[idx]) as u32
    }

    pub fn total_copies(&self) -> u64 {
        *self.offsets.last().unwrap()
    }

    /// Debug dump: `eid<TAB>machine,machine,...` lines.
    pub fn write_debug<W: Write>(&self, graph: &WeightedGraph, out: &mut W) -> std::io::Result<()> {
        for (idx, e) in graph.edges().iter().enumerate() {
            let list: Vec<String> = self
                .machines_of(idx)
                .iter()
                .map(|m| m.to_string())
                .collect();
            writeln!(out, "{}\t{}", e.eid, list.join(","))?;
        }
        Ok(())
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splitmix64 stream whose starting state is a hash of (seed, eid). Cheap to
/// construct per edge, which keeps clustering at 10^7 edges inexpensive.
pub(crate) struct EdgeRng {
    state: u64,
}

impl EdgeRng {
    pub(crate) fn new(seed: u64, eid: u64) -> Self {
        EdgeRng {
            state: mix64(
                seed.wrapping_add(GOLDEN)
                    .wrapping_add(mix64(eid.wrapping_mul(GOLDEN))),
            ),
        }
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform integer in [0, bound) by 128-bit widening multiply.
    fn below(&mut self, bound: u32) -> u32 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u32
    }
}

/// Inverse-CDF table for Binomial(k, p), built once per clustering run.
/// The pmf is computed in log space so large k and extreme p stay stable.
pub(crate) struct BinomialTable {
    cdf: Vec<f64>,
}

impl BinomialTable {
    pub(crate) fn new(k: u32, p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p));
        let k = k as usize;
        let mut cdf = vec![0.0; k + 1];
        if p >= 1.0 {
            // Degenerate: always k successes.
            cdf[k] = 1.0;
            return BinomialTable { cdf };
        }
        let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
        let mut ln_choose = 0.0;
        let mut acc = 0.0;
        let mut probs = vec![0.0; k + 1];
        for (i, slot) in probs.iter_mut().enumerate() {
            *slot = (ln_choose + i as f64 * ln_p + (k - i) as f64 * ln_q).exp();
            acc += *slot;
            if i < k {
                ln_choose += ((k - i) as f64).ln() - ((i + 1) as f64).ln();
            }
        }
        let mut cum = 0.0;
        for i in 0..=k {
            cum += probs[i] / acc;
            cdf[i] = cum;
        }
        cdf[k] = 1.0;
        BinomialTable { cdf }
    }

    pub(crate) fn sample(&self, u: u64) -> u32 {
        let x = (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.cdf.partition_point(|&c| c <= x) as u32
    }
}

/// Floyd's algorithm: t distinct values from [0, k), uniform over t-subsets.
fn sample_distinct(rng: &mut EdgeRng, k: u32, t: u32, out: &mut Vec<u32>) {
    out.clear();
    for j in (k - t)..k {
        let r = rng.below(j + 1);
        if out.contains(&r) {
            out.push(j);
        } else {
            out.push(r);
        }
    }
    out.sort_unstable();
}

/// Assigns every edge to its machines. Deterministic in (seed, eid) only.
pub fn cluster(graph: &WeightedGraph, cfg: &ClusterConfig) -> Clustering {
    let p = cfg.c / cfg.k as f64;
    let table = BinomialTable::new(cfg.k, p);
    let edges = graph.edges();

    let counts: Vec<u32> = edges
        .par_iter()
        .map(|e| table.sample(EdgeRng::new(cfg.seed, e.eid).next_u64()))
        .collect();

    let mut offsets = Vec::with_capacity(edges.len() + 1);
    let mut acc = 0u64;
    offsets.push(0);
    for &c in &counts {
        acc += c as u64;
        offsets.push(acc);
    }

    let mut machines = vec![0u32; acc as usize];
    let chunk = 1 << 14;
    let mut slices: Vec<(usize, &mut [u32])> = Vec::new();
    {
        let mut rest: &mut [u32] = &mut machines;
        let mut consumed = 0usize;
        let mut start = 0usize;
        while start < edges.len() {
            let end = (start + chunk).min(edges.len());
            let len = (offsets[end] - offsets[start]) as usize;
            let (head, tail) = rest.split_at_mut(len);
            slices.push((start, head));
            rest = tail;
            consumed += len;
            start = end;
        }
        debug_assert_eq!(consumed, acc as usize);
    }

    slices.into_par_iter().for_each(|(start, slice)| {
        let mut scratch = Vec::with_capacity(cfg.k as usize);
        let mut at = 0usize;
        let end = (start + chunk).min(edges.len());
        for idx in start..end {
            let t = counts[idx];
            if t == 0 {
                continue;
            }
            let mut rng = EdgeRng::new(cfg.seed, edges[idx].eid);
            let _ = rng.next_u64(); // consume the binomial draw again to stay in phase
            sample_distinct(&mut rng, cfg.k, t, &mut scratch);
            slice[at..at + t as usize].copy_from_slice(&scratch);
            at += t as usize;
        }
        debug_assert_eq!(at, slice.len());
    });

    Clustering {
        k: cfg.k,
        offsets,
        machines,
    }
}

/// The subgraph of edges assigned to machine `i`; eids and weights preserved.
pub fn partition_subgraph(
    graph: &WeightedGraph,
    clustering: &Clustering,
    i: u32,
) -> Result<WeightedGraph> {
    if i >= clustering.k() {
        return Err(Error::Config(format!(
            "machine index {} out of range (k={})",
            i,
            clustering.k()
        )));
    }
    let edges: Vec<WeightedEdge> = graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(idx, _)| clustering.machines_of(*idx).binary_search(&i).is_ok())
        .map(|(_, e)| *e)
        .collect();
    Ok(WeightedGraph::from_parts_unchecked(
        graph.n(),
        edges,
        Arc::clone(graph.labels()),
    ))
}

/// Per-machine edge position lists (the pipeline's cheap alternative to
/// materializing k subgraphs).
pub(crate) fn machine_edge_positions(clustering: &Clustering) -> Vec<Vec<u32>> {
    let k = clustering.k() as usize;
    let mut sizes = vec![0usize; k];
    for &m in &clustering.machines {
        sizes[m as usize] += 1;
    }
    let mut lists: Vec<Vec<u32>> = sizes.into_iter().map(Vec::with_capacity).collect();
    for idx in 0..clustering.len() {
        for &m in clustering.machines_of(idx) {
            lists[m as usize].push(idx as u32);
        }
    }
    lists
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct MultiplicityStats {
    pub mean: f64,
    /// histogram[t] = number of edges with copy count t, t in 0..=k.
    pub histogram: Vec<u64>,
    pub per_machine_sizes: Vec<u64>,
    pub zero_fraction: f64,
    pub total_copies: u64,
}

pub fn multiplicity_stats(clustering: &Clustering) -> MultiplicityStats {
    let k = clustering.k() as usize;
    let m = clustering.len();
    let mut histogram = vec![0u64; k + 1];
    let mut per_machine_sizes = vec![0u64; k];
    for idx in 0..m {
        let list = clustering.machines_of(idx);
        histogram[list.len()] += 1;
        for &mach in list {
            per_machine_sizes[mach as usize] += 1;
        }
    }
    let total = clustering.total_copies();
    let zero_fraction = if m == 0 {
        0.0
    } else {
        histogram[0] as f64 / m as f64
    };
    MultiplicityStats {
        mean: if m == 0 { 0.0 } else { total as f64 / m as f64 },
        histogram,
        per_machine_sizes,
        zero_fraction,
        total_copies: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;

    fn grid_graph(m: usize) -> WeightedGraph {
        let n = (m + 1) as u32;
        let edges = (0..m)
            .map(|i| WeightedEdge {
                eid: i as u64,
                u: i as u32,
                v: i as u32 + 1,
                w: 1.0 + (i % 10) as f64,
            })
            .collect();
        WeightedGraph::new(n, edges).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ClusterConfig::new(0, 1.0, 0).is_err());
        assert!(ClusterConfig::new(4, 5.0, 0).is_err());
        assert!(ClusterConfig::new(4, 0.5, 0).is_err());
        assert!(ClusterConfig::new(4, 2.5, 0).is_ok());
    }

    #[test]
    fn epsilon_mapping() {
        // eps=0.5 -> (1/eps) ln(1/eps) = 2 ln 2 ~= 1.386 -> c = 2.
        let cfg = ClusterConfig::from_epsilon(16, 0.5, 0).unwrap();
        assert_eq!(cfg.c, 2.0);
        // Small eps needs c beyond k.
        assert!(ClusterConfig::from_epsilon(2, 0.01, 0).is_err());
        assert!(ClusterConfig::from_epsilon(16, 0.0, 0).is_err());
        assert!(ClusterConfig::from_epsilon(16, 1.0, 0).is_err());
    }

    #[test]
    fn c_equals_k_assigns_everywhere() {
        let g = grid_graph(50);
        let cl = cluster(&g, &ClusterConfig::new(4, 4.0, 9).unwrap());
        for idx in 0..g.m() {
            assert_eq!(cl.machines_of(idx), &[0, 1, 2, 3]);
        }
    }

    #[test]
    fn k1_c1_puts_every_edge_on_machine_zero() {
        let g = grid_graph(50);
        let cl = cluster(&g, &ClusterConfig::new(1, 1.0, 123).unwrap());
        for idx in 0..g.m() {
            assert_eq!(cl.machines_of(idx), &[0]);
        }
    }

    #[test]
    fn machine_lists_sorted_distinct_in_range() {
        let g = grid_graph(2000);
        let cfg = ClusterConfig::new(12, 5.0, 42).unwrap();
        let cl = cluster(&g, &cfg);
        for idx in 0..g.m() {
            let list = cl.machines_of(idx);
            assert!(list.windows(2).all(|p| p[0] < p[1]));
            assert!(list.iter().all(|&m| m < 12));
        }
    }

    #[test]
    fn assignment_depends_only_on_seed_and_eid() {
        let g = grid_graph(500);
        let cfg = ClusterConfig::new(8, 3.0, 7).unwrap();
        let cl = cluster(&g, &cfg);

        // Same eids presented in a different storage order (drop every other
        // edge): surviving eids keep identical machine sets.
        let thinned: Vec<WeightedEdge> = g.edges().iter().step_by(2).copied().collect();
        let g2 = WeightedGraph::new(g.n(), thinned).unwrap();
        let cl2 = cluster(&g2, &cfg);
        for (idx2, e) in g2.edges().iter().enumerate() {
            let idx = e.eid as usize;
            assert_eq!(cl.machines_of(idx), cl2.machines_of(idx2));
        }

        let other_seed = cluster(&g, &ClusterConfig::new(8, 3.0, 8).unwrap());
        let same = (0..g.m()).all(|i| cl.machines_of(i) == other_seed.machines_of(i));
        assert!(!same, "different seeds produced identical clustering");
    }

    #[test]
    fn partition_subgraph_filters_and_preserves() {
        let g = grid_graph(300);
        let cfg = ClusterConfig::new(6, 2.0, 1).unwrap();
        let cl = cluster(&g, &cfg);
        let mut recount = vec![0usize; g.m()];
        for i in 0..6 {
            let part = partition_subgraph(&g, &cl, i).unwrap();
            assert_eq!(part.n(), g.n());
            for e in part.edges() {
                let orig = g.find_by_eid(e.eid).unwrap();
                assert_eq!(orig, e);
                recount[e.eid as usize] += 1;
            }
        }
        for (idx, &count) in recount.iter().enumerate() {
            assert_eq!(count, cl.machines_of(idx).len());
        }
        assert!(partition_subgraph(&g, &cl, 6).is_err());
    }

    #[test]
    fn machine_edge_positions_matches_partitions() {
        let g = grid_graph(300);
        let cl = cluster(&g, &ClusterConfig::new(5, 2.0, 3).unwrap());
        let lists = machine_edge_positions(&cl);
        for (i, list) in lists.iter().enumerate() {
            let part = partition_subgraph(&g, &cl, i as u32).unwrap();
            let want: Vec<u32> = part.edges().iter().map(|e| e.eid as u32).collect();
            assert_eq!(list, &want);
        }
    }

    #[test]
    fn stats_mean_near_c_and_machine_sizes_balanced() {
        let g = grid_graph(20_000);
        let cfg = ClusterConfig::new(16, 2.0, 11).unwrap();
        let stats = multiplicity_stats(&cluster(&g, &cfg));
        assert!((stats.mean - 2.0).abs() < 0.1, "mean {}", stats.mean);
        let expect: f64 = 20_000.0 * 2.0 / 16.0;
        let tol = 5.0 * expect.sqrt();
        for &s in &stats.per_machine_sizes {
            assert!((s as f64 - expect).abs() < tol, "machine size {}", s);
        }
        assert_eq!(
            stats.histogram.iter().sum::<u64>(),
            20_000,
            "histogram covers every edge"
        );
    }

    #[test]
    fn binomial_table_degenerate_cases() {
        let t = BinomialTable::new(4, 1.0);
        for u in [0u64, 1 << 40, u64::MAX] {
            assert_eq!(t.sample(u), 4);
        }
        let t = BinomialTable::new(4, 0.0);
        for u in [0u64, 1 << 40, u64::MAX] {
            assert_eq!(t.sample(u), 0);
        }
    }

    #[test]
    fn binomial_table_matches_closed_form_pmf() {
        // Binomial(16, 1/16): P(0) = (15/16)^16.
        let t = BinomialTable::new(16, 1.0 / 16.0);
        let p0 = (15.0f64 / 16.0).powi(16);
        assert!((t.cdf[0] - p0).abs() < 1e-12);
        // P(0)+P(1): add 16 * (1/16) * (15/16)^15.
        let p1 = 16.0 * (1.0 / 16.0) * (15.0f64 / 16.0).powi(15);
        assert!((t.cdf[1] - (p0 + p1)).abs() < 1e-12);
    }

    #[test]
    fn conditional_subset_uniformity() {
        // Given c_e = t, each t-subset of machines must be equally likely.
        // k=5, t=2: 10 subsets; frequency counts over many draws.
        let k = 5u32;
        let mut counts = std::collections::HashMap::new();
        let mut total = 0u64;
        for eid in 0..200_000u64 {
            let mut rng = EdgeRng::new(99, eid);
            let mut out = Vec::new();
            sample_distinct(&mut rng, k, 2, &mut out);
            *counts.entry((out[0], out[1])).or_insert(0u64) += 1;
            total += 1;
        }
        assert_eq!(counts.len(), 10);
        let expect = total as f64 / 10.0;
        for (&subset, &c) in &counts {
            let dev = (c as f64 - expect).abs() / expect.sqrt();
            assert!(
                dev < 5.0,
                "subset {:?} count {} deviates {:.1} sigma",
                subset,
                c,
                dev
            );
        }
    }

    #[test]
    fn empty_graph_clusters_fine() {
        let g = WeightedGraph::new(3, vec![]).unwrap();
        let cl = cluster(&g, &ClusterConfig::new(4, 2.0, 0).unwrap());
        assert_eq!(cl.len(), 0);
        assert_eq!(cl.total_copies(), 0);
        let stats = multiplicity_stats(&cl);
        assert_eq!(stats.mean, 0.0);
    }
}
