//! Exact maximum-weight matching by branch-and-bound over the canonical edge
//! order. Exponential in the worst case; the limits keep it honest. This is
//! the ground truth for tests and the optional exact post-processor.

use crate::error::{Error, Result};
use crate::graph::{canonical_sort, WeightedEdge, WeightedGraph};
use crate::greedy::Matching;

#[derive(Clone, Copy, Debug)]
pub struct OracleLimits {
    pub max_edges: usize,
    pub max_vertices: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_edges: 24,
            max_vertices: 20,
        }
    }
}

impl OracleLimits {
    /// Edge-count cap only; for graphs whose vertex count is incidental
    /// (e.g. a union of matchings over a large vertex set).
    pub fn edges_only(max_edges: usize) -> Self {
        OracleLimits {
            max_edges,
            max_vertices: usize::MAX,
        }
    }
}

struct Search<'a> {
    order: &'a [WeightedEdge],
    /// prefix[i] = sum of the first i canonical weights; the heaviest r
    /// remaining edges at position i are order[i..i+r].
    prefix: Vec<f64>,
    matched: Vec<bool>,
    best_weight: f64,
    best_eids: Vec<u64>,
    current: Vec<u64>,
}

impl Search<'_> {
    fn upper_bound(&self, pos: usize, free: usize) -> f64 {
        let r = (self.order.len() - pos).min(free / 2);
        self.prefix[pos + r] - self.prefix[pos]
    }

    fn offer_current(&mut self, weight: f64) {
        let mut eids = self.current.clone();
        eids.sort_unstable();
        if weight > self.best_weight || (weight == self.best_weight && eids < self.best_eids) {
            self.best_weight = weight;
            self.best_eids = eids;
        }
    }

    fn recurse(&mut self, pos: usize, free: usize, weight: f64) {
        if pos == self.order.len() || free < 2 {
            self.offer_current(weight);
            return;
        }
        // Strict pruning keeps every equal-weight candidate reachable, which
        // the lexicographic tie-break needs.
        if weight + self.upper_bound(pos, free) < self.best_weight {
            return;
        }
        let e = self.order[pos];
        let (u, v) = (e.u as usize, e.v as usize);
        if !self.matched[u] && !self.matched[v] {
            self.matched[u] = true;
            self.matched[v] = true;
            self.current.push(e.eid);
            self.recurse(pos + 1, free - 2, weight + e.w);
            self.current.pop();
            self.matched[u] = false;
            self.matched[v] = false;
        }
        self.recurse(pos + 1, free, weight);
    }
}

/// Maximum-weight matching; ties broken by the lexicographically smallest
/// sorted eid set, so the result is deterministic.
pub fn exact_mwm(graph: &WeightedGraph, limits: &OracleLimits) -> Result<Matching> {
    if graph.m() > limits.max_edges {
        return Err(Error::OracleLimit(format!(
            "{} edges > cap {}",
            graph.m(),
            limits.max_edges
        )));
    }
    if (graph.n() as usize) > limits.max_vertices {
        return Err(Error::OracleLimit(format!(
            "{} vertices > cap {}",
            graph.n(),
            limits.max_vertices
        )));
    }
    let order = canonical_sort(graph);
    let mut prefix = Vec::with_capacity(order.len() + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for e in &order {
        acc += e.w;
        prefix.push(acc);
    }
    let mut search = Search {
        order: &order,
        prefix,
        matched: vec![false; graph.n() as usize],
        best_weight: 0.0,
        best_eids: Vec::new(),
        current: Vec::new(),
    };
    search.recurse(0, graph.n() as usize, 0.0);
    let eids: std::collections::HashSet<u64> = search.best_eids.iter().copied().collect();
    let edges: Vec<WeightedEdge> = graph
        .edges()
        .iter()
        .filter(|e| eids.contains(&e.eid))
        .copied()
        .collect();
    Matching::from_edges(edges)
}

pub fn opt_weight(graph: &WeightedGraph, limits: &OracleLimits) -> Result<f64> {
    Ok(exact_mwm(graph, limits)?.total_weight())
}
