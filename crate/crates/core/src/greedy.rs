//! Sequential greedy maximum-weight matching: scan edges in canonical order,
//! take an edge iff both endpoints are unmatched. Serves both as the
//! per-machine coreset kernel and as the quality baseline.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::{
    sorted_edge_positions, sorted_subset_positions, OrderKey, VertexId, WeightedEdge, WeightedGraph,
};

/// A vertex-disjoint edge set. Edges are kept in ascending-eid order and the
/// total weight is the sum of member weights accumulated in that order, so
/// equal matchings always report bit-identical totals.
#[derive(Clone, Debug)]
pub struct Matching {
    edges: Vec<WeightedEdge>,
    total_weight: f64,
    matched: HashMap<VertexId, u32>,
}

impl Matching {
    pub fn empty() -> Self {
        Matching {
            edges: Vec::new(),
            total_weight: 0.0,
            matched: HashMap::new(),
        }
    }

    /// Validates vertex-disjointness while building.
    pub fn from_edges(mut edges: Vec<WeightedEdge>) -> Result<Self> {
        edges.sort_unstable_by_key(|e| e.eid);
        let mut matched = HashMap::with_capacity(edges.len() * 2);
        for (i, e) in edges.iter().enumerate() {
            if e.u == e.v {
                return Err(Error::InvalidMatching(format!(
                    "edge {} is a self-loop",
                    e.eid
                )));
            }
            for vtx in [e.u, e.v] {
                if matched.insert(vtx, i as u32).is_some() {
                    return Err(Error::InvalidMatching(format!(
                        "vertex {} covered twice (edge {})",
                        vtx, e.eid
                    )));
                }
            }
        }
        let total_weight = edges.iter().fold(0.0, |acc, e| acc + e.w);
        Ok(Matching {
            edges,
            total_weight,
            matched,
        })
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn covers(&self, v: VertexId) -> bool {
        self.matched.contains_key(&v)
    }

    /// The matching edge covering `v`, if any.
    pub fn edge_on(&self, v: VertexId) -> Option<&WeightedEdge> {
        self.matched.get(&v).map(|&i| &self.edges[i as usize])
    }

    pub fn contains_eid(&self, eid: u64) -> bool {
        self.edges.binary_search_by_key(&eid, |e| e.eid).is_ok()
    }
}

/// Per-vertex record of when greedy matched it. The "time" axis is the
/// canonical order itself: we store the order key of the covering edge, which
/// is order-isomorphic to the edge's position in the full canonical order and
/// therefore comparable against any edge, including edges the machine never
/// saw. A vertex has a key iff it is matched in the final matching.
#[derive(Clone, Debug)]
pub struct MatchTrace {
    keys: Vec<Option<OrderKey>>,
}

impl MatchTrace {
    pub fn match_key(&self, v: VertexId) -> Option<OrderKey> {
        self.keys[v as usize]
    }

    /// True iff `v` was matched strictly before `key`'s turn in the canonical
    /// order (the prefix-run query used by free/blocked classification).
    pub fn matched_before(&self, v: VertexId, key: OrderKey) -> bool {
        self.keys[v as usize].is_some_and(|k| k < key)
    }
}

/// Greedy over the whole graph, with trace.
pub fn greedy(graph: &WeightedGraph) -> (Matching, MatchTrace) {
    let order = sorted_edge_positions(graph.edges());
    let (taken, keys) = take_greedy_traced(graph.edges(), &order, graph.n());
    let edges = taken.iter().map(|&i| graph.edges()[i as usize]).collect();
    let matching = Matching::from_edges(edges).expect("greedy output is vertex-disjoint");
    (matching, MatchTrace { keys })
}

/// Greedy over an index subset of a parent edge slice; no trace, bitset
/// bookkeeping. Returns positions of taken edges in ascending-eid order.
pub(crate) fn greedy_subset(edges: &[WeightedEdge], subset: &[u32], n: VertexId) -> Vec<u32> {
    let order = sorted_subset_positions(edges, subset);
    let mut matched = vec![0u64; (n as usize).div_ceil(64)];
    let mut taken = Vec::new();
    for &i in &order {
        let e = &edges[i as usize];
        let (wu, bu) = (e.u as usize / 64, e.u as usize % 64);
        let (wv, bv) = (e.v as usize / 64, e.v as usize % 64);
        if matched[wu] >> bu & 1 == 0 && matched[wv] >> bv & 1 == 0 {
            matched[wu] |= 1 << bu;
            matched[wv] |= 1 << bv;
            taken.push(i);
        }
    }
    taken.sort_unstable();
    taken
}

fn take_greedy_traced(
    edges: &[WeightedEdge],
    order: &[u32],
    n: VertexId,
) -> (Vec<u32>, Vec<Option<OrderKey>>) {
    let mut keys: Vec<Option<OrderKey>> = vec![None; n as usize];
    let mut taken = Vec::new();
    for &i in order {
        let e = &edges[i as usize];
        if keys[e.u as usize].is_none() && keys[e.v as usize].is_none() {
            let key = e.key();
            keys[e.u as usize] = Some(key);
            keys[e.v as usize] = Some(key);
            taken.push(i);
        }
    }
    (taken, keys)
}

/// True iff the edges are vertex-disjoint, belong to `graph` (matched by eid,
/// endpoints, and weight), and have in-range endpoints.
pub fn is_valid_matching(edges: &[WeightedEdge], graph: &WeightedGraph) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(edges.len() * 2);
    for e in edges {
        if e.u >= graph.n() || e.v >= graph.n() || e.u == e.v {
            return false;
        }
        match graph.find_by_eid(e.eid) {
            Some(g) if g.u == e.u && g.v == e.v && g.w == e.w => {}
            _ => return false,
        }
        if !seen.insert(e.u) || !seen.insert(e.v) {
            return false;
        }
    }
    true
}

/// Writes `u_label<TAB>v_label<TAB>w` lines in canonical edge order.
pub fn write_matching<W: Write>(
    matching: &Matching,
    graph: &WeightedGraph,
    out: &mut W,
) -> std::io::Result<()> {
    let mut edges: Vec<&WeightedEdge> = matching.edges().iter().collect();
    edges.sort_unstable_by_key(|e| e.key());
    for e in edges {
        writeln!(
            out,
            "{}\t{}\t{}",
            graph.label_of(e.u),
            graph.label_of(e.v),
            e.w
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;

    fn path_graph(weights: &[f64]) -> WeightedGraph {
        let edges = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| WeightedEdge {
                eid: i as u64,
                u: i as u32,
                v: i as u32 + 1,
                w,
            })
            .collect();
        WeightedGraph::new(weights.len() as u32 + 1, edges).unwrap()
    }

    #[test]
    fn empty_graph_gives_empty_matching() {
        let g = WeightedGraph::new(0, vec![]).unwrap();
        let (m, _) = greedy(&g);
        assert!(m.is_empty());
        assert_eq!(m.total_weight(), 0.0);
    }

    #[test]
    fn single_edge_taken() {
        let g = WeightedGraph::new(
            2,
            vec![WeightedEdge {
                eid: 0,
                u: 0,
                v: 1,
                w: 7.0,
            }],
        )
        .unwrap();
        let (m, trace) = greedy(&g);
        assert_eq!(m.len(), 1);
        assert_eq!(m.total_weight(), 7.0);
        assert!(trace.match_key(0).is_some());
        assert_eq!(trace.match_key(0), trace.match_key(1));
    }

    #[test]
    fn heavy_middle_edge_blocks_path() {
        // Path a-b-c-d, weights 3,5,3: greedy takes the 5 and nothing else.
        let g = path_graph(&[3.0, 5.0, 3.0]);
        let (m, trace) = greedy(&g);
        assert_eq!(m.len(), 1);
        assert_eq!(m.total_weight(), 5.0);
        assert_eq!(m.edges()[0].eid, 1);
        assert!(trace.match_key(0).is_none());
        assert!(trace.match_key(3).is_none());
        // Both middle vertices matched at the weight-5 edge's turn.
        let key = OrderKey::new(5.0, 1);
        assert_eq!(trace.match_key(1), Some(key));
        assert!(!trace.matched_before(1, key));
        assert!(trace.matched_before(1, OrderKey::new(3.0, 0)));
    }

    #[test]
    fn equal_weights_resolved_by_eid() {
        let g = path_graph(&[1.0, 1.0, 1.0]);
        let (m, _) = greedy(&g);
        let eids: Vec<u64> = m.edges().iter().map(|e| e.eid).collect();
        assert_eq!(eids, vec![0, 2]);
        assert_eq!(m.total_weight(), 2.0);
    }

    #[test]
    fn maximality_no_free_edge_remains() {
        let g = path_graph(&[2.0, 9.0, 4.0, 4.0, 1.0]);
        let (m, _) = greedy(&g);
        for e in g.edges() {
            assert!(
                m.covers(e.u) || m.covers(e.v),
                "edge {} has both endpoints unmatched",
                e.eid
            );
        }
    }

    #[test]
    fn matching_validation() {
        let g = path_graph(&[1.0, 2.0, 3.0]);
        let ab = g.edges()[0];
        let bc = g.edges()[1];
        let cd = g.edges()[2];
        assert!(is_valid_matching(&[ab, cd], &g));
        assert!(!is_valid_matching(&[ab, bc], &g));
        let foreign = WeightedEdge {
            eid: 77,
            u: 0,
            v: 3,
            w: 1.0,
        };
        assert!(!is_valid_matching(&[foreign], &g));
        assert!(Matching::from_edges(vec![ab, bc]).is_err());
    }

    #[test]
    fn matching_lookup_by_vertex() {
        let g = path_graph(&[3.0, 5.0, 3.0]);
        let (m, _) = greedy(&g);
        assert!(m.covers(1) && m.covers(2));
        assert_eq!(m.edge_on(1).unwrap().eid, 1);
        assert!(m.edge_on(0).is_none());
        assert!(m.contains_eid(1));
        assert!(!m.contains_eid(0));
    }

    #[test]
    fn writes_matching_in_canonical_order() {
        let g = path_graph(&[1.0, 9.0, 1.0, 8.0, 1.0]);
        let (m, _) = greedy(&g);
        let mut buf = Vec::new();
        write_matching(&m, &g, &mut buf).unwrap();
        assert_eq!(std::str::from_utf8(&buf).unwrap(), "1\t2\t9\n3\t4\t8\n");
    }

    #[test]
    fn subset_greedy_agrees_with_whole_graph_greedy() {
        let g = path_graph(&[2.0, 7.0, 7.0, 3.0, 4.0]);
        let all: Vec<u32> = (0..g.m() as u32).collect();
        let taken = greedy_subset(g.edges(), &all, g.n());
        let (m, _) = greedy(&g);
        let want: Vec<u64> = m.edges().iter().map(|e| e.eid).collect();
        let got: Vec<u64> = taken.iter().map(|&i| g.edges()[i as usize].eid).collect();
        assert_eq!(got, want);
    }
}
