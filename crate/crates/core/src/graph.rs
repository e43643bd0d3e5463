//! Weighted-graph representation, edge-list ingestion, and the canonical
//! total order on edges used for tie-breaking everywhere else.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Undirected edge with a stable 64-bit id and a strictly positive finite weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedEdge {
    pub eid: u64,
    pub u: VertexId,
    pub v: VertexId,
    pub w: f64,
}

impl WeightedEdge {
    pub fn key(&self) -> OrderKey {
        OrderKey::new(self.w, self.eid)
    }

    pub fn touches(&self, x: VertexId) -> bool {
        self.u == x || self.v == x
    }

    /// The endpoint that is not `x`, if `x` is an endpoint at all.
    pub fn other(&self, x: VertexId) -> Option<VertexId> {
        if self.u == x {
            Some(self.v)
        } else if self.v == x {
            Some(self.u)
        } else {
            None
        }
    }

    pub fn shares_endpoint(&self, o: &WeightedEdge) -> bool {
        self.touches(o.u) || self.touches(o.v)
    }
}

/// Canonical edge order: weight descending, then eid ascending.
///
/// For strictly positive finite floats the IEEE bit pattern is monotone in the
/// value, so the complemented bits give the descending-weight order without
/// any float comparison. Equal weights produce equal bit patterns, so the eid
/// component makes the order total. The same key is obtained for the same
/// edge on every machine, which is the consistency the per-machine greedy
/// runs rely on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderKey {
    rev_w_bits: u64,
    eid: u64,
}

impl OrderKey {
    pub fn new(w: f64, eid: u64) -> Self {
        debug_assert!(w > 0.0 && w.is_finite());
        OrderKey {
            rev_w_bits: !w.to_bits(),
            eid,
        }
    }

    pub fn weight(&self) -> f64 {
        f64::from_bits(!self.rev_w_bits)
    }

    pub fn eid(&self) -> u64 {
        self.eid
    }
}

/// Vertex label dictionary. Ids are dense 0..n-1; every id maps back to
/// exactly one external label.
#[derive(Debug)]
pub enum Labels {
    /// Vertex i is labelled by its decimal representation (synthetic graphs).
    Numeric(u32),
    Named {
        names: Vec<String>,
        index: HashMap<String, VertexId>,
    },
}

impl Labels {
    pub fn len(&self) -> u32 {
        match self {
            Labels::Numeric(n) => *n,
            Labels::Named { names, .. } => names.len() as u32,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label_of(&self, v: VertexId) -> String {
        match self {
            Labels::Numeric(_) => v.to_string(),
            Labels::Named { names, .. } => names[v as usize].clone(),
        }
    }

    pub fn id_of(&self, label: &str) -> Option<VertexId> {
        match self {
            Labels::Numeric(n) => label.parse::<u32>().ok().filter(|v| v < n),
            Labels::Named { index, .. } => index.get(label).copied(),
        }
    }
}

/// Immutable weighted graph. Edges are kept in ascending-eid order; the
/// structure is cheap to share across worker threads.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    n: VertexId,
    edges: Vec<WeightedEdge>,
    labels: Arc<Labels>,
}

impl WeightedGraph {
    /// Builds a graph over vertices 0..n with numeric labels, validating every
    /// edge invariant (endpoints in range, no self-loops, positive finite
    /// weights, unique eids).
    pub fn new(n: VertexId, edges: Vec<WeightedEdge>) -> Result<Self> {
        Self::with_labels(n, edges, Arc::new(Labels::Numeric(n)))
    }

    pub fn with_labels(
        n: VertexId,
        mut edges: Vec<WeightedEdge>,
        labels: Arc<Labels>,
    ) -> Result<Self> {
        if labels.len() != n {
            return Err(Error::Config(format!(
                "label dictionary has {} entries for {} vertices",
                labels.len(),
                n
            )));
        }
        for e in &edges {
            validate_edge(n, e)?;
        }
        edges.sort_unstable_by_key(|e| e.eid);
        for pair in edges.windows(2) {
            if pair[0].eid == pair[1].eid {
                return Err(Error::Config(format!("duplicate eid {}", pair[0].eid)));
            }
        }
        Ok(WeightedGraph { n, edges, labels })
    }

    /// Constructor for internal callers whose edges are already validated,
    /// deduplicated, and in ascending-eid order.
    pub(crate) fn from_parts_unchecked(
        n: VertexId,
        edges: Vec<WeightedEdge>,
        labels: Arc<Labels>,
    ) -> Self {
        debug_assert!(edges.windows(2).all(|p| p[0].eid < p[1].eid));
        WeightedGraph { n, edges, labels }
    }

    pub fn n(&self) -> VertexId {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn labels(&self) -> &Arc<Labels> {
        &self.labels
    }

    pub fn label_of(&self, v: VertexId) -> String {
        self.labels.label_of(v)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().fold(0.0, |acc, e| acc + e.w)
    }

    /// Binary search by eid (edges are stored in ascending-eid order).
    pub fn find_by_eid(&self, eid: u64) -> Option<&WeightedEdge> {
        self.edges
            .binary_search_by_key(&eid, |e| e.eid)
            .ok()
            .map(|i| &self.edges[i])
    }
}

fn validate_edge(n: VertexId, e: &WeightedEdge) -> Result<()> {
    if e.u >= n || e.v >= n {
        return Err(Error::Config(format!(
            "edge {} endpoint out of range (n={})",
            e.eid, n
        )));
    }
    if e.u == e.v {
        return Err(Error::Config(format!("edge {} is a self-loop", e.eid)));
    }
    if !(e.w > 0.0 && e.w.is_finite()) {
        return Err(Error::Config(format!(
            "edge {} has non-positive or non-finite weight {}",
            e.eid, e.w
        )));
    }
    Ok(())
}

/// Edges sorted by the canonical order (weight descending, eid ascending).
pub fn canonical_sort(graph: &WeightedGraph) -> Vec<WeightedEdge> {
    let order = sorted_edge_positions(graph.edges());
    order.iter().map(|&i| graph.edges()[i as usize]).collect()
}

/// Positions into `edges` in canonical order. Requires ascending-eid input
/// (the storage invariant), so the positional tie-break equals the eid
/// tie-break; sorting packed (bits, position) pairs keeps this cache-friendly
/// at the 10^7-edge scale.
pub(crate) fn sorted_edge_positions(edges: &[WeightedEdge]) -> Vec<u32> {
    debug_assert!(edges.windows(2).all(|p| p[0].eid < p[1].eid));
    let mut keys: Vec<(u64, u32)> = edges
        .iter()
        .enumerate()
        .map(|(i, e)| (!e.w.to_bits(), i as u32))
        .collect();
    keys.sort_unstable();
    keys.into_iter().map(|(_, i)| i).collect()
}

/// Canonical order over an index subset of a parent edge slice.
pub(crate) fn sorted_subset_positions(edges: &[WeightedEdge], subset: &[u32]) -> Vec<u32> {
    let mut keys: Vec<(u64, u32)> = subset
        .iter()
        .map(|&i| (!edges[i as usize].w.to_bits(), i))
        .collect();
    keys.sort_unstable();
    keys.into_iter().map(|(_, i)| i).collect()
}

/// Duplicate-edge resolution for ingestion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DedupPolicy {
    /// Reject the input on the first repeated (u,v) pair.
    Error,
    /// Keep the maximum weight; orientation and eid of the first occurrence.
    KeepMax,
    /// Sum the weights; orientation and eid of the first occurrence.
    Sum,
}

#[derive(Clone, Copy, Debug)]
pub struct LoadOptions {
    pub dedup: DedupPolicy,
    pub drop_nonpositive: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            dedup: DedupPolicy::Error,
            drop_nonpositive: false,
        }
    }
}

/// Parses edge-list text: one `u v w` triple per line, tab- or
/// space-separated, `#` starts a comment line. Two-field lines are accepted
/// as weight-1 edges so plain unweighted edge lists load directly. Vertex
/// ids are assigned densely in first-appearance order of the labels.
pub fn load_edge_list<R: BufRead>(reader: R, opts: LoadOptions) -> Result<WeightedGraph> {
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, VertexId> = HashMap::new();
    let mut edges: Vec<WeightedEdge> = Vec::new();
    let mut seen: HashMap<(VertexId, VertexId), u32> = HashMap::new();

    let intern = |label: &str, names: &mut Vec<String>, index: &mut HashMap<String, VertexId>| {
        if let Some(&id) = index.get(label) {
            id
        } else {
            let id = names.len() as VertexId;
            names.push(label.to_string());
            index.insert(label.to_string(), id);
            id
        }
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let (u_label, v_label, w) = match fields.as_slice() {
            [u, v] => (*u, *v, 1.0),
            [u, v, w] => {
                let w: f64 = w.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("unparsable weight {:?}", w),
                })?;
                if !w.is_finite() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("non-finite weight {}", w),
                    });
                }
                (*u, *v, w)
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected 2 or 3 fields, found {}", fields.len()),
                })
            }
        };
        if w <= 0.0 {
            if opts.drop_nonpositive {
                continue;
            }
            return Err(Error::Parse {
                line: lineno,
                msg: format!("non-positive weight {} (use drop_nonpositive to skip)", w),
            });
        }
        if u_label == v_label {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("self-loop at vertex {:?}", u_label),
            });
        }
        let u = intern(u_label, &mut names, &mut index);
        let v = intern(v_label, &mut names, &mut index);
        if u == v {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("self-loop at vertex {:?}", u_label),
            });
        }
        let pair = (u.min(v), u.max(v));
        match seen.get(&pair) {
            None => {
                let eid = edges.len() as u64;
                seen.insert(pair, edges.len() as u32);
                edges.push(WeightedEdge { eid, u, v, w });
            }
            Some(&at) => match opts.dedup {
                DedupPolicy::Error => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("duplicate edge {:?}-{:?}", u_label, v_label),
                    })
                }
                DedupPolicy::KeepMax => {
                    if w > edges[at as usize].w {
                        edges[at as usize].w = w;
                    }
                }
                DedupPolicy::Sum => {
                    edges[at as usize].w += w;
                }
            },
        }
    }

    let n = names.len() as VertexId;
    let labels = Arc::new(Labels::Named { names, index });
    Ok(WeightedGraph::from_parts_unchecked(n, edges, labels))
}

pub fn load_edge_list_path(path: &Path, opts: LoadOptions) -> Result<WeightedGraph> {
    let file = std::fs::File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    load_edge_list(std::io::BufReader::new(file), opts)
}

/// Writes `u_label<TAB>v_label<TAB>w` lines in eid order.
pub fn write_edge_list<W: Write>(graph: &WeightedGraph, out: &mut W) -> std::io::Result<()> {
    for e in graph.edges() {
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

/// Writes the vertex dictionary as `label<TAB>id` lines.
pub fn write_label_dict<W: Write>(graph: &WeightedGraph, out: &mut W) -> std::io::Result<()> {
    for v in 0..graph.n() {
        writeln!(out, "{}\t{}", graph.label_of(v), v)?;
    }
    Ok(())
}
