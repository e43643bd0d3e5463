//! Charging analysis for the two-round pipeline, executable at oracle scale.
//!
//! Against a fixed optimal matching, every optimal edge is either free on a
//! machine (neither endpoint matched strictly before its turn in that
//! machine's greedy run) or blocked, in which case a heavier incident edge of
//! the machine matching certifies the blocking. Blocked edges are then
//! partitioned into three interaction types, and a matching assembled from
//! certificates and surviving free edges lower-bounds the union graph's
//! optimum. All inequality checks run in exact rational arithmetic so
//! per-seed claims are decided without float rounding.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::clustering::{cluster, partition_subgraph, ClusterConfig};
use crate::error::{Error, Result};
use crate::graph::{OrderKey, VertexId, WeightedEdge, WeightedGraph};
use crate::greedy::{greedy, Matching};
use crate::oracle::{exact_mwm, opt_weight, OracleLimits};
use crate::pipeline::{run_pipeline, PipelineConfig, PostProcess};

/// Exact rational view of an edge weight. Every finite f64 is a rational, so
/// this loses nothing.
pub(crate) fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("weights are finite")
}

fn rat_sum<'a, I: IntoIterator<Item = &'a WeightedEdge>>(edges: I) -> BigRational {
    edges.into_iter().map(|e| rat(e.w)).sum()
}

fn half(x: BigRational) -> BigRational {
    x / BigRational::from_integer(2.into())
}

/// Classification of one machine's view of an optimal matching.
#[derive(Clone, Debug)]
pub struct FreeBlocked {
    /// Optimal edges free on this machine, ascending eid.
    pub free: Vec<WeightedEdge>,
    /// Optimal edges blocked on this machine, ascending eid.
    pub blocked: Vec<WeightedEdge>,
    /// Blocked eid -> certificate edge of the machine matching. The
    /// certificate shares an endpoint with its blocked edge and is at least
    /// as heavy.
    pub certificates: HashMap<u64, WeightedEdge>,
}

/// Splits an optimal matching into edges free and blocked on `partition_i`.
///
/// Freeness is decided by the machine's greedy trace: an edge is free when
/// neither endpoint is matched strictly before the edge's own position in
/// the canonical order. The edge itself need not appear in the partition.
pub fn classify_free_blocked(
    partition_i: &WeightedGraph,
    opt_matching: &Matching,
) -> Result<FreeBlocked> {
    for e in opt_matching.edges() {
        if e.u >= partition_i.n() || e.v >= partition_i.n() {
            return Err(Error::InvalidMatching(format!(
                "optimal edge {} touches vertex outside the graph",
                e.eid
            )));
        }
    }
    let (machine_matching, trace) = greedy(partition_i);
    let mut free = Vec::new();
    let mut blocked = Vec::new();
    let mut certificates = HashMap::new();
    for e in opt_matching.edges() {
        let key = e.key();
        let busy_u = trace.matched_before(e.u, key);
        let busy_v = trace.matched_before(e.v, key);
        if !busy_u && !busy_v {
            free.push(*e);
            continue;
        }
        // Certificate: the earliest machine edge already holding an endpoint.
        let mut cert: Option<WeightedEdge> = None;
        for (at, busy) in [(e.u, busy_u), (e.v, busy_v)] {
            if !busy {
                continue;
            }
            let held = machine_matching
                .edge_on(at)
                .ok_or_else(|| Error::Internal("trace/matching disagree on coverage".into()))?;
            if cert.is_none_or(|c| held.key() < c.key()) {
                cert = Some(*held);
            }
        }
        let cert = cert.expect("blocked edge has a matched-before endpoint");
        if cert.w < e.w {
            return Err(Error::Internal(format!(
                "certificate {} lighter than blocked edge {}",
                cert.eid, e.eid
            )));
        }
        certificates.insert(e.eid, cert);
        blocked.push(*e);
    }
    Ok(FreeBlocked {
        free,
        blocked,
        certificates,
    })
}

/// A type-1 group: blocked edge, optional second blocked edge sharing the
/// certificate, and the certificate itself.
#[derive(Clone, Copy, Debug)]
pub struct TypeGroup1 {
    pub e: WeightedEdge,
    pub f: Option<WeightedEdge>,
    pub cert: WeightedEdge,
}

/// A type-2 group: blocked edge, the free edge over the certificate's other
/// endpoint, and the certificate.
#[derive(Clone, Copy, Debug)]
pub struct TypeGroup2 {
    pub e: WeightedEdge,
    pub f: WeightedEdge,
    pub cert: WeightedEdge,
}

/// A type-3 group: two blocked edges whose certificates both touch the same
/// free edge.
#[derive(Clone, Copy, Debug)]
pub struct TypeGroup3 {
    pub e: WeightedEdge,
    pub f: WeightedEdge,
    pub z: WeightedEdge,
    pub cert_e: WeightedEdge,
    pub cert_z: WeightedEdge,
}

/// Output of the partitioning loop: leftover free edges plus the grouped
/// sets. The flat per-type edge sets are derived by the accessors.
#[derive(Clone, Debug, Default)]
pub struct TypeSets {
    pub f10: Vec<WeightedEdge>,
    pub type1: Vec<TypeGroup1>,
    pub type2: Vec<TypeGroup2>,
    pub type3: Vec<TypeGroup3>,
}

impl TypeSets {
    pub fn f12(&self) -> Vec<WeightedEdge> {
        self.type2.iter().map(|g| g.f).collect()
    }

    pub fn f13(&self) -> Vec<WeightedEdge> {
        self.type3.iter().map(|g| g.f).collect()
    }

    pub fn b11(&self) -> Vec<WeightedEdge> {
        self.type1
            .iter()
            .flat_map(|g| [Some(g.e), g.f].into_iter().flatten())
            .collect()
    }

    pub fn b12(&self) -> Vec<WeightedEdge> {
        self.type2.iter().map(|g| g.e).collect()
    }

    pub fn b13(&self) -> Vec<WeightedEdge> {
        self.type3.iter().flat_map(|g| [g.e, g.z]).collect()
    }

    pub fn m11(&self) -> Vec<WeightedEdge> {
        self.type1.iter().map(|g| g.cert).collect()
    }

    pub fn m12(&self) -> Vec<WeightedEdge> {
        self.type2.iter().map(|g| g.cert).collect()
    }

    pub fn m13(&self) -> Vec<WeightedEdge> {
        self.type3
            .iter()
            .flat_map(|g| [g.cert_e, g.cert_z])
            .collect()
    }

    pub fn weight_f10(&self) -> f64 {
        self.f10.iter().fold(0.0, |acc, e| acc + e.w)
    }

    pub fn weight_f12(&self) -> f64 {
        self.f12().iter().fold(0.0, |acc, e| acc + e.w)
    }

    pub fn weight_f13(&self) -> f64 {
        self.f13().iter().fold(0.0, |acc, e| acc + e.w)
    }

    pub fn weight_b11(&self) -> f64 {
        self.b11().iter().fold(0.0, |acc, e| acc + e.w)
    }

    pub fn weight_b12(&self) -> f64 {
        self.b12().iter().fold(0.0, |acc, e| acc + e.w)
    }

    pub fn weight_b13(&self) -> f64 {
        self.b13().iter().fold(0.0, |acc, e| acc + e.w)
    }
}

/// Indexes the working copies of the free/blocked sets for the loop. The
/// optimal matching has at most one edge per vertex, so vertex maps hold
/// single eids.
struct Working {
    by_order: BTreeMap<OrderKey, WeightedEdge>,
    by_vertex: HashMap<VertexId, u64>,
    by_eid: HashMap<u64, WeightedEdge>,
}

impl Working {
    fn build(edges: &[WeightedEdge], what: &str) -> Result<Working> {
        let mut w = Working {
            by_order: BTreeMap::new(),
            by_vertex: HashMap::new(),
            by_eid: HashMap::new(),
        };
        for e in edges {
            if w.by_order.insert(e.key(), *e).is_some() {
                return Err(Error::InvalidMatching(format!(
                    "duplicate {what} edge {}",
                    e.eid
                )));
            }
            for at in [e.u, e.v] {
                if w.by_vertex.insert(at, e.eid).is_some() {
                    return Err(Error::InvalidMatching(format!(
                        "{what} edges share vertex {at}; not part of a matching"
                    )));
                }
            }
            w.by_eid.insert(e.eid, *e);
        }
        Ok(w)
    }

    fn remove(&mut self, e: &WeightedEdge) {
        self.by_order.remove(&e.key());
        self.by_vertex.remove(&e.u);
        self.by_vertex.remove(&e.v);
        self.by_eid.remove(&e.eid);
    }

    fn at_vertex(&self, v: VertexId) -> Option<WeightedEdge> {
        self.by_vertex.get(&v).map(|eid| self.by_eid[eid])
    }

    fn pop_heaviest(&mut self) -> Option<WeightedEdge> {
        let (_, e) = self.by_order.pop_first()?;
        self.by_vertex.remove(&e.u);
        self.by_vertex.remove(&e.v);
        self.by_eid.remove(&e.eid);
        Some(e)
    }

    fn is_empty(&self) -> bool {
        self.by_order.is_empty()
    }
}

/// Groups blocked edges with their certificates and the free edges those
/// certificates touch.
///
/// Loop until no blocked edge remains: pop the heaviest blocked edge e with
/// certificate e'; let f be the other free-or-blocked working edge incident
/// on e' (none if no such edge). If f is absent or blocked the pair retires
/// as type 1 consuming e'. If f is free and no other live certificate
/// touches it, (e, f, e') retires as type 2. Otherwise the second
/// certificate's owner z retires together with e, f and both certificates as
/// type 3. Leftover free edges form f10.
///
/// Where the scheme leaves slack (several candidates for f or for the second
/// certificate), the heaviest candidate wins with eid as tie-break.
pub fn partition_types(
    free_available: &[WeightedEdge],
    blocked: &[WeightedEdge],
    m1: &Matching,
    certificates: &HashMap<u64, WeightedEdge>,
) -> Result<TypeSets> {
    let mut free_w = Working::build(free_available, "free")?;
    let mut blocked_w = Working::build(blocked, "blocked")?;

    // Live certificate index: certificate eid -> owners still in the working
    // blocked set, best owner first.
    let mut owners: HashMap<u64, BTreeMap<OrderKey, WeightedEdge>> = HashMap::new();
    for e in blocked {
        let cert = certificates
            .get(&e.eid)
            .ok_or_else(|| Error::Internal(format!("blocked edge {} has no certificate", e.eid)))?;
        owners.entry(cert.eid).or_default().insert(e.key(), *e);
    }
    let retire_owner = |owners: &mut HashMap<u64, BTreeMap<OrderKey, WeightedEdge>>,
                        cert_eid: u64,
                        e: &WeightedEdge| {
        if let Some(set) = owners.get_mut(&cert_eid) {
            set.remove(&e.key());
            if set.is_empty() {
                owners.remove(&cert_eid);
            }
        }
    };

    let mut sets = TypeSets::default();
    while let Some(e) = blocked_w.pop_heaviest() {
        let cert = certificates[&e.eid];
        retire_owner(&mut owners, cert.eid, &e);

        // The other working optimal edge incident on the certificate.
        let mut f_best: Option<(WeightedEdge, bool)> = None;
        for at in [cert.u, cert.v] {
            for (cand, is_free) in [
                (free_w.at_vertex(at), true),
                (blocked_w.at_vertex(at), false),
            ] {
                if let Some(cand) = cand {
                    if f_best.is_none_or(|(b, _)| cand.key() < b.key()) {
                        f_best = Some((cand, is_free));
                    }
                }
            }
        }

        match f_best {
            None => sets.type1.push(TypeGroup1 { e, f: None, cert }),
            Some((f, false)) => {
                blocked_w.remove(&f);
                retire_owner(&mut owners, certificates[&f.eid].eid, &f);
                sets.type1.push(TypeGroup1 {
                    e,
                    f: Some(f),
                    cert,
                });
            }
            Some((f, true)) => {
                // A second live certificate on f promotes the group to
                // type 3. The machine matching holds at most one edge per
                // vertex, so each endpoint yields at most one candidate.
                let mut second: Option<WeightedEdge> = None;
                for at in [f.u, f.v] {
                    let Some(cand) = m1.edge_on(at) else { continue };
                    if cand.eid == cert.eid || !owners.contains_key(&cand.eid) {
                        continue;
                    }
                    if second.is_none_or(|s| cand.key() < s.key()) {
                        second = Some(*cand);
                    }
                }
                free_w.remove(&f);
                match second {
                    None => sets.type2.push(TypeGroup2 { e, f, cert }),
                    Some(cert_z) => {
                        let z = *owners[&cert_z.eid]
                            .first_key_value()
                            .expect("owner sets are pruned when emptied")
                            .1;
                        blocked_w.remove(&z);
                        retire_owner(&mut owners, cert_z.eid, &z);
                        sets.type3.push(TypeGroup3 {
                            e,
                            f,
                            z,
                            cert_e: cert,
                            cert_z,
                        });
                    }
                }
            }
        }
    }

    debug_assert!(blocked_w.is_empty());
    sets.f10 = free_w.by_eid.values().copied().collect();
    sets.f10.sort_unstable_by_key(|e| e.eid);

    verify_partition(&sets, free_available, blocked)?;
    Ok(sets)
}

/// Conservation and disjointness: every input edge lands in exactly one
/// output set, and consumed certificates are distinct machine edges.
fn verify_partition(
    sets: &TypeSets,
    free_available: &[WeightedEdge],
    blocked: &[WeightedEdge],
) -> Result<()> {
    let mut free_out: Vec<u64> = sets
        .f10
        .iter()
        .chain(sets.f12().iter())
        .chain(sets.f13().iter())
        .map(|e| e.eid)
        .collect();
    free_out.sort_unstable();
    let mut free_in: Vec<u64> = free_available.iter().map(|e| e.eid).collect();
    free_in.sort_unstable();
    let mut blocked_out: Vec<u64> = sets
        .b11()
        .iter()
        .chain(sets.b12().iter())
        .chain(sets.b13().iter())
        .map(|e| e.eid)
        .collect();
    blocked_out.sort_unstable();
    let mut blocked_in: Vec<u64> = blocked.iter().map(|e| e.eid).collect();
    blocked_in.sort_unstable();
    if free_out != free_in || blocked_out != blocked_in {
        return Err(Error::Internal(
            "type partition does not conserve its input sets".into(),
        ));
    }
    let mut certs: Vec<u64> = sets
        .m11()
        .iter()
        .chain(sets.m12().iter())
        .chain(sets.m13().iter())
        .map(|e| e.eid)
        .collect();
    certs.sort_unstable();
    let before = certs.len();
    certs.dedup();
    if certs.len() != before {
        return Err(Error::Internal(
            "a certificate edge was consumed twice".into(),
        ));
    }
    Ok(())
}

/// Per-group weight inequalities, evaluated exactly:
/// type 1 w(e') >= (w(e)+w(f))/2; type 2 w(f) >= w(e') >= w(e);
/// type 3 max{w(f), w(e')+w(e'')} >= (w(e)+w(f)+w(z))/2.
pub fn check_type_inequalities(sets: &TypeSets) -> bool {
    sets.type1.iter().all(|g| {
        let fw = g.f.map_or_else(BigRational::zero, |f| rat(f.w));
        rat(g.cert.w) >= half(rat(g.e.w) + fw)
    }) && sets
        .type2
        .iter()
        .all(|g| rat(g.f.w) >= rat(g.cert.w) && rat(g.cert.w) >= rat(g.e.w))
        && sets.type3.iter().all(|g| {
            let lhs = (rat(g.cert_e.w) + rat(g.cert_z.w)).max(rat(g.f.w));
            lhs >= half(rat(g.e.w) + rat(g.f.w) + rat(g.z.w))
        })
}

/// Assembles the certificate/free-edge matching: certificates for type 1,
/// the free edge for type 2, the heavier option for type 3, plus all of f10.
/// Validates matchinghood and both lower bounds before returning.
pub fn charging_matching(sets: &TypeSets) -> Result<Matching> {
    let mut edges: Vec<WeightedEdge> = Vec::new();
    edges.extend(sets.f10.iter().copied());
    edges.extend(sets.type1.iter().map(|g| g.cert));
    edges.extend(sets.type2.iter().map(|g| g.f));
    for g in &sets.type3 {
        if rat(g.f.w) >= rat(g.cert_e.w) + rat(g.cert_z.w) {
            edges.push(g.f);
        } else {
            edges.push(g.cert_e);
            edges.push(g.cert_z);
        }
    }
    let matching = Matching::from_edges(edges)
        .map_err(|e| Error::Internal(format!("charging edges do not form a matching: {e}")))?;

    let total = rat_sum(matching.edges());
    let f10 = rat_sum(&sets.f10);
    let f12 = rat_sum(&sets.f12());
    let f13 = rat_sum(&sets.f13());
    let b11 = rat_sum(&sets.b11());
    let b12 = rat_sum(&sets.b12());
    let b13 = rat_sum(&sets.b13());
    let avail = f10.clone() + f12.clone() + f13.clone();
    let blocked = b11.clone() + b12.clone() + b13.clone();
    if total < half(avail + blocked) {
        return Err(Error::Internal(
            "charging matching misses the half-sum bound".into(),
        ));
    }
    if total < f10 + half(b11) + f12 + f13.max(b13) {
        return Err(Error::Internal(
            "charging matching misses the per-type bound".into(),
        ));
    }
    Ok(matching)
}

/// w(M1) >= w(B11)/2 + w(B12) + w(B13), exactly.
pub fn m1_lower_bound_check(sets: &TypeSets, m1: &Matching) -> bool {
    let lhs = rat_sum(m1.edges());
    lhs >= half(rat_sum(&sets.b11())) + rat_sum(&sets.b12()) + rat_sum(&sets.b13())
}

/// One seed's set weights, ready for the TSV diagnostic and the LP
/// feasibility check. All weights are unscaled sums.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AnalysisRow {
    pub seed: u64,
    pub f10: f64,
    pub f12: f64,
    pub f13: f64,
    pub b11: f64,
    pub b12: f64,
    pub b13: f64,
    pub m1: f64,
    pub opt_g: f64,
    pub opt_h: f64,
    pub output: f64,
    /// Weight of all edges of the optimal matching free on machine 1.
    pub f1: f64,
    /// Weight of the free edges that also reached the union graph.
    pub f1_avail: f64,
}

pub const ANALYSIS_TSV_HEADER: &str =
    "seed\tf10\tf12\tf13\tb11\tb12\tb13\tm1\topt_g\topt_h\toutput\tf1\tf1_avail";

pub fn write_rows_tsv<W: Write>(rows: &[AnalysisRow], mut out: W) -> Result<()> {
    writeln!(out, "{ANALYSIS_TSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.seed,
            r.f10,
            r.f12,
            r.f13,
            r.b11,
            r.b12,
            r.b13,
            r.m1,
            r.opt_g,
            r.opt_h,
            r.output,
            r.f1,
            r.f1_avail
        )?;
    }
    Ok(())
}

/// Everything a caller needs to audit one analyzed run.
#[derive(Debug)]
pub struct AnalysisOutcome {
    pub row: AnalysisRow,
    pub type_sets: TypeSets,
    pub charging_weight: f64,
    pub types_hold: bool,
    pub m1_bound_holds: bool,
}

/// Full instrumented run on one seed: exact optimum, pipeline with best-of
/// post-processing, machine-1 classification, type partition, and all
/// deterministic checks. Restricted to oracle scale via `limits`.
pub fn analyze_run(
    graph: &WeightedGraph,
    cluster_cfg: &ClusterConfig,
    limits: &OracleLimits,
) -> Result<AnalysisOutcome> {
    let opt = exact_mwm(graph, limits)?;
    let opt_g = opt.total_weight();

    let mut pipe_cfg = PipelineConfig::new(*cluster_cfg);
    pipe_cfg.post = PostProcess::BestOf;
    let result = run_pipeline(graph, &pipe_cfg)?;
    let h = &result.union_graph;
    let m1 = &result.per_machine[0];

    // The keyed generator makes re-clustering reproduce the pipeline's
    // partition exactly.
    let clustering = cluster(graph, cluster_cfg);
    let partition_1 = partition_subgraph(graph, &clustering, 0)?;
    let fb = classify_free_blocked(&partition_1, &opt)?;

    let available: Vec<WeightedEdge> = fb
        .free
        .iter()
        .filter(|e| h.find_by_eid(e.eid).is_some())
        .copied()
        .collect();
    let sets = partition_types(&available, &fb.blocked, m1, &fb.certificates)?;
    let types_hold = check_type_inequalities(&sets);
    let charging = charging_matching(&sets)?;
    let m1_bound_holds = m1_lower_bound_check(&sets, m1);

    let opt_h = opt_weight(h, &OracleLimits::edges_only(h.m().max(1)))?;
    if opt_h < charging.total_weight() - 1e-9 * charging.total_weight().abs().max(1.0) {
        return Err(Error::Internal(
            "union optimum fell below the charging matching".into(),
        ));
    }

    let row = AnalysisRow {
        seed: cluster_cfg.seed,
        f10: sets.weight_f10(),
        f12: sets.weight_f12(),
        f13: sets.weight_f13(),
        b11: sets.weight_b11(),
        b12: sets.weight_b12(),
        b13: sets.weight_b13(),
        m1: m1.total_weight(),
        opt_g,
        opt_h,
        output: result.final_matching.total_weight(),
        f1: fb.free.iter().fold(0.0, |acc, e| acc + e.w),
        f1_avail: available.iter().fold(0.0, |acc, e| acc + e.w),
    };
    Ok(AnalysisOutcome {
        row,
        type_sets: sets,
        charging_weight: charging.total_weight(),
        types_hold,
        m1_bound_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, DegreeModel, GenConfig, WeightModel};
    use crate::graph::WeightedGraph;
    use crate::oracle::OracleLimits;

    fn graph(n: u32, edges: &[(u32, u32, f64)]) -> WeightedGraph {
        let list: Vec<WeightedEdge> = edges
            .iter()
            .enumerate()
            .map(|(i, &(u, v, w))| WeightedEdge {
                eid: i as u64,
                u,
                v,
                w,
            })
            .collect();
        WeightedGraph::new(n, list).unwrap()
    }

    #[test]
    fn empty_partition_frees_everything() {
        let g = graph(4, &[(0, 1, 2.0), (2, 3, 3.0)]);
        let opt = exact_mwm(&g, &OracleLimits::default()).unwrap();
        let empty = graph(4, &[]);
        let fb = classify_free_blocked(&empty, &opt).unwrap();
        assert_eq!(fb.free.len(), 2);
        assert!(fb.blocked.is_empty());
    }

    #[test]
    fn greedy_first_edge_is_free() {
        let g = graph(4, &[(0, 1, 9.0), (1, 2, 5.0), (2, 3, 9.5)]);
        let opt = exact_mwm(&g, &OracleLimits::default()).unwrap();
        // (2,3) opens the greedy run, so nothing precedes it.
        let fb = classify_free_blocked(&g, &opt).unwrap();
        assert!(fb.free.iter().any(|e| e.eid == 2));
    }

    #[test]
    fn blocked_edges_get_valid_certificates() {
        for seed in 0..25 {
            let g = generate(&GenConfig {
                n: 12,
                m: 22,
                degrees: DegreeModel::Uniform,
                weights: WeightModel::Uniform,
                seed,
            })
            .unwrap();
            let opt = exact_mwm(&g, &OracleLimits::default()).unwrap();
            let cfg = ClusterConfig::new(4, 2.0, seed).unwrap();
            let clustering = cluster(&g, &cfg);
            let part = partition_subgraph(&g, &clustering, 0).unwrap();
            let fb = classify_free_blocked(&part, &opt).unwrap();
            assert_eq!(fb.free.len() + fb.blocked.len(), opt.len());
            for e in &fb.blocked {
                let cert = &fb.certificates[&e.eid];
                assert!(cert.w >= e.w);
                assert!(cert.shares_endpoint(e));
            }
        }
    }

    #[test]
    fn no_blocked_edges_means_everything_in_f10() {
        let free = [
            WeightedEdge {
                eid: 0,
                u: 0,
                v: 1,
                w: 2.0,
            },
            WeightedEdge {
                eid: 1,
                u: 2,
                v: 3,
                w: 1.0,
            },
        ];
        let sets = partition_types(&free, &[], &Matching::empty(), &HashMap::new()).unwrap();
        assert_eq!(sets.f10.len(), 2);
        assert!(sets.type1.is_empty() && sets.type2.is_empty() && sets.type3.is_empty());
    }

    // Shared fixture: edges (b,c,5) eid0, (a,b,5) eid1, (c,z,9) eid2 with
    // machine 1 seeing only (b,c,5). The optimum is {(a,b), (c,z)}; (a,b) is
    // blocked by (b,c) through the eid tie-break while (c,z) stays free.
    fn tie_fixture() -> (WeightedGraph, Matching, FreeBlocked) {
        let g = graph(5, &[(1, 2, 5.0), (0, 1, 5.0), (2, 3, 9.0)]);
        let opt = exact_mwm(&g, &OracleLimits::default()).unwrap();
        let opt_eids: Vec<u64> = opt.edges().iter().map(|e| e.eid).collect();
        assert_eq!(opt_eids, vec![1, 2]);
        let part = graph(5, &[(1, 2, 5.0)]);
        let fb = classify_free_blocked(&part, &opt).unwrap();
        assert_eq!(fb.blocked.len(), 1);
        assert_eq!(fb.blocked[0].eid, 1);
        (g, opt, fb)
    }

    #[test]
    fn lone_blocked_edge_without_neighbour_is_type_1() {
        let (_, _, fb) = tie_fixture();
        let m1 = Matching::from_edges(vec![fb.certificates[&1]]).unwrap();
        // Pretend the free edge never reached the union: f is absent.
        let sets = partition_types(&[], &fb.blocked, &m1, &fb.certificates).unwrap();
        assert_eq!(sets.type1.len(), 1);
        assert!(sets.type1[0].f.is_none());
        assert_eq!(sets.type1[0].cert.eid, 0);
        assert!(check_type_inequalities(&sets));
        let m = charging_matching(&sets).unwrap();
        assert_eq!(m.total_weight(), 5.0);
        assert!(m1_lower_bound_check(&sets, &m1));
    }

    #[test]
    fn free_neighbour_without_second_certificate_is_type_2() {
        let (_, _, fb) = tie_fixture();
        let m1 = Matching::from_edges(vec![fb.certificates[&1]]).unwrap();
        let sets = partition_types(&fb.free, &fb.blocked, &m1, &fb.certificates).unwrap();
        assert_eq!(sets.type2.len(), 1);
        let g2 = &sets.type2[0];
        assert_eq!((g2.e.eid, g2.f.eid, g2.cert.eid), (1, 2, 0));
        assert!(check_type_inequalities(&sets));
        // Charging picks the free edge: w(f)=9 >= w(e')=5.
        let m = charging_matching(&sets).unwrap();
        assert_eq!(m.total_weight(), 9.0);
    }

    #[test]
    fn paired_certificates_over_one_free_edge_are_type_3() {
        // f=(s,t,8) free; certificates e'=(s,u,5) for e=(u,a,4) and
        // e''=(t,v,7) for z=(v,b,6). Vertices: u=0 a=1 s=2 t=3 v=4 b=5.
        let g = graph(
            6,
            &[
                (0, 1, 4.0), // e
                (2, 3, 8.0), // f
                (4, 5, 6.0), // z
                (2, 0, 5.0), // cert of e
                (3, 4, 7.0), // cert of z
            ],
        );
        let opt = exact_mwm(&g, &OracleLimits::default()).unwrap();
        let opt_eids: Vec<u64> = opt.edges().iter().map(|e| e.eid).collect();
        assert_eq!(opt_eids, vec![0, 1, 2]);
        let part = graph(6, &[(2, 0, 5.0), (3, 4, 7.0)]);
        let fb = classify_free_blocked(&part, &opt).unwrap();
        let free: Vec<u64> = fb.free.iter().map(|e| e.eid).collect();
        assert_eq!(free, vec![1]);
        let m1 = greedy(&part).0;
        let sets = partition_types(&fb.free, &fb.blocked, &m1, &fb.certificates).unwrap();
        assert_eq!(sets.type3.len(), 1);
        let g3 = &sets.type3[0];
        // z=(4,5) is heavier, so it pops first and takes the e role.
        assert_eq!(g3.e.eid, 2);
        assert_eq!(g3.z.eid, 0);
        assert_eq!(g3.f.eid, 1);
        assert!(check_type_inequalities(&sets));
        // max{8, 5+7} = 12: the certificate pair wins.
        let m = charging_matching(&sets).unwrap();
        assert_eq!(m.total_weight(), 12.0);
        assert!(m1_lower_bound_check(&sets, &m1));
    }

    #[test]
    fn randomized_runs_satisfy_every_deterministic_claim() {
        let mut counts = [0usize; 3];
        for seed in 0..40 {
            let g = generate(&GenConfig {
                n: 12,
                m: 20,
                degrees: DegreeModel::Uniform,
                weights: WeightModel::Uniform,
                seed: 1000 + seed,
            })
            .unwrap();
            let cfg = ClusterConfig::new(4, 2.0, seed).unwrap();
            let outcome = analyze_run(
                &g,
                &cfg,
                &OracleLimits {
                    max_edges: 24,
                    max_vertices: 20,
                },
            )
            .unwrap();
            assert!(outcome.types_hold);
            assert!(outcome.m1_bound_holds);
            assert!(outcome.row.opt_h + 1e-9 >= outcome.charging_weight);
            assert!(outcome.row.output + 1e-9 >= outcome.row.m1);
            counts[0] += outcome.type_sets.type1.len();
            counts[1] += outcome.type_sets.type2.len();
            counts[2] += outcome.type_sets.type3.len();
        }
        // The sweep has to exercise the partition, not just empty sets.
        assert!(counts[0] + counts[1] + counts[2] > 0);
    }

    #[test]
    fn tsv_has_header_and_one_line_per_row() {
        let row = AnalysisRow {
            seed: 7,
            f10: 1.0,
            f12: 0.0,
            f13: 0.5,
            b11: 2.0,
            b12: 0.0,
            b13: 1.5,
            m1: 4.0,
            opt_g: 6.0,
            opt_h: 5.0,
            output: 4.5,
            f1: 2.0,
            f1_avail: 1.5,
        };
        let mut buf = Vec::new();
        write_rows_tsv(&[row, row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], ANALYSIS_TSV_HEADER);
        assert!(lines[1].starts_with("7\t1\t0\t0.5\t2\t"));
        assert_eq!(lines[1], lines[2]);
    }
}
