//! Distributed maximum-weight matching via randomized composable coresets.
//!
//! The input graph is clustered edge-by-edge onto k machines with expected
//! multiplicity c; every machine reports its greedy matching as a coreset;
//! the union of the coresets is post-processed into the final matching. The
//! crate also ships the machinery to audit that pipeline: an exact
//! branch-and-bound oracle for small graphs, the free/blocked charging
//! analysis with its three-type partition, an exact-rational
//! factor-revealing LP for the worst-case output fraction, seeded graph
//! generators, and the planted hard family on which subsampling starves the
//! machines of the optimum.

pub mod analysis;
pub mod clustering;
pub mod error;
pub mod factor_lp;
pub mod gen;
pub mod graph;
pub mod greedy;
pub mod hard_instance;
pub mod oracle;
pub mod pipeline;

pub use clustering::{cluster, multiplicity_stats, ClusterConfig, Clustering, MultiplicityStats};
pub use error::{Error, Result};
pub use graph::{
    canonical_sort, load_edge_list, load_edge_list_path, DedupPolicy, LoadOptions, OrderKey,
    VertexId, WeightedEdge, WeightedGraph,
};
pub use greedy::{greedy, is_valid_matching, write_matching, MatchTrace, Matching};
pub use oracle::{exact_mwm, opt_weight, OracleLimits};
pub use pipeline::{
    run_pipeline, MemoryAdvisory, PipelineConfig, PipelineResult, PostProcess, QualityReport,
    Timings,
};
