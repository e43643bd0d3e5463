//! `corematch`: two-round maximum weight matching on one machine, plus the
//! experiment and audit commands around it. Exit codes: 0 success, 2 bad
//! configuration or oracle refusal, 3 unreadable or malformed input, 4
//! internal invariant failure.

mod run;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use corematch::Error;

use table::ReportKind;

#[derive(Parser)]
#[command(
    name = "corematch",
    version,
    about = "Maximum weight matching via randomized greedy coresets"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the two-round pipeline once and write the matching.
    Match(MatchArgs),
    /// Time the pipeline against in-process sequential greedy.
    Bench(BenchArgs),
    /// Mean quality per expected multiplicity c over a seed list.
    SweepMult(SweepArgs),
    /// Best single coreset vs the full pipeline as the machine count grows.
    Sampling(SamplingArgs),
    /// Solve the factor-revealing program, optionally over a cap grid.
    Lp(LpArgs),
    /// Planted-matching hard family: generate instances and summarize runs.
    Hard(HardArgs),
    /// Instrumented small runs: free/blocked sets, type weights, exact checks.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    Uniform,
    Powerlaw,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightsKind {
    Uniform,
    Exp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DedupKind {
    Error,
    Max,
    Sum,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PostKind {
    Greedy,
    BestOf,
    Exact,
    LocalSearch,
}

/// Where the graph comes from: an edge-list file or the built-in generator.
#[derive(Args)]
struct SourceArgs {
    /// Edge-list file: `u v [w]` per line, tabs or spaces, `#` comments.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Synthesize the input graph instead of reading a file.
    #[arg(long, value_enum, value_name = "MODEL", conflicts_with = "input")]
    gen: Option<GenKind>,

    /// Vertex count for --gen.
    #[arg(long, value_name = "N")]
    n: Option<u32>,

    /// Edge count for --gen.
    #[arg(long, value_name = "M")]
    m: Option<u64>,

    /// Weight distribution for --gen.
    #[arg(long, value_enum, default_value_t = WeightsKind::Uniform)]
    weights: WeightsKind,

    /// Degree-skew exponent for --gen powerlaw.
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,

    /// Seed of the synthesized graph; run seeds steer the clustering only.
    #[arg(long, default_value_t = 1)]
    graph_seed: u64,

    /// Duplicate-edge handling for --input.
    #[arg(long, value_enum, default_value_t = DedupKind::Error)]
    dedup: DedupKind,

    /// Drop nonpositive-weight lines instead of rejecting the file.
    #[arg(long)]
    drop_nonpositive: bool,
}

/// Clustering shape. Exactly one of --c / --epsilon.
#[derive(Args)]
struct ClusterArgs {
    /// Machine count.
    #[arg(long, default_value_t = 4)]
    k: u32,

    /// Expected multiplicity, in [1, k].
    #[arg(long, conflicts_with = "epsilon")]
    c: Option<f64>,

    /// Accuracy knob; maps to c = max(1, ceil((1/eps) ln(1/eps))).
    #[arg(long)]
    epsilon: Option<f64>,
}

/// Round-two and scheduling knobs.
#[derive(Args)]
struct RunArgs {
    /// Round-two post-processing.
    #[arg(long, value_enum, default_value_t = PostKind::BestOf)]
    post: PostKind,

    /// Union-edge cap before --post exact falls back to best-of.
    #[arg(long, value_name = "EDGES", default_value_t = 24)]
    exact_cap: usize,

    /// Improvement passes for --post local-search.
    #[arg(long, default_value_t = 8)]
    rounds: u32,

    /// Worker threads (machines within a run, or seed fan-out for sweeps).
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Report format.
    #[arg(long, value_enum, default_value_t = ReportKind::Tsv)]
    report: ReportKind,

    /// Strip wall-clock fields so identical runs emit identical bytes.
    #[arg(long)]
    deterministic_report: bool,
}

/// `7`, a comma list `1,5,9`, or a half-open range `0..20`.
#[derive(Clone, Debug)]
struct SeedSpec(Vec<u64>);

impl FromStr for SeedSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((lo, hi)) = s.split_once("..") {
            let lo: u64 = lo.trim().parse().map_err(|e| format!("range start: {e}"))?;
            let hi: u64 = hi.trim().parse().map_err(|e| format!("range end: {e}"))?;
            if hi <= lo {
                return Err(format!("empty seed range {s:?}"));
            }
            if hi - lo > 1_000_000 {
                return Err(format!("seed range {s:?} is over a million seeds"));
            }
            return Ok(SeedSpec((lo..hi).collect()));
        }
        let seeds = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|e| format!("seed {t:?}: {e}"))
            })
            .collect::<Result<Vec<u64>, String>>()?;
        Ok(SeedSpec(seeds))
    }
}

#[derive(Clone, Debug)]
struct FloatList(Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("value {t:?}: {e}"))
            })
            .collect::<Result<Vec<f64>, String>>()
            .map(FloatList)
    }
}

#[derive(Clone, Debug)]
struct IntList(Vec<u32>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|e| format!("value {t:?}: {e}"))
            })
            .collect::<Result<Vec<u32>, String>>()
            .map(IntList)
    }
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    source: SourceArgs,

    #[command(flatten)]
    cluster: ClusterArgs,

    #[command(flatten)]
    run: RunArgs,

    /// Clustering seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Skip the pipeline: plain greedy over the whole input.
    #[arg(long)]
    sequential: bool,

    /// Attach quality ratios vs sequential greedy to the report.
    #[arg(long)]
    quality: bool,

    /// Matching destination; default stdout (the report then uses stderr).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    source: SourceArgs,

    #[command(flatten)]
    cluster: ClusterArgs,

    #[command(flatten)]
    run: RunArgs,

    /// Clustering seeds, one timed pipeline run each.
    #[arg(long, visible_alias = "seed", default_value = "0..5")]
    seeds: SeedSpec,

    /// Report destination (default stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SourceArgs,

    /// Fixed machine count.
    #[arg(long, default_value_t = 16)]
    k: u32,

    /// Multiplicities to sweep.
    #[arg(long, value_name = "LIST", default_value = "1,2,4")]
    c_list: FloatList,

    /// Clustering seeds averaged per multiplicity.
    #[arg(long, visible_alias = "seed", default_value = "0..10")]
    seeds: SeedSpec,

    #[command(flatten)]
    run: RunArgs,

    /// Report destination (default stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct SamplingArgs {
    #[command(flatten)]
    source: SourceArgs,

    /// Machine counts to sweep.
    #[arg(long, value_name = "LIST", default_value = "1,4,16,64")]
    k_list: IntList,

    /// Expected multiplicity, fixed across the sweep.
    #[arg(long, default_value_t = 1.0)]
    c: f64,

    /// Clustering seeds averaged per machine count.
    #[arg(long, visible_alias = "seed", default_value = "0..10")]
    seeds: SeedSpec,

    #[command(flatten)]
    run: RunArgs,

    /// Report destination (default stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct LpArgs {
    /// Caps on the machine-one mass, as decimals or fractions ("0.1,1/4").
    /// The uncapped base system is always the first row.
    #[arg(long, value_name = "LIST")]
    mu_list: Option<String>,

    /// Include the minimizing point in each row.
    #[arg(long)]
    witness: bool,

    /// Report destination (default stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct HardArgs {
    /// Vertices per side.
    #[arg(long, default_value_t = 1024)]
    n: u32,

    /// Machine count.
    #[arg(long, default_value_t = 32)]
    k: u32,

    /// Expected multiplicity.
    #[arg(long, default_value_t = 2.0)]
    c: f64,

    /// Coreset size allowance multiplier.
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,

    /// Block-size fraction, in (0, 1/8).
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,

    /// Instance seeds.
    #[arg(long, visible_alias = "seed", default_value = "0..20")]
    seeds: SeedSpec,

    /// Parallel seed fan-out.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Also write the first seed's instance to PREFIX.edges / PREFIX.sidecar.
    #[arg(long, value_name = "PREFIX")]
    dump: Option<PathBuf>,

    /// Report destination (default stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: SourceArgs,

    #[command(flatten)]
    cluster: ClusterArgs,

    /// Clustering seeds, one instrumented run each.
    #[arg(long, visible_alias = "seed", default_value = "0..10")]
    seeds: SeedSpec,

    /// Parallel seed fan-out.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Exact-oracle vertex cap; larger inputs are refused.
    #[arg(long, default_value_t = 24)]
    oracle_vertices: usize,

    /// Exact-oracle edge cap.
    #[arg(long, default_value_t = 64)]
    oracle_edges: usize,

    /// Report destination (default stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(flatten)]
    report: ReportArgs,
}

fn exit_class(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::OracleLimit(_) => 2,
        Error::Parse { .. } | Error::Io(_) => 3,
        Error::InvalidMatching(_) | Error::Internal(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_class(&e))
        }
    }
}
