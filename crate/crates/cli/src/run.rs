//! Command implementations. Every function returns the library error type;
//! `main` maps that onto exit codes. Multi-seed commands fan seeds out over
//! a rayon pool sized by `--workers` and keep each inner pipeline single
//! threaded; `bench` does the opposite, because there the pipeline itself is
//! the thing being timed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::Value;

use corematch::analysis::analyze_run;
use corematch::factor_lp::{
    build_lp, empirical_lp_point, parse_rat, rat_to_f64, solve_lp, VAR_NAMES,
};
use corematch::gen::{generate, DegreeModel, GenConfig, WeightModel};
use corematch::graph::write_edge_list;
use corematch::hard_instance::{generate_hard, hard_experiment, write_sidecar, HardParams};
use corematch::pipeline::quality_report;
use corematch::{
    cluster, greedy, load_edge_list_path, multiplicity_stats, run_pipeline, write_matching,
    ClusterConfig, DedupPolicy, Error, LoadOptions, OracleLimits, PipelineConfig, PostProcess,
    Result, WeightedGraph,
};

use crate::table::{pct, round3, Kv, Table};
use crate::{
    AnalyzeArgs, BenchArgs, Cli, ClusterArgs, Cmd, DedupKind, GenKind, HardArgs, LpArgs, MatchArgs,
    PostKind, RunArgs, SamplingArgs, SourceArgs, SweepArgs, WeightsKind,
};

pub(crate) fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Match(a) => cmd_match(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::SweepMult(a) => cmd_sweep_mult(a),
        Cmd::Sampling(a) => cmd_sampling(a),
        Cmd::Lp(a) => cmd_lp(a),
        Cmd::Hard(a) => cmd_hard(a),
        Cmd::Analyze(a) => cmd_analyze(a),
    }
}

fn load_graph(src: &SourceArgs) -> Result<WeightedGraph> {
    if let Some(path) = &src.input {
        let opts = LoadOptions {
            dedup: match src.dedup {
                DedupKind::Error => DedupPolicy::Error,
                DedupKind::Max => DedupPolicy::KeepMax,
                DedupKind::Sum => DedupPolicy::Sum,
            },
            drop_nonpositive: src.drop_nonpositive,
        };
        return load_edge_list_path(path, opts);
    }
    let Some(model) = src.gen else {
        return Err(Error::Config("provide --input FILE or --gen MODEL".into()));
    };
    let (Some(n), Some(m)) = (src.n, src.m) else {
        return Err(Error::Config("--gen needs --n and --m".into()));
    };
    generate(&GenConfig {
        n,
        m,
        degrees: match model {
            GenKind::Uniform => DegreeModel::Uniform,
            GenKind::Powerlaw => DegreeModel::PowerLaw {
                exponent: src.exponent,
            },
        },
        weights: match src.weights {
            WeightsKind::Uniform => WeightModel::Uniform,
            WeightsKind::Exp => WeightModel::Exp,
        },
        seed: src.graph_seed,
    })
}

fn cluster_config(a: &ClusterArgs, seed: u64) -> Result<ClusterConfig> {
    match (a.c, a.epsilon) {
        (Some(c), None) => ClusterConfig::new(a.k, c, seed),
        (None, Some(eps)) => ClusterConfig::from_epsilon(a.k, eps, seed),
        _ => Err(Error::Config(
            "provide exactly one of --c or --epsilon".into(),
        )),
    }
}

fn post_process(a: &RunArgs) -> PostProcess {
    match a.post {
        PostKind::Greedy => PostProcess::Greedy,
        PostKind::BestOf => PostProcess::BestOf,
        PostKind::Exact => PostProcess::Exact {
            max_union_edges: a.exact_cap,
        },
        PostKind::LocalSearch => PostProcess::LocalSearch { rounds: a.rounds },
    }
}

fn post_name(a: &RunArgs) -> &'static str {
    match a.post {
        PostKind::Greedy => "greedy",
        PostKind::BestOf => "best-of",
        PostKind::Exact => "exact",
        PostKind::LocalSearch => "local-search",
    }
}

/// Opens the report/artifact destination; `None` or `-` means stdout.
fn sink(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p.as_os_str() != "-" => Box::new(BufWriter::new(File::create(p)?)),
        _ => Box::new(io::stdout()),
    })
}

fn seed_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn cmd_match(a: MatchArgs) -> Result<()> {
    let graph = load_graph(&a.source)?;
    let mut kv = Kv::new();
    kv.push("n", graph.n());
    kv.push("m", graph.m() as u64);

    let matching;
    if a.sequential {
        matching = greedy(&graph).0;
        kv.push("mode", "sequential");
    } else {
        let cfg = cluster_config(&a.cluster, a.seed)?;
        let mut pipe = PipelineConfig::new(cfg);
        pipe.post = post_process(&a.run);
        pipe.workers = a.run.workers;
        pipe.compute_quality = a.quality;
        let result = run_pipeline(&graph, &pipe)?;
        kv.push("mode", "pipeline");
        kv.push("k", cfg.k);
        kv.push("c", cfg.c);
        kv.push("seed", a.seed);
        kv.push("post", post_name(&a.run));
        kv.push("workers", a.run.workers as u64);
        kv.push("union_edges", result.union_graph.m() as u64);
        kv.push("budget_edges", result.advisory.budget_edges);
        kv.push("max_machine_edges", result.advisory.max_machine_edges);
        kv.push("within_budget", result.advisory.within_budget);
        kv.push("exact_fallback", result.exact_fallback);
        if let Some(q) = &result.quality {
            kv.push("weight_pct", pct(q.weight_ratio_vs_greedy));
            kv.push("cardinality_pct", pct(q.cardinality_ratio_vs_greedy));
        }
        if !a.report.deterministic_report {
            kv.push("cluster_ms", round3(result.timings.cluster_ms));
            kv.push("coreset_ms", round3(result.timings.coreset_ms));
            kv.push("post_ms", round3(result.timings.post_ms));
        }
        matching = result.final_matching;
    }
    kv.push("weight", matching.total_weight());
    kv.push("edges", matching.len() as u64);

    let matching_on_stdout = a.out.as_ref().is_none_or(|p| p.as_os_str() == "-");
    {
        let mut out = sink(a.out.as_ref())?;
        write_matching(&matching, &graph, &mut out)?;
        out.flush()?;
    }
    if matching_on_stdout {
        kv.write(a.report.report, &mut io::stderr())?;
    } else {
        kv.write(a.report.report, &mut io::stdout())?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let graph = load_graph(&a.source)?;
    let t0 = Instant::now();
    let baseline = greedy(&graph).0;
    let seq_ms = elapsed_ms(t0);

    struct Row {
        seed: u64,
        weight_pct: f64,
        card_pct: f64,
        pipe_ms: f64,
    }
    let mut rows = Vec::with_capacity(a.seeds.0.len());
    for &seed in &a.seeds.0 {
        let cfg = cluster_config(&a.cluster, seed)?;
        let mut pipe = PipelineConfig::new(cfg);
        pipe.post = post_process(&a.run);
        pipe.workers = a.run.workers;
        let t = Instant::now();
        let result = run_pipeline(&graph, &pipe)?;
        let pipe_ms = elapsed_ms(t);
        let q = quality_report(&result.final_matching, &baseline);
        rows.push(Row {
            seed,
            weight_pct: q.weight_ratio_vs_greedy,
            card_pct: q.cardinality_ratio_vs_greedy,
            pipe_ms,
        });
    }

    let timed = !a.report.deterministic_report;
    let mut columns = vec!["seed", "weight_pct", "cardinality_pct"];
    if timed {
        columns.extend(["seq_ms", "pipe_ms", "speedup"]);
    }
    let mut table = Table::new(columns);
    let fill = |label: Value, w: f64, c: f64, p: f64| {
        let mut row = vec![label, pct(w), pct(c)];
        if timed {
            row.extend([round3(seq_ms), round3(p), round3(seq_ms / p)]);
        }
        row
    };
    for r in &rows {
        table.push(fill(
            Value::from(r.seed),
            r.weight_pct,
            r.card_pct,
            r.pipe_ms,
        ));
    }
    let w: Vec<f64> = rows.iter().map(|r| r.weight_pct).collect();
    let c: Vec<f64> = rows.iter().map(|r| r.card_pct).collect();
    let p: Vec<f64> = rows.iter().map(|r| r.pipe_ms).collect();
    table.push(fill(Value::from("mean"), mean(&w), mean(&c), mean(&p)));

    table
        .write(a.report.report, &mut sink(a.out.as_ref())?)
        .map_err(Error::from)
}

fn cmd_sweep_mult(a: SweepArgs) -> Result<()> {
    let graph = load_graph(&a.source)?;
    let baseline = greedy(&graph).0;
    let pool = seed_pool(a.run.workers)?;
    let post = post_process(&a.run);

    let mut table = Table::new(vec![
        "c",
        "seeds",
        "mean_mult",
        "weight_pct",
        "cardinality_pct",
    ]);
    for &c in &a.c_list.0 {
        let per_seed: Vec<(f64, f64, f64)> = pool.install(|| {
            a.seeds
                .0
                .par_iter()
                .map(|&seed| -> Result<(f64, f64, f64)> {
                    let cfg = ClusterConfig::new(a.k, c, seed)?;
                    let mut pipe = PipelineConfig::new(cfg);
                    pipe.post = post;
                    let result = run_pipeline(&graph, &pipe)?;
                    let q = quality_report(&result.final_matching, &baseline);
                    let mult = multiplicity_stats(&cluster(&graph, &cfg)).mean;
                    Ok((
                        q.weight_ratio_vs_greedy,
                        q.cardinality_ratio_vs_greedy,
                        mult,
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let w: Vec<f64> = per_seed.iter().map(|r| r.0).collect();
        let card: Vec<f64> = per_seed.iter().map(|r| r.1).collect();
        let mult: Vec<f64> = per_seed.iter().map(|r| r.2).collect();
        table.push(vec![
            Value::from(c),
            Value::from(per_seed.len() as u64),
            Value::from(mean(&mult)),
            pct(mean(&w)),
            pct(mean(&card)),
        ]);
    }
    table
        .write(a.report.report, &mut sink(a.out.as_ref())?)
        .map_err(Error::from)
}

fn cmd_sampling(a: SamplingArgs) -> Result<()> {
    let graph = load_graph(&a.source)?;
    let baseline = greedy(&graph).0;
    let base_w = baseline.total_weight();
    let pool = seed_pool(a.run.workers)?;
    let post = post_process(&a.run);

    let mut table = Table::new(vec![
        "k",
        "seeds",
        "best_single_pct",
        "pipeline_pct",
        "m1_pct",
    ]);
    for &k in &a.k_list.0 {
        let per_seed: Vec<(f64, f64, f64)> = pool.install(|| {
            a.seeds
                .0
                .par_iter()
                .map(|&seed| -> Result<(f64, f64, f64)> {
                    let cfg = ClusterConfig::new(k, a.c, seed)?;
                    let mut pipe = PipelineConfig::new(cfg);
                    pipe.post = post;
                    let result = run_pipeline(&graph, &pipe)?;
                    let best_single = result
                        .per_machine
                        .iter()
                        .map(|m| m.total_weight())
                        .fold(0.0_f64, f64::max);
                    let ratio = |w: f64| {
                        if base_w == 0.0 {
                            100.0
                        } else {
                            100.0 * w / base_w
                        }
                    };
                    Ok((
                        ratio(best_single),
                        ratio(result.final_matching.total_weight()),
                        ratio(result.per_machine[0].total_weight()),
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let single: Vec<f64> = per_seed.iter().map(|r| r.0).collect();
        let full: Vec<f64> = per_seed.iter().map(|r| r.1).collect();
        let m1: Vec<f64> = per_seed.iter().map(|r| r.2).collect();
        table.push(vec![
            Value::from(k),
            Value::from(per_seed.len() as u64),
            pct(mean(&single)),
            pct(mean(&full)),
            pct(mean(&m1)),
        ]);
    }
    table
        .write(a.report.report, &mut sink(a.out.as_ref())?)
        .map_err(Error::from)
}

fn cmd_lp(a: LpArgs) -> Result<()> {
    let mut caps = vec![None];
    if let Some(list) = &a.mu_list {
        for tok in list.split(',') {
            caps.push(Some(parse_rat(tok)?));
        }
    }

    let mut columns = vec!["mu", "z_star", "z", "ratio", "ratio_float"];
    if a.witness {
        columns.push("witness");
    }
    let mut table = Table::new(columns);
    for cap in caps {
        let label = match &cap {
            None => "-".to_string(),
            Some(mu) => mu.to_string(),
        };
        let solution = solve_lp(&build_lp(cap)?)?;
        let mut row = vec![
            Value::from(label),
            Value::from(solution.z_star.to_string()),
            Value::from(rat_to_f64(&solution.z_star)),
            Value::from(solution.ratio.to_string()),
            Value::from(rat_to_f64(&solution.ratio)),
        ];
        if a.witness {
            let point: Vec<String> = VAR_NAMES
                .iter()
                .zip(&solution.witness)
                .map(|(name, v)| format!("{name}={v}"))
                .collect();
            row.push(Value::from(point.join(",")));
        }
        table.push(row);
    }
    table
        .write(a.report.report, &mut sink(a.out.as_ref())?)
        .map_err(Error::from)
}

fn cmd_hard(a: HardArgs) -> Result<()> {
    let params = HardParams {
        n: a.n,
        k: a.k,
        c: a.c,
        alpha: a.alpha,
        gamma: a.gamma,
    };
    params.validate()?;
    if a.seeds.0.is_empty() {
        return Err(Error::Config("need at least one seed".into()));
    }

    if let Some(prefix) = &a.dump {
        let inst = generate_hard(&params, a.seeds.0[0])?;
        let edges_path = PathBuf::from(format!("{}.edges", prefix.display()));
        let mut out = BufWriter::new(File::create(edges_path)?);
        write_edge_list(&inst.graph, &mut out)?;
        out.flush()?;
        let sidecar_path = PathBuf::from(format!("{}.sidecar", prefix.display()));
        write_sidecar(&inst, BufWriter::new(File::create(sidecar_path)?))?;
    }

    let report = hard_experiment(&params, &a.seeds.0, a.workers)?;
    let mut kv = Kv::new();
    kv.push("n", params.n);
    kv.push("k", params.k);
    kv.push("c", params.c);
    kv.push("alpha", params.alpha);
    kv.push("gamma", params.gamma);
    kv.push("n_ab", params.n_ab());
    kv.push("p_ab", params.p_ab());
    kv.push("seeds", report.seeds as u64);
    kv.push("expected_ab_edges", report.expected_ab_edges);
    kv.push("mean_ab_edges", report.mean_ab_edges);
    kv.push("mean_partition_ab_edges", report.mean_partition_ab_edges);
    kv.push("mean_output_size", report.mean_output_size);
    kv.push("mean_opt_size", report.mean_opt_size);
    kv.push("mean_output_ratio", report.mean_output_ratio);
    kv.push("mean_planted_in_union", report.mean_planted_in_union);
    kv.write(a.report.report, &mut sink(a.out.as_ref())?)
        .map_err(Error::from)
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let graph = load_graph(&a.source)?;
    let limits = OracleLimits {
        max_edges: a.oracle_edges,
        max_vertices: a.oracle_vertices,
    };
    let pool = seed_pool(a.workers)?;

    struct Audited {
        seed: u64,
        row: corematch::analysis::AnalysisRow,
        charging: f64,
        types_ok: bool,
        m1_ok: bool,
        lp_feasible: bool,
        output_ratio: f64,
        bound_ok: bool,
        degenerate: bool,
    }
    let audits: Vec<Audited> = pool.install(|| {
        a.seeds
            .0
            .par_iter()
            .map(|&seed| -> Result<Audited> {
                let cfg = cluster_config(&a.cluster, seed)?;
                let outcome = analyze_run(&graph, &cfg, &limits)?;
                let point = empirical_lp_point(&outcome.row)?;
                Ok(Audited {
                    seed,
                    row: outcome.row,
                    charging: outcome.charging_weight,
                    types_ok: outcome.types_hold,
                    m1_ok: outcome.m1_bound_holds,
                    lp_feasible: point.feasible,
                    output_ratio: point.output_ratio,
                    bound_ok: point.meets_lp_bound,
                    degenerate: point.degenerate,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut table = Table::new(vec![
        "seed",
        "f10",
        "f12",
        "f13",
        "b11",
        "b12",
        "b13",
        "m1",
        "opt_g",
        "opt_h",
        "output",
        "f1",
        "f1_avail",
        "charging",
        "types_ok",
        "m1_ok",
        "lp_feasible",
        "output_ratio",
        "bound_ok",
        "degenerate",
    ]);
    for audit in &audits {
        let r = &audit.row;
        table.push(vec![
            Value::from(audit.seed),
            Value::from(r.f10),
            Value::from(r.f12),
            Value::from(r.f13),
            Value::from(r.b11),
            Value::from(r.b12),
            Value::from(r.b13),
            Value::from(r.m1),
            Value::from(r.opt_g),
            Value::from(r.opt_h),
            Value::from(r.output),
            Value::from(r.f1),
            Value::from(r.f1_avail),
            Value::from(audit.charging),
            Value::from(audit.types_ok),
            Value::from(audit.m1_ok),
            Value::from(audit.lp_feasible),
            Value::from(audit.output_ratio),
            Value::from(audit.bound_ok),
            Value::from(audit.degenerate),
        ]);
    }
    table
        .write(a.report.report, &mut sink(a.out.as_ref())?)
        .map_err(Error::from)
}
