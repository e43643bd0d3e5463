use corematch::{cluster, ClusterConfig};
use corematch_bench::bench_graph;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn bench_clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("cluster");
    let graph = bench_graph(100_000, 1_000_000, 42);
    for &(k, mult) in &[(16u32, 2.0f64), (64, 2.0), (16, 8.0)] {
        let cfg = ClusterConfig::new(k, mult, 7).unwrap();
        group.throughput(Throughput::Elements(graph.m() as u64));
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("k{k}_c{mult}")),
            &cfg,
            |b, cfg| b.iter(|| cluster(&graph, cfg).total_copies()),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_clustering);
criterion_main!(benches);
