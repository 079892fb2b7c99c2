use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use torus_coalescent::experiments::Layout;
use torus_coalescent::mutation::{default_mutation_rate, run_infinite_alleles, MutationConfig};
use torus_coalescent::parallel::map_replicates_sequential;
use torus_coalescent::rng::stream;
use torus_coalescent::{LabeledPartition, Mechanism, Torus};

fn replicate(torus: Torus, start: &LabeledPartition, mech: &Mechanism, mcfg: MutationConfig, r: u64) -> u64 {
    let mut rng = stream(7, r, "bench");
    run_infinite_alleles(start, torus, mech.clone(), mcfg, &mut rng)
        .unwrap()
        .a(1)
}

fn bench(c: &mut Criterion) {
    let torus = Torus::with_side(33).unwrap();
    let sites = Layout::GridClose.sites(&torus);
    let start = LabeledPartition::singletons(sites.len() as u32, &sites).unwrap();
    let mech: Mechanism = "bs".parse().unwrap();
    let mcfg = MutationConfig::new(default_mutation_rate(&torus).unwrap()).unwrap();
    let count = 64;

    let mut group = c.benchmark_group("spectrum_replicates");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(map_replicates_sequential(count, |r| replicate(torus, &start, &mech, mcfg, r))))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| {
            black_box(torus_coalescent::parallel::map_replicates_parallel(count, None, |r| {
                replicate(torus, &start, &mech, mcfg, r)
            }))
        })
    });
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
