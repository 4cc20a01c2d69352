use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fluid_bench::{all_sources, load};
use fluid_core::acyclic::{check_fluid, computational_closure, FluidOptions};
use fluid_core::dapp::collect_d_applications;
use fluid_core::engine::{run_uqfr, EngineConfig};
use fluid_core::skolem::skolemize_negated_goal;
use fluid_core::syntax::parse_source;

fn parse(c: &mut Criterion) {
    let sources = all_sources();
    c.bench_function("parse corpus", |b| {
        b.iter(|| {
            for (_, text) in &sources {
                black_box(parse_source(black_box(text)).unwrap());
            }
        })
    });
}

fn closure(c: &mut Criterion) {
    let sf = load("insert_vc_leon");
    let (neg, _) = skolemize_negated_goal(&sf.task.goal, "bench").unwrap();
    let init = collect_d_applications(&sf.task.sig, [&neg]);
    c.bench_function("closure insert_vc_leon depth 3", |b| {
        b.iter(|| black_box(computational_closure(&sf.task.sig, &init, &sf.task.defs, 3)))
    });
}

fn prove(c: &mut Criterion) {
    let mut g = c.benchmark_group("prove");
    g.sample_size(10);
    for name in ["insert_nil", "insert_vc_leon", "peano_comm_full", "map_get_set"] {
        let sf = load(name);
        let cfg = EngineConfig::with_rounds(5);
        g.bench_function(name, |b| b.iter(|| black_box(run_uqfr(&sf.task, &cfg).unwrap())));
    }
    g.finish();
}

fn acyclicity(c: &mut Criterion) {
    let sf = load("merge");
    let mut g = c.benchmark_group("check_fluid");
    g.sample_size(10);
    g.bench_function("merge", |b| {
        b.iter(|| black_box(check_fluid(&sf.task, &FluidOptions::default())))
    });
    g.finish();
}

criterion_group!(benches, parse, closure, prove, acyclicity);
criterion_main!(benches);
