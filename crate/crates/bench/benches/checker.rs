use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use duckcheck_core::frontend::parse_formula;
use duckcheck_bench::{MAP, NEGATE};
use duckcheck_core::*;

fn check(src: &str) -> Scheme {
    let p = load_program(src).unwrap();
    let session = Session::open(SolverConfig::default()).unwrap();
    let mut c = Checker::new(session, p.defs, CheckOptions::default());
    check_program(&mut c, &p.body).unwrap()
}

fn checking(c: &mut Criterion) {
    c.bench_function("check negate", |b| b.iter(|| check(black_box(NEGATE))));
    c.bench_function("check map", |b| b.iter(|| check(black_box(MAP))));
}

fn normalizing(c: &mut Criterion) {
    let p = parse_formula(
        "(x = 1 \\/ y :: Int -> Int) /\\ not (z = null => (x :: Null \\/ y = 2)) /\\ (w = 3 <=> not (x = 4))",
    )
    .unwrap();
    c.bench_function("normalize", |b| b.iter(|| normalize(black_box(&p)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = checking, normalizing
}
criterion_main!(benches);
