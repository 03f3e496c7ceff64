use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fracrom::{deim_select, fom_solve, rom_solve, CaseId, DMatrix, FractionalOrder, PcgOptions};
use fracrom_bench::{offline, rhs, spec, step_matrix};

fn linear_solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("linear");
    let tri = step_matrix(CaseId::Test1, 0.05);
    let b = rhs(63);
    g.bench_function("thomas_63", |bch| {
        bch.iter(|| tri.solve(black_box(&b), None, &PcgOptions::default()))
    });
    for id in [CaseId::Ex3, CaseId::Ex4] {
        let a = step_matrix(id, 0.05);
        let b = rhs(a.dim());
        g.bench_with_input(BenchmarkId::new("pcg_3969", id), &b, |bch, b| {
            bch.iter(|| a.solve(black_box(b), None, &PcgOptions::default()))
        });
    }
    g.finish();
}

fn forward_solves(c: &mut Criterion) {
    let mut g = c.benchmark_group("forward");
    g.sample_size(10);
    let beta = FractionalOrder::new(0.5).unwrap();
    for id in [CaseId::Test1, CaseId::Test2, CaseId::Ex3, CaseId::Ex4] {
        let s = spec(id, 0.5);
        g.bench_function(BenchmarkId::new("fom", id), |bch| bch.iter(|| fom_solve(black_box(&s))));
        let rom = offline(id);
        g.bench_function(BenchmarkId::new("rom", id), |bch| {
            bch.iter(|| rom_solve(black_box(&rom), &s, beta))
        });
    }
    g.finish();
}

fn deim(c: &mut Criterion) {
    let n = 3969;
    let s = 10;
    let psi = DMatrix::from_fn(n, s, |i, j| (((i + 1) * (j + 2)) as f64 * 0.013).sin());
    let q = psi.qr().q();
    c.bench_function("deim_select_3969x10", |bch| bch.iter(|| deim_select(black_box(&q))));
}

criterion_group!(benches, linear_solvers, forward_solves, deim);
criterion_main!(benches);
