use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vaftc_core::engine::{demo_scenario, metrics, run, Mode, Scenario};

fn modes(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulation 5 s");
    g.sample_size(20);
    for mode in Mode::ALL {
        let s = Scenario {
            t_end: 5.0,
            ..demo_scenario().with_mode(mode)
        };
        g.bench_function(mode.name(), |b| b.iter(|| run(black_box(&s)).unwrap()));
    }
    g.finish();
}

fn full_study(c: &mut Criterion) {
    let s = demo_scenario();
    let mut g = c.benchmark_group("simulation 40 s");
    g.sample_size(10);
    g.bench_function("run + metrics", |b| {
        b.iter(|| {
            let tr = run(&s).unwrap();
            metrics(&tr, &s, s.eps_band).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, modes, full_study);
criterion_main!(benches);
