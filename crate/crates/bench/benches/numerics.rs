use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vaftc_core::numerics::{
    eig_symmetric, rk4_step, solve_lyapunov, CompensatedRk4, Mat, NumericsError,
};

fn plant() -> Mat {
    Mat::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -2.0, -3.0]])
}

fn decay(_: f64, x: &[f64]) -> Result<Vec<f64>, NumericsError> {
    Ok(x.iter().map(|v| -v).collect())
}

fn lyapunov(c: &mut Criterion) {
    let a = plant();
    let q = Mat::identity(3);
    c.bench_function("solve_lyapunov 3x3", |b| {
        b.iter(|| solve_lyapunov(black_box(&a), black_box(&q)).unwrap())
    });
}

fn jacobi(c: &mut Criterion) {
    let p = Mat::from_rows(&[[2.8, 2.6, 0.5], [2.6, 7.1, 1.8], [0.5, 1.8, 1.1]]);
    c.bench_function("eig_symmetric 3x3", |b| {
        b.iter(|| eig_symmetric(black_box(&p)).unwrap())
    });
}

fn integrators(c: &mut Criterion) {
    let mut g = c.benchmark_group("rk4 1000 steps, 18 states");
    g.bench_function("rk4_step", |b| {
        b.iter(|| {
            let mut x = vec![1.0; 18];
            for k in 0..1000 {
                x = rk4_step(decay, k as f64 * 1e-3, &x, 1e-3).unwrap();
            }
            x
        })
    });
    g.bench_function("CompensatedRk4", |b| {
        b.iter(|| {
            let mut x = vec![1.0; 18];
            let mut rk = CompensatedRk4::new(18);
            for k in 0..1000 {
                rk.step(decay, k as f64 * 1e-3, &mut x, 1e-3).unwrap();
            }
            x
        })
    });
    g.finish();
}

criterion_group!(benches, lyapunov, jacobi, integrators);
criterion_main!(benches);
