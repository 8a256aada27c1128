use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wbvp_bench::{instance, wavy_grid};
use wbvp_core::assembly::assemble_m;
use wbvp_core::nonlinearity::NonlinearitySpec;
use wbvp_core::solvers::{solve, MethodConfig, SolveOptions};
use wbvp_core::spectral::{certify_positive_definite, eigen_extremes};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    for size in [4, 8, 16, 32] {
        let g = wavy_grid(size, size);
        group.bench_with_input(BenchmarkId::from_parameter(size), &g, |b, g| {
            b.iter(|| assemble_m(black_box(g)))
        });
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectrum");
    for size in [4, 8, 12] {
        let m = assemble_m(&wavy_grid(size, size));
        group.bench_with_input(BenchmarkId::new("eigen_extremes", size), &m, |b, m| {
            b.iter(|| eigen_extremes(black_box(m)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cholesky", size), &m, |b, m| {
            b.iter(|| certify_positive_definite(black_box(m)))
        });
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let opts = SolveOptions {
        restarts: 2,
        ..SolveOptions::default()
    };
    for size in [3, 6] {
        let cubic = instance(size, size, NonlinearitySpec::cubic_softening());
        let power = instance(size, size, NonlinearitySpec::power(1.5, 1.5).unwrap());
        let quartic = instance(size, size, NonlinearitySpec::rational_quartic());
        let cases = [
            ("global", &cubic, 4.0, MethodConfig::GlobalMin),
            ("sublevel", &power, 0.01, MethodConfig::sublevel(1.0)),
            (
                "mountain_pass",
                &quartic,
                6.0,
                MethodConfig::mountain_pass(),
            ),
            (
                "newton",
                &cubic,
                4.0,
                MethodConfig::Newton { initial: None },
            ),
        ];
        for (name, inst, lambda, method) in cases {
            group.bench_function(BenchmarkId::new(name, size), |b| {
                b.iter(|| solve(inst, black_box(lambda), &method, &opts, None).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, assembly, spectrum, solvers);
criterion_main!(benches);
