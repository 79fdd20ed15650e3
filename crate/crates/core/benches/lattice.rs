use ashlab_core::multilinear::{lambda_n, Delta4, Delta4Table, Delta6Printed};
use ashlab_core::{EquationParams, Exec, Grid, MultiplierSymbol, SpectralField};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

fn field(modes: usize) -> SpectralField {
    let grid = Grid::new(modes, 12.0).unwrap();
    SpectralField::from_fn(grid, |x| Complex64::new(1.0 / x.cosh(), 0.2 * (x / 2.0).sin() / x.cosh()))
}

fn params() -> EquationParams {
    EquationParams::new(0.0, 1.0, 0.0, 1.0, 1.0)
}

fn lambda4(c: &mut Criterion) {
    let mut group = c.benchmark_group("lambda4_delta4");
    group.sample_size(10);
    for modes in [64usize, 128] {
        let w = field(modes);
        let delta = Delta4::new(params(), MultiplierSymbol::new(4.0, 0.3).unwrap(), w.grid().dxi());
        for exec in [Exec::Sequential, Exec::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), modes), &w, |b, w| {
                b.iter(|| lambda_n(&delta, w, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn lambda6(c: &mut Criterion) {
    let mut group = c.benchmark_group("lambda6_delta6");
    group.sample_size(10);
    let w = field(16);
    let delta = Delta4::new(params(), MultiplierSymbol::new(4.0, 0.3).unwrap(), w.grid().dxi());
    let table = Delta4Table::for_grid(&delta, 16, Exec::Parallel);
    let d6 = Delta6Printed::new(&table, params());
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), 16), &w, |b, w| b.iter(|| lambda_n(&d6, w, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, lambda4, lambda6);
criterion_main!(benches);
