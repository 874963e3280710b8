use criterion::{criterion_group, criterion_main, Criterion};
use specweights_bench::{bumpy, disc, interval, torus};
use specweights_core::cheeger::{cheeger_constant, CheegerMethod};
use specweights_core::{assemble, solve_lowest, BoundaryCondition, DensityField, SolveOptions};
use std::hint::black_box;

fn assembly(c: &mut Criterion) {
    let d = disc(40, 96);
    let rho = bumpy(&d);
    let sigma = DensityField::constant(&d, 1.0).unwrap();
    c.bench_function("assemble_disc_40x96", |b| {
        b.iter(|| assemble(black_box(&d), &rho, &sigma, &BoundaryCondition::Neumann).unwrap())
    });
}

fn eigensolves(c: &mut Criterion) {
    let mut g = c.benchmark_group("lowest_eigenpairs");
    g.sample_size(10);

    let d = interval(400);
    let one = DensityField::constant(&d, 1.0).unwrap();
    let forms = assemble(&d, &one, &one, &BoundaryCondition::Neumann).unwrap();
    g.bench_function("interval_400_dense", |b| b.iter(|| solve_lowest(black_box(&forms), 4, 1e-10).unwrap()));

    let d = torus(48);
    let rho = bumpy(&d);
    let one = DensityField::constant(&d, 1.0).unwrap();
    let forms = assemble(&d, &rho, &one, &BoundaryCondition::Neumann).unwrap();
    let opts = SolveOptions::count(6);
    g.bench_function("torus_48x48_krylov", |b| {
        b.iter(|| specweights_core::eigen::solve_forms(black_box(&forms), &opts).unwrap())
    });
    g.finish();
}

fn cheeger_scan(c: &mut Criterion) {
    let d = interval(400);
    let rho = DensityField::from_fn(&d, |p| 1.0 + p[0] * p[0]).unwrap();
    let sigma = DensityField::from_fn(&d, |p| 1.0 + 2.0 * p[0]).unwrap();
    c.bench_function("cheeger_scan_interval_400", |b| {
        b.iter(|| cheeger_constant(black_box(&d), &rho, &sigma, &CheegerMethod::scan()).unwrap())
    });
}

criterion_group!(benches, assembly, eigensolves, cheeger_scan);
criterion_main!(benches);
