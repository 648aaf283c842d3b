use std::hint::black_box;

use bosefield::classical::{sample_chunk, Field, Hartree};
use bosefield::fock::{build_basis, build_full_hamiltonian};
use bosefield::gibbs::gibbs;
use bosefield::lattice::{conv_sum_s, kernel_realspace_heat, FourierKernel, HeatQuad, Truncation};
use bosefield::{KernelParams, Mode};
use bosefield_bench::{bessel, reference_modes};
use criterion::{criterion_group, criterion_main, Criterion};

fn kernel(c: &mut Criterion) {
    let params = KernelParams::new(2.0).unwrap();
    let quad = HeatQuad::default();
    c.bench_function("heat_kernel_point", |b| b.iter(|| kernel_realspace_heat(black_box([1.0, 2.0]), params, &quad)));
    let fourier = FourierKernel::new(params, 200).unwrap();
    c.bench_function("fourier_kernel_point_r200", |b| b.iter(|| fourier.eval(black_box([1.0, 2.0]))));
    c.bench_function("conv_sum_r400", |b| b.iter(|| conv_sum_s(black_box(Mode(20, 0)), 0.75, Truncation { radius: 400 })));
}

fn quantum(c: &mut Criterion) {
    let modes = reference_modes();
    let inter = bessel(2.0);
    let basis = build_basis(&modes, 12).unwrap();
    c.bench_function("hamiltonian_cap12", |b| b.iter(|| build_full_hamiltonian(&basis, inter, 1.5, 1.0)));
    let h = build_full_hamiltonian(&basis, inter, 1.5, 1.0);
    c.bench_function("gibbs_cap12", |b| b.iter(|| gibbs(black_box(&h)).unwrap()));
}

fn classical(c: &mut Criterion) {
    let modes = reference_modes();
    let dp = Hartree::new(&modes, bessel(2.0));
    c.bench_function("sample_chunk_4096", |b| b.iter(|| sample_chunk(&modes, 7, black_box(0), 4096)));
    let cols = sample_chunk(&modes, 7, 0, 4096);
    let fields: Vec<Field> = (0..4096).map(|i| Field { alpha: cols.iter().map(|c| c[i]).collect() }).collect();
    c.bench_function("hartree_eval_4096", |b| b.iter(|| fields.iter().map(|u| dp.eval(u)).sum::<f64>()));
}

criterion_group!(benches, kernel, quantum, classical);
criterion_main!(benches);
