use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kerr_keldysh::exact_linear::sweep_drive_exact_with;
use kerr_keldysh::exact_twophoton::resonance_scan_with;
use kerr_keldysh::meanfield::sweep_drive_with;
use kerr_keldysh::{Execution, ModelParams};
use num_complex::Complex64;
use std::hint::black_box;

fn grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| from + (to - from) * i as f64 / n as f64)
        .collect()
}

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn drive_sweeps(c: &mut Criterion) {
    let params = ModelParams::coherent(5.0, -0.25, 0.0, 1.0);
    let omegas = grid(0.0, 8.0, 800);
    let mut g = c.benchmark_group("exact_drive_sweep");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sweep_drive_exact_with(&params, black_box(&omegas), None, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("meanfield_sweep");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sweep_drive_with(&params, black_box(&omegas), exec).unwrap())
        });
    }
    g.finish();
}

fn detuning_scans(c: &mut Criterion) {
    let params =
        ModelParams::coherent(-1.0, 1.0, 0.1, 0.1).with_two_photon(Complex64::new(0.2, 0.0), 0.1);
    let detunings = grid(-4.5, 0.5, 500);
    let mut g = c.benchmark_group("resonance_scan");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| resonance_scan_with(&params, black_box(&detunings), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, drive_sweeps, detuning_scans);
criterion_main!(benches);
