//! Data-parallel core against a single worker.
//!
//! `rayon` runs on the global pool; `sequential` runs the same call inside a
//! one-thread pool. Built with `--no-default-features` both sides take the
//! sequential fallback and should agree.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use liouville_core::counterexample::{u2_boundedness_sweep, verify_intf};
use liouville_core::entire::dirichlet_truncation;
use liouville_core::presets::{truncation_forcing, Preset};
use liouville_core::spectra::{refinement_study, DriftScheme};
use rayon::ThreadPoolBuilder;

fn compare(c: &mut Criterion, name: &str, work: impl Fn() + Sync) {
    let single = ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut g = c.benchmark_group(name);
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("rayon", rayon::current_num_threads()), |b| {
        b.iter(&work)
    });
    g.bench_function(BenchmarkId::new("sequential", 1), |b| b.iter(|| single.install(&work)));
    g.finish();
}

fn benches(c: &mut Criterion) {
    compare(c, "verify_intf_6561", || {
        assert!(verify_intf(6561).unwrap().passed());
    });
    compare(c, "u2_sweep_243", || {
        assert!(u2_boundedness_sweep(243.0, 0.125, 1e-9, 1e-6).unwrap().passed());
    });
    let drift = Preset::Drift.coefficients();
    compare(c, "refinement_32_to_256", || {
        refinement_study(&drift, &[32, 64, 128, 256], DriftScheme::Upwind, 1e-10).unwrap();
    });
    let trunc = Preset::Truncation.coefficients();
    let f = truncation_forcing();
    compare(c, "dirichlet_truncation_8_16_32", || {
        dirichlet_truncation(&trunc, &f, &[8.0, 16.0, 32.0], 16, None, 1e-12).unwrap();
    });
}

criterion_group!(parallel_vs_sequential, benches);
criterion_main!(parallel_vs_sequential);
