//! Benchmarks for the hot kernels: exact enumeration over spin
//! configurations, likelihood-ratio scans, multigraph enumeration, the two
//! expansion-sum strategies, and weight-table construction.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fluctlab::free_energy::EvalMethod;
use fluctlab::multigraph::{expansion_sum, for_each_multicycle, EdgeWeightSample};
use fluctlab::{
    hermite_weights, log_lr, partition_function_exact, sample_wigner, second_moment_estimate,
    DisorderSpec, NoisePair, PriorSpec,
};

fn bench_partition_exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("partition_function_exact");
    for n in [12usize, 16, 20] {
        let w = sample_wigner(&DisorderSpec::gaussian_goe(), n, 7).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &w, |b, w| {
            b.iter(|| partition_function_exact(black_box(w), 0.5).unwrap().log_z)
        });
    }
    group.finish();
}

fn bench_log_lr_exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("log_lr_exact");
    let noise = NoisePair::gaussian_goe().unwrap();
    let prior = PriorSpec::rademacher();
    for n in [12usize, 16] {
        let w = sample_wigner(&DisorderSpec::gaussian_goe(), n, 11).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &w, |b, w| {
            b.iter(|| {
                log_lr(black_box(w), 0.3, &noise, &prior, EvalMethod::Exact, 0, 0)
                    .unwrap()
                    .log_l
            })
        });
    }
    group.finish();
}

fn bench_multicycle_enumeration(c: &mut Criterion) {
    c.bench_function("multicycles_n4_ell4_size6", |b| {
        b.iter(|| {
            let mut count = 0u64;
            for_each_multicycle(4, 4, false, Some(6), |g| {
                count += u64::from(!g.is_empty());
                Ok(())
            })
            .unwrap();
            count
        })
    });
    c.bench_function("multicycles_n6_ell2_size8", |b| {
        b.iter(|| {
            let mut count = 0u64;
            for_each_multicycle(6, 2, false, Some(8), |_| {
                count += 1;
                Ok(())
            })
            .unwrap();
            count
        })
    });
}

fn bench_expansion_sum(c: &mut Criterion) {
    // The Rademacher prior hits the parity dynamic program; a general prior
    // falls back to depth-first enumeration, which is exponential and only
    // viable at small N.
    let dp_weights = EdgeWeightSample::random(10, 21);
    c.bench_function("expansion_sum_rademacher_dp_n10", |b| {
        b.iter(|| {
            expansion_sum(10, black_box(&dp_weights), &PriorSpec::rademacher(), 4, true).unwrap()
        })
    });
    let dfs_weights = EdgeWeightSample::random(5, 22);
    let gaussian = PriorSpec::gaussian(false);
    c.bench_function("expansion_sum_general_dfs_n5", |b| {
        b.iter(|| expansion_sum(5, black_box(&dfs_weights), &gaussian, 3, true).unwrap())
    });
}

fn bench_hermite_weights(c: &mut Criterion) {
    let mut group = c.benchmark_group("hermite_weights");
    for n in [64usize, 256] {
        let w = sample_wigner(&DisorderSpec::gaussian_goe(), n, 31).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &w, |b, w| {
            b.iter(|| hermite_weights(black_box(w), 0.6, 3.0).unwrap())
        });
    }
    group.finish();
}

fn bench_second_moment(c: &mut Criterion) {
    c.bench_function("second_moment_rademacher_n500_m5000", |b| {
        b.iter(|| {
            second_moment_estimate(&PriorSpec::rademacher(), 0.5, 500, 5000, 41)
                .unwrap()
                .value
        })
    });
}

criterion_group!(
    benches,
    bench_partition_exact,
    bench_log_lr_exact,
    bench_multicycle_enumeration,
    bench_expansion_sum,
    bench_hermite_weights,
    bench_second_moment
);
criterion_main!(benches);
