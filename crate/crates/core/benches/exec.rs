//! Sequential against parallel execution for the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tropadel::adelic::{from_oracle, verify_cauchy_with, BoundaryDatum};
use tropadel::conical::{approximate_with, ConicalOracle};
use tropadel::intersect::{mixed_volume_with, RationalPolytope};
use tropadel::rational::rat;
use tropadel::{Exec, Fan, LatticeVector};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn approximate(c: &mut Criterion) {
    let mut group = c.benchmark_group("approximate");
    group.sample_size(10);
    let reference = Fan::product_of_lines(2);
    let oracle = ConicalOracle::euclidean();
    for depth in [4, 6] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, depth), &depth, |b, &d| {
                b.iter(|| approximate_with(exec, &oracle, &reference, black_box(d)).unwrap())
            });
        }
    }
    group.finish();
}

fn cauchy(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_cauchy");
    group.sample_size(10);
    let reference = Fan::product_of_lines(2);
    let z = BoundaryDatum::total_boundary(reference.clone()).unwrap();
    let a = from_oracle(&ConicalOracle::euclidean(), &reference, &z, &rat(1, 1000)).unwrap();
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| verify_cauchy_with(exec, black_box(&a), &z, a.len()).unwrap()));
    }
    group.finish();
}

fn mixed_volume(c: &mut Criterion) {
    let mut group = c.benchmark_group("mixed_volume");
    group.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ps: Vec<RationalPolytope> = (0..3)
        .map(|_| {
            let points = (0..12)
                .map(|_| LatticeVector::from_ints(&[rng.gen_range(-6..=6), rng.gen_range(-6..=6), rng.gen_range(-6..=6)]))
                .collect();
            RationalPolytope::hull_of(3, points).unwrap()
        })
        .collect();
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| mixed_volume_with(exec, black_box(&ps)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, approximate, cauchy, mixed_volume);
criterion_main!(benches);
