use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use maskcov::masks::{banded_mask, minor_mask};
use maskcov::sampler::draw_samples;
use maskcov::verify::max_regular_bilinear;
use maskcov::{spectral_norm, DenseMatrix, GaussianModel, SeedSpec, SymmetricMatrix};

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = SeedSpec::new(seed, 0).rng();
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal()).unwrap()
}

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_norm");
    for p in [32usize, 64, 128] {
        let a = random_matrix(p, p, 1);
        let s = SymmetricMatrix::symmetrize(&a);
        group.bench_with_input(BenchmarkId::new("general", p), &a, |b, a| {
            b.iter(|| spectral_norm(black_box(a)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("symmetric", p), &s, |b, s| {
            b.iter(|| black_box(s).spectral_norm().unwrap())
        });
    }
    group.finish();
}

fn masked_error(c: &mut Criterion) {
    let mut group = c.benchmark_group("masked_error_trial");
    group.sample_size(20);
    let p = 128;
    let model = GaussianModel::ar1(p, 0.5).unwrap();
    let banded = banded_mask(p, 2).unwrap();
    let minor = minor_mask(p, &(0..16).map(|i| 8 * i).collect::<Vec<_>>()).unwrap();
    for n in [256usize, 1024] {
        let batch = draw_samples(&model, n, SeedSpec::new(2, n as u64)).unwrap();
        group.bench_with_input(BenchmarkId::new("draw", n), &n, |b, &n| {
            b.iter(|| draw_samples(&model, n, SeedSpec::new(3, 0)).unwrap())
        });
        for (name, mask) in [("banded", &banded), ("minor", &minor)] {
            group.bench_with_input(BenchmarkId::new(name, n), &batch, |b, batch| {
                b.iter(|| mask.estimation_error(black_box(batch), model.sigma(), false).unwrap())
            });
        }
    }
    group.finish();
}

fn regular_enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("max_regular_bilinear");
    for p in [6usize, 8, 10] {
        let a = random_matrix(p, p, 4);
        group.bench_with_input(BenchmarkId::from_parameter(p), &a, |b, a| {
            b.iter(|| max_regular_bilinear(black_box(a)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, spectral, masked_error, regular_enumeration);
criterion_main!(benches);
