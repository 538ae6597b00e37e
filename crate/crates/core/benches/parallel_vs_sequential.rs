use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use natural_copula::copula::compute_integrals_with;
use natural_copula::quadrature::integrate_2d_tensor;
use natural_copula::{
    estimate_copula, gauss_legendre_rule, normalize, CopulaConfig, DomainMap, Exec,
    MarginalDensity, MarginalSpec, MonomialBasis,
};

fn marginal(coeffs: [f64; 4], center: f64, width: f64) -> MarginalDensity {
    let spec = MarginalSpec {
        coeffs,
        xi: 1.0,
        center,
        width,
        theta: 1.0,
        volume: 1.0,
    };
    normalize(&spec, &DomainMap::unit(), &gauss_legendre_rule(32).unwrap()).unwrap()
}

fn pair() -> (MarginalDensity, MarginalDensity) {
    (
        marginal([0.9, -12.0, 0.15, -1.0], 0.42, 0.2),
        marginal([-0.9, -12.0, -0.15, -1.0], 0.58, 0.25),
    )
}

const POLICIES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn tensor_quadrature(c: &mut Criterion) {
    let mut group = c.benchmark_group("integrate_2d_tensor");
    for n in [32, 128] {
        let rule = gauss_legendre_rule(n).unwrap();
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, n), &rule, |b, rule| {
                b.iter(|| {
                    integrate_2d_tensor(|x, y| (x * y).sin() * (x - y).exp(), rule, rule, exec)
                        .unwrap()
                })
            });
        }
    }
    group.finish();
}

fn cost_integrals(c: &mut Criterion) {
    let (fx, fy) = pair();
    let basis = MonomialBasis::default_four();
    let rule = gauss_legendre_rule(32).unwrap();
    let mut group = c.benchmark_group("compute_integrals");
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| compute_integrals_with(&fx, &fy, &basis, &rule, exec).unwrap())
        });
    }
    group.finish();
}

fn density_grid(c: &mut Criterion) {
    let (fx, fy) = pair();
    let model = estimate_copula(
        &fx,
        &fy,
        &MonomialBasis::default_four(),
        &CopulaConfig::default(),
    )
    .unwrap();
    let mut group = c.benchmark_group("density_grid_101");
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(model.density_grid(101, exec)))
        });
    }
    group.finish();
}

fn estimation(c: &mut Criterion) {
    let (fx, fy) = pair();
    let basis = MonomialBasis::default_four();
    let mut group = c.benchmark_group("estimate_copula");
    group.sample_size(20);
    for (name, exec) in POLICIES {
        let config = CopulaConfig {
            exec,
            ..CopulaConfig::default()
        };
        group.bench_function(name, |b| {
            b.iter(|| estimate_copula(&fx, &fy, &basis, &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    tensor_quadrature,
    cost_integrals,
    density_grid,
    estimation
);
criterion_main!(benches);
