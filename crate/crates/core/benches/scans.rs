use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use divlab::complement::membership_scan;
use divlab::stats::moment_scan;
use divlab::{Exponent, Lab, Rational, Strategy};

const STRATEGIES: [(&str, Strategy); 2] = [
    ("sequential", Strategy::Sequential),
    ("parallel", Strategy::Parallel),
];

fn moments(c: &mut Criterion) {
    let lab = Lab::default();
    let mut g = c.benchmark_group("moment_scan");
    g.sample_size(10);
    for n in [100_000u64, 1_000_000] {
        for s in ["1", "0.5"] {
            let e: Exponent = s.parse().unwrap();
            for (name, strategy) in STRATEGIES {
                g.bench_with_input(BenchmarkId::new(format!("{name}/s={s}"), n), &n, |b, &n| {
                    b.iter(|| moment_scan(&lab, black_box(n), &e, strategy).unwrap())
                });
            }
        }
    }
    g.finish();
}

fn membership(c: &mut Criterion) {
    let mut g = c.benchmark_group("membership_scan");
    g.sample_size(10);
    // 5/4 is never attained, so every candidate is tested.
    let q = Rational::from((5, 4));
    for bound in [100_000u64, 1_000_000] {
        for (name, strategy) in STRATEGIES {
            g.bench_with_input(BenchmarkId::new(name, bound), &bound, |b, &bound| {
                b.iter(|| membership_scan(&q, 1, black_box(bound), strategy).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, moments, membership);
criterion_main!(benches);
