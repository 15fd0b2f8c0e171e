use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use survey_core::preference::{intersection_area, KiviatPolygon};

fn intersection(c: &mut Criterion) {
    let a = KiviatPolygon::new(1.0, 0.4, 0.7, 0.2);
    let b = KiviatPolygon::new(0.3, 0.9, 0.5, 1.0);
    c.bench_function("kiviat intersection", |bench| bench.iter(|| intersection_area(black_box(&a), black_box(&b))));
}

criterion_group!(benches, intersection);
criterion_main!(benches);
