use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use kamtori::algebra::{poisson_bracket, BracketCaps};
use kamtori::classify::classify;
use kamtori::engine::{kam_step, solve_homological};
use kamtori::ham::ActionVector;
use kamtori_bench::{classified, desk_weight, generator, sextic, step_state};
use std::hint::black_box;

fn bench_bracket(c: &mut Criterion) {
    let caps = BracketCaps::default();
    let mut group = c.benchmark_group("poisson_bracket");
    for window in [2u32, 3] {
        let h = sextic(window, 1e-8);
        let f = generator(window, 1e-8);
        group.bench_function(format!("sextic_x_generator_m{window}"), |b| {
            b.iter(|| poisson_bracket(black_box(&h), black_box(&f), &caps).unwrap())
        });
    }
    group.finish();
}

fn bench_classify(c: &mut Criterion) {
    let w = desk_weight();
    let mut group = c.benchmark_group("classify");
    for window in [2u32, 3] {
        let h = sextic(window, 1e-8);
        let i0 = ActionVector::torus(window, &w);
        group.bench_function(format!("nls_sextic_m{window}"), |b| {
            b.iter(|| classify(black_box(&h), &i0))
        });
    }
    let p = classified(3, 1e-8);
    group.bench_function("plus_norm_m3", |b| {
        b.iter(|| black_box(&p).plus_norm(black_box(0.1)))
    });
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let state = step_state(3, 1e-8);
    c.bench_function("solve_homological_m3", |b| {
        b.iter(|| {
            solve_homological(
                black_box(&state.pert),
                &state.normal,
                &state.schedule,
                1e-3,
            )
            .unwrap()
        })
    });
}

fn bench_step(c: &mut Criterion) {
    let caps = BracketCaps::default();
    let state = step_state(2, 1e-8);
    c.bench_function("kam_step_m2", |b| {
        b.iter_batched(
            || state.clone(),
            |s| kam_step(&s, 1e-3, &caps).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_bracket, bench_classify, bench_solve, bench_step);
criterion_main!(benches);
