use criterion::{criterion_group, criterion_main, Criterion};
use graphbo_bench::fitted_model;
use graphbo_core::{solve, Budget, DomainSpec, KernelVariant, SolveOptions, Strategy};
use std::hint::black_box;

fn acquisition(c: &mut Criterion) {
    let domain = DomainSpec::fixed(4, false, 2, 2);
    let gp = fitted_model(&domain, KernelVariant::Ssp, 8, 3);
    let mut group = c.benchmark_group("solve_n4_l2");
    group.sample_size(10);
    for (name, strategy) in [("branch_and_propagate", Strategy::BranchAndPropagate), ("enumerate", Strategy::Enumerate)] {
        let opts = SolveOptions { strategy, budget: Budget::unlimited(), ..Default::default() };
        group.bench_function(name, |b| b.iter(|| solve(black_box(&gp), &domain, 1.0, &opts).unwrap().objective));
    }
    group.finish();
}

criterion_group!(benches, acquisition);
criterion_main!(benches);
