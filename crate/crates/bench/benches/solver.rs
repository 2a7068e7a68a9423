use criterion::{black_box, criterion_group, criterion_main, Criterion};
use scalesynth_core::budget::BudgetResult;
use scalesynth_core::factorspace::{
    count_solution_space, divisors, enumerate_window, DEFAULT_ENUMERATION_CAP,
};
use scalesynth_core::models;
use scalesynth_core::numeric::{ceil_mul, ratio, ratio_u64};
use scalesynth_core::solver::{
    solve_bruteforce, solve_dp, BottleneckPolicy, Objective, SolveRequest,
};

fn cap_request(
    network: scalesynth_core::ir::Network,
    fraction_num: u64,
    fraction_den: u64,
) -> SolveRequest {
    let phi = network.param_count().unwrap();
    let fraction = ratio_u64(fraction_num, fraction_den);
    SolveRequest::new(
        network,
        BudgetResult {
            phi_prime_floor: ceil_mul(phi, &fraction),
            gamma_ideal: ratio_u64(phi, 1000),
            fraction,
        },
        BottleneckPolicy::default(),
        Objective::CapMaximize,
    )
}

fn bench_solvers(c: &mut Criterion) {
    let alexnet = cap_request(models::alexnet(), 8, 100);
    c.bench_function("dp/alexnet-cap-0.08", |b| {
        b.iter(|| solve_dp(black_box(&alexnet)).unwrap())
    });
    c.bench_function("brute/alexnet-cap-0.08", |b| {
        b.iter(|| solve_bruteforce(black_box(&alexnet), DEFAULT_ENUMERATION_CAP).unwrap())
    });

    // 1.06e8 assignments: far beyond the brute-force cap, routine for the DP
    let googlenet = cap_request(models::googlenet(), 203, 800);
    c.bench_function("dp/googlenet-cap-0.25375", |b| {
        b.iter(|| solve_dp(black_box(&googlenet)).unwrap())
    });

    let mut window = cap_request(models::alexnet(), 8, 100);
    window.objective = Objective::Window {
        tolerance: ratio(2, 1000),
    };
    c.bench_function("dp/alexnet-window-0.002", |b| {
        b.iter(|| solve_dp(black_box(&window)).unwrap())
    });
}

fn bench_factorspace(c: &mut Criterion) {
    let alexnet = models::alexnet();
    c.bench_function("enumerate/alexnet-window-0.08", |b| {
        b.iter(|| {
            enumerate_window(
                black_box(&alexnet),
                &ratio(8, 100),
                &ratio(2, 1000),
                DEFAULT_ENUMERATION_CAP,
                None,
            )
            .unwrap()
        })
    });

    let googlenet = models::googlenet();
    c.bench_function("count/googlenet-non-affine", |b| {
        b.iter(|| count_solution_space(black_box(&googlenet), false))
    });
    c.bench_function("divisors/960", |b| b.iter(|| divisors(black_box(960))));
}

criterion_group!(benches, bench_solvers, bench_factorspace);
criterion_main!(benches);
