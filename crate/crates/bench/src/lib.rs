//! Benchmark workloads shared by the criterion targets.

use std::hint::black_box;

use criterion::Criterion;
use mmtsp::{
    generate_instance, solve, solve_tsp, ExperimentConfig, Instance, Network, SolverConfig,
    TourMode, TourRequest,
};

/// A seeded scenario-1 instance with `n` targets.
pub fn instance(n: usize, seed: u64) -> Instance {
    let cfg = ExperimentConfig {
        n_targets: n,
        seed,
        ..ExperimentConfig::scenario1()
    };
    generate_instance(&cfg, 0).expect("scenario config is valid")
}

pub fn benchmarks(c: &mut Criterion) {
    let small = instance(12, 1);
    let net = Network::new(&small);
    let all: Vec<usize> = (0..small.num_targets()).collect();
    for (name, mode) in [
        ("tour/held_karp_12", TourMode::Exact),
        ("tour/heuristic_12", TourMode::Heuristic),
    ] {
        let req = TourRequest::new(0, &all, mode);
        c.bench_function(name, |b| {
            b.iter(|| solve_tsp(black_box(&net), black_box(&req)).unwrap())
        });
    }

    let large = instance(30, 2);
    let cfg = SolverConfig::default();
    c.bench_function("solve/n30_heuristic", |b| {
        b.iter(|| solve(black_box(&large), &cfg).unwrap())
    });
}
