use mmtsp::alloc::{
    allocation_cost, build_initial_solution, min_target_counts, perturb_colocated_depots,
    perturb_colocated_depots_with, solve_load_balancing,
};
use mmtsp::heuristic::{local_search, perturbation_loop};
use mmtsp::{
    exact_minmax, solve, validate_solution, Instance, Network, OracleBudget, Point, RadiusMode,
    Solution, SolverConfig, Tour, TourMode, Vehicle,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn exact_cfg() -> SolverConfig {
    SolverConfig {
        tour_mode: TourMode::Exact,
        ..SolverConfig::default()
    }
}

#[test]
fn colocated_pair_splits_the_targets() {
    let inst = Instance::new(
        vec![p(5.0, 1.0), p(5.0, -1.0), p(-5.0, 1.0), p(-5.0, -1.0)],
        vec![
            Vehicle::new(1.0, p(0.0, 0.0)),
            Vehicle::new(1.0, p(0.0, 0.0)),
        ],
        vec![vec![], vec![]],
    )
    .unwrap();
    let net = Network::new(&inst);
    let lopsided = Solution::from_tours(vec![
        Tour::timed(&net, 0, vec![0, 1, 3, 2]),
        Tour::depot_only(1),
    ]);
    let cfg = exact_cfg();
    let improved = local_search(&inst, &net, lopsided.clone(), &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let best = perturbation_loop(&inst, improved, &mut rng, &cfg)
        .unwrap()
        .best;
    let opt = exact_minmax(&inst, &OracleBudget::default()).unwrap();
    assert!(
        close(best.objective, opt.objective),
        "{} vs {}",
        best.objective,
        opt.objective
    );
    assert!(best.objective < lopsided.objective);
    assert!(validate_solution(&inst, &best).is_empty());
}

#[test]
fn initial_tours_start_at_true_depots() {
    let inst = Instance::new(
        vec![
            p(3.0, 0.0),
            p(-3.0, 0.0),
            p(0.0, 4.0),
            p(0.0, -4.0),
            p(2.0, 2.0),
        ],
        vec![
            Vehicle::new(1.0, p(0.0, 0.0)),
            Vehicle::new(2.0, p(0.0, 0.0)),
        ],
        vec![vec![], vec![]],
    )
    .unwrap();
    let eff = perturb_colocated_depots_with(&inst, || 0.0);
    assert_ne!(eff.pos[0], eff.pos[1]);
    let alloc = solve_load_balancing(&inst, &eff, &min_target_counts(&inst)).unwrap();
    let net = Network::new(&inst);
    let sol = build_initial_solution(&inst, &net, &alloc, TourMode::Exact).unwrap();
    // validation recomputes durations from the true depots
    assert!(validate_solution(&inst, &sol).is_empty());
}

fn three_vehicle_instance() -> Instance {
    Instance::new(
        vec![
            p(12.0, 3.0),
            p(40.0, 41.0),
            p(77.0, 8.0),
            p(60.0, 90.0),
            p(5.0, 70.0),
            p(33.0, 15.0),
            p(91.0, 55.0),
            p(48.0, 62.0),
            p(20.0, 36.0),
        ],
        vec![
            Vehicle::new(1.0, p(0.0, 0.0)),
            Vehicle::new(1.5, p(100.0, 0.0)),
            Vehicle::new(2.0, p(50.0, 100.0)),
        ],
        vec![vec![4], vec![], vec![2]],
    )
    .unwrap()
}

#[test]
fn allocation_cost_ignores_vehicle_labels() {
    let inst = three_vehicle_instance();
    let perm = [2usize, 0, 1];
    let vehicles = perm.iter().map(|&v| inst.vehicles()[v]).collect();
    let required = perm.iter().map(|&v| inst.required(v).to_vec()).collect();
    let relabeled = Instance::new(inst.targets().to_vec(), vehicles, required).unwrap();
    let cost = |i: &Instance| {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let eff = perturb_colocated_depots(i, &mut rng);
        let alloc = solve_load_balancing(i, &eff, &min_target_counts(i)).unwrap();
        allocation_cost(i, &eff, &alloc)
    };
    assert!(close(cost(&inst), cost(&relabeled)));
}

#[test]
fn doubling_speeds_halves_every_stage() {
    let inst = three_vehicle_instance();
    let fast = inst.with_scaled_speeds(2.0).unwrap();
    let cfg = SolverConfig {
        radius: RadiusMode::SpeedScaled,
        ..exact_cfg()
    };
    let a = solve(&inst, &cfg).unwrap().trace;
    let b = solve(&fast, &cfg).unwrap().trace;
    assert!(close(a.after_init, 2.0 * b.after_init));
    assert!(close(a.after_local_search, 2.0 * b.after_local_search));
    assert!(close(a.after_perturbation, 2.0 * b.after_perturbation));
    assert_eq!(a.iterations, b.iterations);
}

#[test]
fn verbatim_radius_keeps_first_two_stages_scale_free() {
    // the displacement is a time, so only the stages before it scale exactly
    let inst = three_vehicle_instance();
    let fast = inst.with_scaled_speeds(2.0).unwrap();
    let a = solve(&inst, &exact_cfg()).unwrap().trace;
    let b = solve(&fast, &exact_cfg()).unwrap().trace;
    assert!(close(a.after_init, 2.0 * b.after_init));
    assert!(close(a.after_local_search, 2.0 * b.after_local_search));
}

#[test]
fn single_vehicle_is_one_optimal_tour() {
    let inst = Instance::new(
        vec![p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0), p(0.5, 0.5)],
        vec![Vehicle::new(1.0, p(0.0, 0.0))],
        vec![vec![]],
    )
    .unwrap();
    let out = solve(&inst, &exact_cfg()).unwrap();
    let opt = exact_minmax(&inst, &OracleBudget::default()).unwrap();
    assert!(close(out.best.objective, opt.objective));
    assert_eq!(out.trace.iterations, 0);
    assert_eq!(out.best.tours[0].order.len(), 4);
}

#[test]
fn instance_json_round_trips_through_disk() {
    let inst = three_vehicle_instance();
    let path = std::env::temp_dir().join(format!("mmtsp-pipeline-{}.json", std::process::id()));
    inst.save(&path).unwrap();
    let back = Instance::load(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(inst, back);
}

fn small_instance() -> impl Strategy<Value = Instance> {
    let coord = || (0.0..100.0f64, 0.0..100.0f64).prop_map(|(x, y)| Point::new(x, y));
    (
        prop::collection::vec(coord(), 2..=7),
        prop::collection::vec((prop::sample::select(vec![1.0, 1.5, 2.0]), coord()), 1..=3),
        any::<bool>(),
        any::<u64>(),
    )
        .prop_map(|(targets, vs, share, pin)| {
            let mut vehicles: Vec<Vehicle> =
                vs.into_iter().map(|(s, d)| Vehicle::new(s, d)).collect();
            if share && vehicles.len() > 1 {
                vehicles[1].depot = vehicles[0].depot;
            }
            let k = vehicles.len();
            let mut required = vec![Vec::new(); k];
            required[(pin as usize) % k].push((pin as usize / k) % targets.len());
            Instance::new(targets, vehicles, required).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn heuristic_is_feasible_monotone_and_above_optimum(inst in small_instance(), seed in 0u64..1000) {
        let cfg = SolverConfig { seed, ..exact_cfg() };
        let out = solve(&inst, &cfg).unwrap();
        prop_assert!(validate_solution(&inst, &out.best).is_empty());
        prop_assert!(out.trace.after_init >= out.trace.after_local_search);
        prop_assert!(out.trace.after_local_search >= out.trace.after_perturbation);
        let opt = exact_minmax(&inst, &OracleBudget::default()).unwrap();
        prop_assert!(opt.objective <= out.best.objective * (1.0 + 1e-9));
    }

    #[test]
    fn solving_is_reproducible(inst in small_instance(), seed in 0u64..1000) {
        let cfg = SolverConfig { seed, ..SolverConfig::default() };
        let a = solve(&inst, &cfg).unwrap();
        let b = solve(&inst, &cfg).unwrap();
        prop_assert_eq!(a.best, b.best);
    }
}
