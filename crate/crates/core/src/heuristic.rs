//! The three-stage heuristic: load-balancing initialization, local search on
//! the maximal tour, and depot perturbation to escape local minima.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alloc::{
    build_initial_solution, min_target_counts, perturb_colocated_depots, solve_load_balancing,
    solve_load_balancing_lp, AllocationMethod,
};
use crate::error::{Error, Result};
use crate::model::{Instance, Network, Point, Solution, Tour, Vertex};
use crate::tour::{solve_tsp_from, TourMode, TourRequest};

/// Relative margin by which a candidate must beat the incumbent objective.
const ACCEPT_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavingsEntry {
    pub target: usize,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsertionQuote {
    pub vehicle: usize,
    /// Insert between the vertices at positions `edge_position` and
    /// `edge_position + 1` of the receiving tour's full sequence.
    pub edge_position: usize,
    pub delta: f64,
}

/// How the perturbation radius is turned into a depot displacement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusMode {
    /// Use the average depot-edge travel time directly as a distance.
    #[default]
    Verbatim,
    /// Multiply it by the vehicle's speed, giving a distance.
    SpeedScaled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub seed: u64,
    pub tour_mode: TourMode,
    pub allocation: AllocationMethod,
    pub radius: RadiusMode,
    /// Consecutive non-improving perturbation rounds before stopping.
    pub patience: usize,
    /// Angle added to every depot's displacement direction each round.
    pub angle_step_deg: f64,
    /// Cap on accepted moves within a single local search.
    pub max_moves: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            tour_mode: TourMode::Heuristic,
            allocation: AllocationMethod::Transportation,
            radius: RadiusMode::Verbatim,
            patience: 5,
            angle_step_deg: 144.0,
            max_moves: 100_000,
        }
    }
}

/// Objective after each stage plus wall-clock time spent in it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub after_init: f64,
    pub after_local_search: f64,
    pub after_perturbation: f64,
    pub iterations: usize,
    pub accepted_perturbations: usize,
    pub init_secs: f64,
    pub local_search_secs: f64,
    pub perturbation_secs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Init,
    /// An accepted transfer during the main local search.
    LocalSearch,
    /// An accepted transfer inside a perturbation round. These solutions
    /// are timed on the displaced depots, not the true ones.
    Perturbed,
    /// A perturbation round's candidate rebuilt at the true depots.
    PerturbationCandidate,
    Final,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub init: Solution,
    pub local_search: Solution,
    pub best: Solution,
    pub trace: StageTrace,
}

/// Removable targets of `vehicle`'s tour ranked by descending savings, ties
/// by ascending target index. Required targets are never listed.
pub fn compute_savings(
    inst: &Instance,
    net: &Network,
    sol: &Solution,
    vehicle: usize,
) -> Vec<SavingsEntry> {
    let tour = &sol.tours[vehicle];
    let mut out: Vec<SavingsEntry> = tour
        .order
        .iter()
        .enumerate()
        .filter(|(_, &t)| inst.required_owner(t).is_none())
        .map(|(pos, &t)| {
            let (prev, next) = tour.neighbors(pos);
            let here = Vertex::Target(t);
            let value = net.time(vehicle, prev, here) + net.time(vehicle, here, next)
                - net.time(vehicle, prev, next);
            SavingsEntry { target: t, value }
        })
        .collect();
    out.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.target.cmp(&b.target)));
    out
}

/// Cheapest insertion of `target` into any tour except `exclude`'s, over
/// every edge including the depot-adjacent ones. Ties resolve to the lower
/// vehicle, then the lower edge position.
pub fn best_insertion(
    net: &Network,
    sol: &Solution,
    target: usize,
    exclude: usize,
) -> Result<InsertionQuote> {
    let here = Vertex::Target(target);
    let mut best: Option<InsertionQuote> = None;
    for (v, tour) in sol.tours.iter().enumerate() {
        if v == exclude {
            continue;
        }
        let seq = tour.sequence();
        for (l, w) in seq.windows(2).enumerate() {
            let delta = net.time(v, w[0], here) + net.time(v, here, w[1]) - net.time(v, w[0], w[1]);
            if best.is_none_or(|b| delta < b.delta) {
                best = Some(InsertionQuote {
                    vehicle: v,
                    edge_position: l,
                    delta,
                });
            }
        }
    }
    best.ok_or(Error::NoCandidate { target })
}

fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent - ACCEPT_RTOL * incumbent.abs()
}

/// Repeatedly moves a target off the maximal tour onto the vehicle with the
/// cheapest insertion, re-solving both tours, and keeps the move when the
/// overall objective drops. Candidates are tried in descending savings
/// order; the search stops once none of them helps.
pub fn local_search(
    inst: &Instance,
    net: &Network,
    sol: Solution,
    cfg: &SolverConfig,
) -> Result<Solution> {
    local_search_observed(inst, net, sol, cfg, Stage::LocalSearch, &mut |_, _| {})
}

fn local_search_observed(
    inst: &Instance,
    net: &Network,
    mut sol: Solution,
    cfg: &SolverConfig,
    stage: Stage,
    observe: &mut dyn FnMut(Stage, &Solution),
) -> Result<Solution> {
    if inst.num_vehicles() < 2 {
        return Ok(sol);
    }
    for _ in 0..cfg.max_moves {
        let donor = sol.maximal_vehicle();
        let mut moved = false;
        for entry in compute_savings(inst, net, &sol, donor) {
            let quote = best_insertion(net, &sol, entry.target, donor)?;
            let candidate = transfer(net, &sol, donor, entry.target, &quote, cfg.tour_mode)?;
            if improves(candidate.objective, sol.objective) {
                sol = candidate;
                observe(stage, &sol);
                moved = true;
                break;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(sol)
}

/// `sol` with `target` moved from `donor` to the quoted vehicle and both
/// tours re-solved.
fn transfer(
    net: &Network,
    sol: &Solution,
    donor: usize,
    target: usize,
    quote: &InsertionQuote,
    mode: TourMode,
) -> Result<Solution> {
    let donor_hint: Vec<usize> = sol.tours[donor]
        .order
        .iter()
        .copied()
        .filter(|&t| t != target)
        .collect();
    let mut receiver_hint = sol.tours[quote.vehicle].order.clone();
    receiver_hint.insert(quote.edge_position, target);

    let mut out = sol.clone();
    let donor_targets = donor_hint.clone();
    out.replace_tour(solve_tsp_from(
        net,
        &TourRequest::new(donor, &donor_targets, mode),
        &donor_hint,
    )?);
    let receiver_targets = receiver_hint.clone();
    out.replace_tour(solve_tsp_from(
        net,
        &TourRequest::new(quote.vehicle, &receiver_targets, mode),
        &receiver_hint,
    )?);
    Ok(out)
}

/// Average travel time from vehicle `j`'s depot to the two targets adjacent
/// to it in its tour; zero for a depot-only tour.
pub fn perturbation_radius(inst: &Instance, sol: &Solution, j: usize) -> f64 {
    let tour = &sol.tours[j];
    let (Some(&first), Some(&last)) = (tour.order.first(), tour.order.last()) else {
        return 0.0;
    };
    let v = &inst.vehicles()[j];
    let d = v.depot;
    0.5 * (d.distance(&inst.targets()[first]) + d.distance(&inst.targets()[last])) / v.speed
}

/// Displacement direction of a depot in round `iteration` (0-based):
/// `base + iteration * step` degrees, reduced modulo a full turn.
pub fn perturbation_angle(base: f64, iteration: usize, step_deg: f64) -> f64 {
    let turn = (iteration as f64 * step_deg).rem_euclid(360.0);
    (base + turn.to_radians()).rem_euclid(TAU)
}

/// Result of the perturbation stage.
#[derive(Clone, Debug)]
pub struct PerturbationResult {
    pub best: Solution,
    pub iterations: usize,
    pub accepted: usize,
}

/// Perturbation rounds until `cfg.patience` consecutive rounds fail to
/// improve. Each round displaces every depot by its radius at the scheduled
/// angle, rebuilds the incumbent allocation's tours there, runs local
/// search on the displaced graph, and rebuilds the resulting allocation at
/// the true depots. The per-vehicle base angles are drawn from `rng` in
/// vehicle order.
pub fn perturbation_loop<R: Rng + ?Sized>(
    inst: &Instance,
    sol: Solution,
    rng: &mut R,
    cfg: &SolverConfig,
) -> Result<PerturbationResult> {
    perturbation_observed(inst, sol, rng, cfg, &mut |_, _| {})
}

fn perturbation_observed<R: Rng + ?Sized>(
    inst: &Instance,
    sol: Solution,
    rng: &mut R,
    cfg: &SolverConfig,
    observe: &mut dyn FnMut(Stage, &Solution),
) -> Result<PerturbationResult> {
    let k = inst.num_vehicles();
    let true_net = Network::new(inst);
    let base: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..TAU)).collect();
    let mut best = sol;
    let mut streak = 0;
    let mut iterations = 0;
    let mut accepted = 0;
    while streak < cfg.patience {
        let depots: Vec<Point> = (0..k)
            .map(|j| {
                let v = &inst.vehicles()[j];
                let mut r = perturbation_radius(inst, &best, j);
                if cfg.radius == RadiusMode::SpeedScaled {
                    r *= v.speed;
                }
                if r == 0.0 {
                    v.depot
                } else {
                    v.depot.offset_polar(
                        r,
                        perturbation_angle(base[j], iterations, cfg.angle_step_deg),
                    )
                }
            })
            .collect();
        let moved = Network::with_depots(inst, &depots)?;
        let displaced = rebuild(&moved, &best, cfg.tour_mode)?;
        let searched =
            local_search_observed(inst, &moved, displaced, cfg, Stage::Perturbed, observe)?;
        let candidate = rebuild(&true_net, &searched, cfg.tour_mode)?;
        observe(Stage::PerturbationCandidate, &candidate);
        iterations += 1;
        if improves(candidate.objective, best.objective) {
            best = candidate;
            accepted += 1;
            streak = 0;
        } else {
            streak += 1;
        }
    }
    Ok(PerturbationResult {
        best,
        iterations,
        accepted,
    })
}

/// Same allocation as `sol`, with every tour re-solved on `net`.
fn rebuild(net: &Network, sol: &Solution, mode: TourMode) -> Result<Solution> {
    let tours = sol
        .tours
        .iter()
        .map(|t| {
            if t.is_depot_only() {
                return Ok(Tour::depot_only(t.vehicle));
            }
            solve_tsp_from(net, &TourRequest::new(t.vehicle, &t.order, mode), &t.order)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Solution::from_tours(tours))
}

/// Runs all three stages.
pub fn solve(inst: &Instance, cfg: &SolverConfig) -> Result<SolveOutcome> {
    solve_observed(inst, cfg, &mut |_, _| {})
}

/// As [`solve`], reporting every accepted or candidate solution to `observe`.
pub fn solve_observed(
    inst: &Instance,
    cfg: &SolverConfig,
    observe: &mut dyn FnMut(Stage, &Solution),
) -> Result<SolveOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = Network::new(inst);

    let clock = Instant::now();
    let counts = min_target_counts(inst);
    let eff = perturb_colocated_depots(inst, &mut rng);
    let alloc = match cfg.allocation {
        AllocationMethod::Transportation => solve_load_balancing(inst, &eff, &counts)?,
        AllocationMethod::LpRounding => solve_load_balancing_lp(inst, &eff, &counts)?,
    };
    let init = build_initial_solution(inst, &net, &alloc, cfg.tour_mode)?;
    let init_secs = clock.elapsed().as_secs_f64();
    observe(Stage::Init, &init);

    if inst.num_vehicles() == 1 {
        observe(Stage::Final, &init);
        return Ok(SolveOutcome {
            trace: StageTrace {
                after_init: init.objective,
                after_local_search: init.objective,
                after_perturbation: init.objective,
                iterations: 0,
                accepted_perturbations: 0,
                init_secs,
                local_search_secs: 0.0,
                perturbation_secs: 0.0,
            },
            local_search: init.clone(),
            best: init.clone(),
            init,
        });
    }

    let clock = Instant::now();
    let searched =
        local_search_observed(inst, &net, init.clone(), cfg, Stage::LocalSearch, observe)?;
    let local_search_secs = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let perturbed = perturbation_observed(inst, searched.clone(), &mut rng, cfg, observe)?;
    let perturbation_secs = clock.elapsed().as_secs_f64();
    observe(Stage::Final, &perturbed.best);

    Ok(SolveOutcome {
        trace: StageTrace {
            after_init: init.objective,
            after_local_search: searched.objective,
            after_perturbation: perturbed.best.objective,
            iterations: perturbed.iterations,
            accepted_perturbations: perturbed.accepted,
            init_secs,
            local_search_secs,
            perturbation_secs,
        },
        init,
        local_search: searched,
        best: perturbed.best,
    })
}
