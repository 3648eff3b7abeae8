//! Random instance generation and the benchmark runner that compares the
//! heuristic's stages against the exact oracle.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristic::{solve_observed, SolverConfig, Stage};
use crate::model::{validate_solution, Instance, Point, Vehicle, Violation};
use crate::oracle::{exact_minmax, OracleBudget};
use crate::report::{ExperimentReport, InstanceRow};
use crate::tour::TourMode;

pub const DEFAULT_GRID: f64 = 200.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DepotMode {
    /// Every vehicle gets its own random depot.
    Distinct,
    /// Each listed group of vehicles shares one random depot.
    Colocated(Vec<Vec<usize>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_targets: usize,
    pub speeds: Vec<f64>,
    pub depot_mode: DepotMode,
    /// Fraction of targets pinned to a random vehicle.
    pub assign_fraction: f64,
    pub n_instances: usize,
    pub seed: u64,
    /// Side of the square the coordinates are drawn from.
    pub grid: f64,
    pub oracle: bool,
    pub solver: SolverConfig,
    pub budget: OracleBudget,
}

impl ExperimentConfig {
    /// Three vehicles with speeds 1, 1.5 and 2 at distinct depots.
    pub fn scenario1() -> Self {
        ExperimentConfig {
            n_targets: 10,
            speeds: vec![1.0, 1.5, 2.0],
            depot_mode: DepotMode::Distinct,
            assign_fraction: 0.0,
            n_instances: 20,
            seed: 0,
            grid: DEFAULT_GRID,
            oracle: true,
            solver: SolverConfig {
                tour_mode: TourMode::Exact,
                ..SolverConfig::default()
            },
            budget: OracleBudget::default(),
        }
    }

    /// Speeds 1, 1 and 2; the two slow vehicles share a depot.
    pub fn scenario2() -> Self {
        ExperimentConfig {
            speeds: vec![1.0, 1.0, 2.0],
            depot_mode: DepotMode::Colocated(vec![vec![0, 1]]),
            ..Self::scenario1()
        }
    }

    pub fn scenario(number: u32) -> Result<Self> {
        match number {
            1 => Ok(Self::scenario1()),
            2 => Ok(Self::scenario2()),
            n => Err(Error::InvalidInput(format!(
                "unknown scenario {n} (expected 1 or 2)"
            ))),
        }
    }

    pub fn num_vehicles(&self) -> usize {
        self.speeds.len()
    }

    /// Number of pinned targets per instance: `floor(fraction * n)`.
    pub fn assigned_count(&self) -> usize {
        // The epsilon keeps e.g. 0.29 * 100 from flooring to 28.
        ((self.assign_fraction * self.n_targets as f64) + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.n_targets == 0 {
            return bad("n_targets must be at least 1".into());
        }
        if self.speeds.is_empty() {
            return bad("at least one vehicle speed is required".into());
        }
        if let Some(s) = self.speeds.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return bad(format!("speeds must be positive and finite, got {s}"));
        }
        if !(0.0..=1.0).contains(&self.assign_fraction) {
            return bad(format!(
                "assign fraction must lie in [0, 1], got {}",
                self.assign_fraction
            ));
        }
        if !(self.grid > 0.0 && self.grid.is_finite()) {
            return bad(format!("grid side must be positive, got {}", self.grid));
        }
        if let DepotMode::Colocated(groups) = &self.depot_mode {
            let mut seen = vec![false; self.speeds.len()];
            for &v in groups.iter().flatten() {
                match seen.get_mut(v) {
                    None => return bad(format!("co-located group names unknown vehicle {v}")),
                    Some(true) => {
                        return bad(format!("vehicle {v} appears in two co-located groups"))
                    }
                    Some(s) => *s = true,
                }
            }
        }
        Ok(())
    }
}

/// ChaCha8 keyed by the experiment seed. Instance `i` is generated from
/// stream `2i`; stream `2i + 1` seeds its heuristic run.
fn substream(cfg: &ExperimentConfig, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    rng
}

/// Seed for the heuristic on instance `index`.
pub fn solver_seed(cfg: &ExperimentConfig, index: usize) -> u64 {
    substream(cfg, 2 * index as u64 + 1).next_u64()
}

/// Instance `index` of an experiment: targets and depots uniform on the
/// grid, then `assigned_count()` distinct targets each pinned to a uniformly
/// chosen vehicle. A pure function of `(cfg, index)`.
pub fn generate_instance(cfg: &ExperimentConfig, index: usize) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = substream(cfg, 2 * index as u64);
    let g = cfg.grid;
    let draw = |rng: &mut ChaCha8Rng| Point::new(rng.gen_range(0.0..=g), rng.gen_range(0.0..=g));
    let targets: Vec<Point> = (0..cfg.n_targets).map(|_| draw(&mut rng)).collect();
    let mut depots: Vec<Point> = (0..cfg.num_vehicles()).map(|_| draw(&mut rng)).collect();
    if let DepotMode::Colocated(groups) = &cfg.depot_mode {
        for group in groups {
            if let Some(&lead) = group.first() {
                for &v in group {
                    depots[v] = depots[lead];
                }
            }
        }
    }
    let k = cfg.num_vehicles();
    let mut required = vec![Vec::new(); k];
    for t in rand::seq::index::sample(&mut rng, cfg.n_targets, cfg.assigned_count()).into_vec() {
        required[rng.gen_range(0..k)].push(t);
    }
    let vehicles = cfg
        .speeds
        .iter()
        .zip(depots)
        .map(|(&s, d)| Vehicle::new(s, d))
        .collect();
    Instance::new(targets, vehicles, required)
}

fn round_ms(secs: f64) -> f64 {
    (secs * 1000.0).round() / 1000.0
}

/// Checks a solution emitted during a solve. Solutions timed on displaced
/// depots are only checked for coverage and pinning.
fn stage_violations(inst: &Instance, stage: Stage, sol: &crate::model::Solution) -> Vec<Violation> {
    let mut v = validate_solution(inst, sol);
    if stage == Stage::Perturbed {
        v.retain(|x| {
            !matches!(
                x,
                Violation::DurationMismatch { .. } | Violation::ObjectiveMismatch { .. }
            )
        });
    }
    v
}

/// Solves one instance and, when enabled and within budget, its exact optimum.
pub fn run_instance(cfg: &ExperimentConfig, index: usize) -> Result<InstanceRow> {
    let inst = generate_instance(cfg, index)?;
    let solver = SolverConfig {
        seed: solver_seed(cfg, index),
        ..cfg.solver.clone()
    };
    let mut problems: Vec<String> = Vec::new();
    let clock = Instant::now();
    let outcome = solve_observed(&inst, &solver, &mut |stage, sol| {
        for v in stage_violations(&inst, stage, sol) {
            problems.push(format!("{stage:?}: {v}"));
        }
    })?;
    let t_heuristic = round_ms(clock.elapsed().as_secs_f64());
    if !problems.is_empty() {
        return Err(Error::InvariantViolation(format!(
            "instance {index}: {}",
            problems.join("; ")
        )));
    }

    let mut oracle_obj = None;
    let mut t_oracle = None;
    if cfg.oracle {
        let clock = Instant::now();
        match exact_minmax(&inst, &cfg.budget) {
            Ok(opt) => {
                let bad = validate_solution(&inst, &opt);
                if !bad.is_empty() {
                    return Err(Error::InvariantViolation(format!(
                        "instance {index}: oracle solution invalid: {}",
                        bad[0]
                    )));
                }
                oracle_obj = Some(opt.objective);
                t_oracle = Some(round_ms(clock.elapsed().as_secs_f64()));
            }
            Err(Error::OracleUnavailable(_)) => {}
            Err(e) => return Err(e),
        }
    }

    let t = &outcome.trace;
    Ok(InstanceRow::new(
        index,
        [t.after_init, t.after_local_search, t.after_perturbation],
        oracle_obj,
        t_heuristic,
        t_oracle,
    ))
}

/// Runs every instance of the experiment (in parallel) and collects the rows
/// in instance order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let rows = (0..cfg.n_instances)
        .into_par_iter()
        .map(|i| run_instance(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { rows })
}
