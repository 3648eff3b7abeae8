//! Solvers for the min-max heterogeneous multi-vehicle multi-depot TSP.
//!
//! Vehicles with individual speeds start from given depots; some targets
//! are pinned to particular vehicles and the rest may go to any of them.
//! The goal is to cover every target while minimizing the longest tour
//! time. The crate provides
//!
//! * a three-stage heuristic ([`heuristic::solve`]): speed-proportional
//!   load balancing, local search on the maximal tour, and depot
//!   perturbation;
//! * an exact partition-enumeration oracle for small instances
//!   ([`oracle::exact_minmax`]);
//! * the instance generator, benchmark runner and reporting used by the
//!   `mmtsp` command-line tool.

pub mod alloc;
pub mod error;
pub mod experiment;
pub mod heuristic;
pub mod model;
pub mod oracle;
pub mod render;
pub mod report;
pub mod tour;

pub use alloc::{Allocation, AllocationMethod, EffectiveDepots, MinCounts};
pub use error::{Error, Result};
pub use experiment::{generate_instance, run_experiment, DepotMode, ExperimentConfig};
pub use heuristic::{solve, RadiusMode, SolveOutcome, SolverConfig, StageTrace};
pub use model::{
    travel_time, validate_solution, Instance, Network, Point, Solution, Tour, Vehicle, Vertex,
    Violation,
};
pub use oracle::{exact_minmax, oracle_feasible, OracleBudget};
pub use report::{ExperimentReport, InstanceRow};
pub use tour::{solve_tsp, TourMode, TourRequest};
