//! Load-balancing initialization: each vehicle gets a share of the free
//! targets proportional to its speed, chosen by a minimum-cost assignment
//! on depot-to-target travel times.

use std::f64::consts::TAU;

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Network, Point, Solution};
use crate::tour::{solve_tsp, TourMode, TourRequest};

/// Radius of the circle co-located vehicles are spread on, in grid units.
pub const COLOCATED_RADIUS: f64 = 0.1;

/// Free targets assigned to each vehicle (indexed by vehicle), ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub assign: Vec<Vec<usize>>,
}

impl Allocation {
    /// Owner of every free target, `None` for pinned targets.
    pub fn owners(&self, num_targets: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; num_targets];
        for (v, set) in self.assign.iter().enumerate() {
            for &t in set {
                out[t] = Some(v);
            }
        }
        out
    }
}

/// Minimum number of free targets each vehicle must receive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinCounts {
    pub lower: Vec<usize>,
}

/// Depot positions used only for the assignment costs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDepots {
    pub pos: Vec<Point>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationMethod {
    /// Exact transportation-problem solve.
    #[default]
    Transportation,
    /// Simplex on the LP relaxation, each target rounded to its largest fraction.
    LpRounding,
}

/// `max(0, floor(|T| * v_j / sum v) - |R_j|)` for every vehicle.
pub fn min_target_counts(inst: &Instance) -> MinCounts {
    let n = inst.num_targets() as f64;
    let total: f64 = inst.vehicles().iter().map(|v| v.speed).sum();
    let lower = inst
        .vehicles()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let share = (n * v.speed / total).floor() as usize;
            share.saturating_sub(inst.required(j).len())
        })
        .collect();
    MinCounts { lower }
}

/// Spreads every group of vehicles sharing a depot over a circle of radius
/// [`COLOCATED_RADIUS`]: the group's first vehicle at a random angle, the
/// others evenly spaced after it. Vehicles with a unique depot keep it.
pub fn perturb_colocated_depots<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> EffectiveDepots {
    perturb_colocated_depots_with(inst, || rng.gen_range(0.0..TAU))
}

/// As [`perturb_colocated_depots`], drawing each group's first angle from
/// `first_angle`. Groups are visited in order of their lowest vehicle index.
pub fn perturb_colocated_depots_with(
    inst: &Instance,
    mut first_angle: impl FnMut() -> f64,
) -> EffectiveDepots {
    let depots = inst.depots();
    let mut pos = depots.clone();
    let mut grouped = vec![false; depots.len()];
    for i in 0..depots.len() {
        if grouped[i] {
            continue;
        }
        let group: Vec<usize> = (i..depots.len())
            .filter(|&j| depots[j] == depots[i])
            .collect();
        if group.len() < 2 {
            continue;
        }
        let theta0 = first_angle();
        let m = group.len() as f64;
        for (slot, &v) in group.iter().enumerate() {
            grouped[v] = true;
            pos[v] = depots[i].offset_polar(COLOCATED_RADIUS, theta0 + TAU * slot as f64 / m);
        }
    }
    EffectiveDepots { pos }
}

/// Assignment cost matrix `cost[f][j]`: travel time from vehicle j's
/// effective depot to the f-th free target.
fn assignment_costs(inst: &Instance, eff: &EffectiveDepots, free: &[usize]) -> Vec<Vec<f64>> {
    free.iter()
        .map(|&t| {
            let p = inst.targets()[t];
            inst.vehicles()
                .iter()
                .zip(&eff.pos)
                .map(|(v, d)| d.distance(&p) / v.speed)
                .collect()
        })
        .collect()
}

fn check_counts(inst: &Instance, counts: &MinCounts, free: usize) -> Result<()> {
    if counts.lower.len() != inst.num_vehicles() {
        return Err(Error::InvalidInput(format!(
            "{} lower bounds for {} vehicles",
            counts.lower.len(),
            inst.num_vehicles()
        )));
    }
    let required: usize = counts.lower.iter().sum();
    if required > free {
        return Err(Error::Infeasible {
            required,
            available: free,
        });
    }
    Ok(())
}

/// Minimum-cost allocation of the free targets subject to every vehicle
/// receiving at least its lower bound.
pub fn solve_load_balancing(
    inst: &Instance,
    eff: &EffectiveDepots,
    counts: &MinCounts,
) -> Result<Allocation> {
    let free = inst.free_targets();
    check_counts(inst, counts, free.len())?;
    let cost = assignment_costs(inst, eff, &free);
    let k = inst.num_vehicles();
    let owner = transportation(&cost, &counts.lower);
    let mut assign = vec![Vec::new(); k];
    for (f, &j) in owner.iter().enumerate() {
        assign[j].push(free[f]);
    }
    Ok(Allocation { assign })
}

/// Solves the transportation problem as a square assignment. Every vehicle
/// j contributes `lower[j]` mandatory slots priced at `cost[f][j]`; the
/// remaining `F - sum(lower)` slots are shared and priced at a target's
/// cheapest vehicle. Any optimal assignment decodes to an optimal
/// allocation, with shared slots going to the cheapest vehicle (lowest index
/// on ties). Returns the vehicle of each free target.
fn transportation(cost: &[Vec<f64>], lower: &[usize]) -> Vec<usize> {
    let f = cost.len();
    if f == 0 {
        return Vec::new();
    }
    let cheapest: Vec<usize> = cost
        .iter()
        .map(|row| {
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] < row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let mut slot_vehicle: Vec<Option<usize>> = Vec::with_capacity(f);
    for (j, &l) in lower.iter().enumerate() {
        slot_vehicle.extend(std::iter::repeat_n(Some(j), l));
    }
    slot_vehicle.resize(f, None);
    let matrix: Vec<Vec<f64>> = (0..f)
        .map(|r| {
            slot_vehicle
                .iter()
                .map(|s| match s {
                    Some(j) => cost[r][*j],
                    None => cost[r][cheapest[r]],
                })
                .collect()
        })
        .collect();
    hungarian(&matrix)
        .into_iter()
        .enumerate()
        .map(|(r, col)| slot_vehicle[col].unwrap_or(cheapest[r]))
        .collect()
}

/// O(n^3) Hungarian method (shortest augmenting paths with potentials) for
/// a square cost matrix. Returns the column assigned to each row.
pub(crate) fn hungarian(a: &[Vec<f64>]) -> Vec<usize> {
    let n = a.len();
    // 1-based internals; column 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

/// Solves the LP relaxation with a simplex solver and assigns each free
/// target to the vehicle holding its largest fraction (lowest index on
/// ties). Kept for comparison with the exact solve.
pub fn solve_load_balancing_lp(
    inst: &Instance,
    eff: &EffectiveDepots,
    counts: &MinCounts,
) -> Result<Allocation> {
    let free = inst.free_targets();
    check_counts(inst, counts, free.len())?;
    let k = inst.num_vehicles();
    let mut assign = vec![Vec::new(); k];
    if free.is_empty() {
        return Ok(Allocation { assign });
    }
    let cost = assignment_costs(inst, eff, &free);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = cost
        .iter()
        .map(|row| row.iter().map(|&c| lp.add_var(c, (0.0, 1.0))).collect())
        .collect();
    for row in &vars {
        let mut e = LinearExpr::empty();
        for &x in row {
            e.add(x, 1.0);
        }
        lp.add_constraint(e, ComparisonOp::Eq, 1.0);
    }
    for (j, &l) in counts.lower.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let mut e = LinearExpr::empty();
        for row in &vars {
            e.add(row[j], 1.0);
        }
        lp.add_constraint(e, ComparisonOp::Ge, l as f64);
    }
    let sol = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
    for (f, row) in vars.iter().enumerate() {
        let mut best = 0;
        for j in 1..k {
            if *sol.var_value(row[j]) > *sol.var_value(row[best]) + 1e-9 {
                best = j;
            }
        }
        assign[best].push(free[f]);
    }
    Ok(Allocation { assign })
}

/// Tours over each vehicle's allocated and required targets, built from the
/// vehicles' true depots.
pub fn build_initial_solution(
    inst: &Instance,
    net: &Network,
    alloc: &Allocation,
    mode: TourMode,
) -> Result<Solution> {
    if alloc.assign.len() != inst.num_vehicles() {
        return Err(Error::InvalidInput(format!(
            "allocation covers {} vehicles, instance has {}",
            alloc.assign.len(),
            inst.num_vehicles()
        )));
    }
    let tours = alloc
        .assign
        .iter()
        .enumerate()
        .map(|(v, free)| {
            let mut targets = inst.required(v).to_vec();
            targets.extend_from_slice(free);
            solve_tsp(net, &TourRequest::new(v, &targets, mode))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Solution::from_tours(tours))
}

/// Sum of assignment costs of an allocation, measured from `eff`.
pub fn allocation_cost(inst: &Instance, eff: &EffectiveDepots, alloc: &Allocation) -> f64 {
    alloc
        .assign
        .iter()
        .enumerate()
        .flat_map(|(j, set)| {
            let v = inst.vehicles()[j];
            let d = eff.pos[j];
            set.iter().map(move |&t| (d, t, v.speed))
        })
        .map(|(d, t, s)| d.distance(&inst.targets()[t]) / s)
        .sum()
}
