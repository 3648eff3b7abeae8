//! Exact min-max solver for small instances: every assignment of free
//! targets to vehicles is enumerated, each vehicle's target set is solved
//! with Held–Karp (memoized per vehicle and subset), and partial
//! assignments are pruned against the incumbent.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Network, Solution, Tour};
use crate::tour::{held_karp_capped, EXACT_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_partitions: u64,
    pub max_subset_size: usize,
    /// Skip branches whose partial tours already exceed the incumbent.
    pub prune: bool,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_partitions: 2_000_000,
            max_subset_size: EXACT_CAP,
            prune: true,
        }
    }
}

/// Whether [`exact_minmax`] will accept `inst` under `budget`.
pub fn oracle_feasible(inst: &Instance, budget: &OracleBudget) -> bool {
    check_budget(inst, budget).is_ok()
}

fn check_budget(inst: &Instance, budget: &OracleBudget) -> Result<()> {
    let k = inst.num_vehicles() as u64;
    let free = inst.free_targets().len();
    let partitions = u32::try_from(free)
        .ok()
        .and_then(|f| k.checked_pow(f))
        .filter(|&p| p <= budget.max_partitions);
    if partitions.is_none() {
        return Err(Error::OracleUnavailable(format!(
            "{k}^{free} partitions exceed the budget of {}",
            budget.max_partitions
        )));
    }
    let largest_required = (0..inst.num_vehicles())
        .map(|v| inst.required(v).len())
        .max()
        .unwrap_or(0);
    let worst = free + largest_required;
    if worst > budget.max_subset_size {
        return Err(Error::OracleUnavailable(format!(
            "a vehicle could be asked to visit {worst} targets, exact tours are limited to {}",
            budget.max_subset_size
        )));
    }
    Ok(())
}

struct Search<'a> {
    inst: &'a Instance,
    net: Network,
    free: Vec<usize>,
    cap: usize,
    prune: bool,
    /// Per vehicle: free-subset bitmask -> optimal tour duration.
    memo: Vec<HashMap<u64, f64>>,
    masks: Vec<u64>,
    best: f64,
    best_masks: Vec<u64>,
}

impl Search<'_> {
    fn targets(&self, vehicle: usize, mask: u64) -> Vec<usize> {
        let mut ts = self.inst.required(vehicle).to_vec();
        ts.extend(
            self.free
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &t)| t),
        );
        ts
    }

    fn duration(&mut self, vehicle: usize, mask: u64) -> Result<f64> {
        if let Some(&d) = self.memo[vehicle].get(&mask) {
            return Ok(d);
        }
        let ts = self.targets(vehicle, mask);
        let m = self.net.matrix(vehicle);
        let d = m.cycle_time(&held_karp_capped(m, &ts, self.cap)?);
        self.memo[vehicle].insert(mask, d);
        Ok(d)
    }

    /// Assigns free targets `idx..` in vehicle order (a mixed-radix count
    /// with the earliest target as the most significant digit).
    fn descend(&mut self, idx: usize, partial_max: f64) -> Result<()> {
        if idx == self.free.len() {
            if partial_max < self.best {
                self.best = partial_max;
                self.best_masks = self.masks.clone();
            }
            return Ok(());
        }
        for v in 0..self.inst.num_vehicles() {
            self.masks[v] |= 1 << idx;
            let mask = self.masks[v];
            // Adding targets never shortens an optimal tour under the
            // triangle inequality, so a partial duration is a lower bound.
            let bound = if self.prune {
                partial_max.max(self.duration(v, mask)?)
            } else {
                partial_max
            };
            if !(self.prune && bound > self.best) {
                self.descend(idx + 1, bound)?;
            }
            self.masks[v] &= !(1 << idx);
        }
        Ok(())
    }
}

/// Provably optimal min-max solution of a small instance.
pub fn exact_minmax(inst: &Instance, budget: &OracleBudget) -> Result<Solution> {
    check_budget(inst, budget)?;
    let k = inst.num_vehicles();
    let mut search = Search {
        inst,
        net: Network::new(inst),
        free: inst.free_targets(),
        cap: budget.max_subset_size,
        prune: budget.prune,
        memo: vec![HashMap::new(); k],
        masks: vec![0; k],
        best: f64::INFINITY,
        best_masks: Vec::new(),
    };
    let mut base = 0.0f64;
    for v in 0..k {
        base = base.max(search.duration(v, 0)?);
    }
    if search.prune {
        search.descend(0, base)?;
    } else {
        search.descend_exhaustive(0)?;
    }
    let tours = (0..k)
        .map(|v| {
            let ts = search.targets(v, search.best_masks[v]);
            let m = search.net.matrix(v);
            let order = held_karp_capped(m, &ts, search.cap)?;
            Ok(Tour::timed(&search.net, v, order))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Solution::from_tours(tours))
}

impl Search<'_> {
    /// Evaluates every complete partition with no bounding.
    fn descend_exhaustive(&mut self, idx: usize) -> Result<()> {
        if idx == self.free.len() {
            let mut worst = 0.0f64;
            for v in 0..self.inst.num_vehicles() {
                worst = worst.max(self.duration(v, self.masks[v])?);
            }
            if worst < self.best {
                self.best = worst;
                self.best_masks = self.masks.clone();
            }
            return Ok(());
        }
        for v in 0..self.inst.num_vehicles() {
            self.masks[v] |= 1 << idx;
            self.descend_exhaustive(idx + 1)?;
            self.masks[v] &= !(1 << idx);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_solution, Point, Vehicle};
    use crate::tour::held_karp;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn inst_with(k: usize, free: usize) -> Instance {
        Instance::new(
            (0..free).map(|i| p(i as f64, 1.0)).collect(),
            (0..k)
                .map(|i| Vehicle::new(1.0 + i as f64, p(0.0, 0.0)))
                .collect(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn feasibility_arithmetic() {
        let b = OracleBudget::default();
        assert!(oracle_feasible(&inst_with(3, 10), &b));
        assert!(!oracle_feasible(&inst_with(3, 30), &b));
        assert!(oracle_feasible(&inst_with(1, 16), &b));
        assert!(!oracle_feasible(&inst_with(1, 17), &b));
    }

    #[test]
    fn refuses_over_budget() {
        let err = exact_minmax(&inst_with(3, 30), &OracleBudget::default()).unwrap_err();
        assert!(matches!(err, Error::OracleUnavailable(_)));
    }

    #[test]
    fn single_vehicle_equals_held_karp() {
        let inst = Instance::new(
            vec![p(3.0, 1.0), p(-2.0, 5.0), p(4.0, 4.0), p(0.0, -3.0)],
            vec![Vehicle::new(1.5, p(0.0, 0.0))],
            vec![vec![2]],
        )
        .unwrap();
        let sol = exact_minmax(&inst, &OracleBudget::default()).unwrap();
        let net = Network::new(&inst);
        let m = net.matrix(0);
        let hk = m.cycle_time(&held_karp(m, &[0, 1, 2, 3]).unwrap());
        assert!((sol.objective - hk).abs() < 1e-12);
        assert!(validate_solution(&inst, &sol).is_empty());
    }

    #[test]
    fn two_depots_split_targets() {
        let inst = Instance::new(
            vec![p(1.0, 0.0), p(9.0, 0.0)],
            vec![
                Vehicle::new(1.0, p(0.0, 0.0)),
                Vehicle::new(1.0, p(10.0, 0.0)),
            ],
            vec![],
        )
        .unwrap();
        let sol = exact_minmax(&inst, &OracleBudget::default()).unwrap();
        assert_eq!(sol.objective, 2.0);
        assert_eq!(sol.allocation(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn pruning_does_not_change_the_optimum() {
        let inst = Instance::new(
            vec![
                p(3.0, 1.0),
                p(-2.0, 5.0),
                p(4.0, 4.0),
                p(0.0, -3.0),
                p(7.0, 2.0),
                p(-5.0, -5.0),
                p(1.0, 8.0),
            ],
            vec![
                Vehicle::new(1.0, p(0.0, 0.0)),
                Vehicle::new(2.0, p(6.0, 0.0)),
                Vehicle::new(1.5, p(0.0, 6.0)),
            ],
            vec![vec![], vec![5]],
        )
        .unwrap();
        let a = exact_minmax(&inst, &OracleBudget::default()).unwrap();
        let b = exact_minmax(
            &inst,
            &OracleBudget {
                prune: false,
                ..OracleBudget::default()
            },
        )
        .unwrap();
        assert_eq!(a.objective, b.objective);
        assert!(validate_solution(&inst, &a).is_empty());
        assert!(a.tours[1].order.contains(&5));
    }
}
