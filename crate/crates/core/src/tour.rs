//! Single-vehicle TSP: an exact Held–Karp dynamic program for small target
//! sets and a nearest-neighbour + 2-opt + Or-opt local search for the rest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Network, TimeMatrix, Tour};

/// Largest target set the exact solver accepts (2^16 * 16 DP cells).
pub const EXACT_CAP: usize = 16;

/// Improvement threshold for 2-opt and Or-opt moves.
const MOVE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TourMode {
    #[default]
    Heuristic,
    Exact,
}

impl std::str::FromStr for TourMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heuristic" => Ok(TourMode::Heuristic),
            "exact" => Ok(TourMode::Exact),
            other => Err(Error::InvalidInput(format!(
                "unknown tour mode {other:?} (expected heuristic or exact)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TourRequest<'a> {
    pub vehicle: usize,
    pub targets: &'a [usize],
    pub mode: TourMode,
    pub exact_cap: usize,
}

impl<'a> TourRequest<'a> {
    pub fn new(vehicle: usize, targets: &'a [usize], mode: TourMode) -> Self {
        TourRequest {
            vehicle,
            targets,
            mode,
            exact_cap: EXACT_CAP,
        }
    }
}

/// Builds a closed tour for one vehicle through the requested targets.
pub fn solve_tsp(net: &Network, req: &TourRequest<'_>) -> Result<Tour> {
    let matrix = net.matrix(req.vehicle);
    let order = match req.mode {
        TourMode::Exact => held_karp_capped(matrix, req.targets, req.exact_cap)?,
        TourMode::Heuristic => heuristic_order(matrix, req.targets),
    };
    Ok(Tour::timed(net, req.vehicle, order))
}

/// Like [`solve_tsp`], but in heuristic mode also improves `hint` (an order
/// over exactly the requested targets) and keeps whichever tour is shorter.
pub fn solve_tsp_from(net: &Network, req: &TourRequest<'_>, hint: &[usize]) -> Result<Tour> {
    let fresh = solve_tsp(net, req)?;
    if req.mode == TourMode::Exact || hint.len() != req.targets.len() {
        return Ok(fresh);
    }
    let mut order = hint.to_vec();
    local_optimum(net.matrix(req.vehicle), &mut order);
    let seeded = Tour::timed(net, req.vehicle, order);
    Ok(if seeded.duration < fresh.duration {
        seeded
    } else {
        fresh
    })
}

/// Nearest-neighbour construction followed by 2-opt and Or-opt until neither
/// finds an improving move.
pub fn heuristic_order(matrix: &TimeMatrix, targets: &[usize]) -> Vec<usize> {
    let mut order = nearest_neighbor(matrix, targets);
    local_optimum(matrix, &mut order);
    order
}

fn local_optimum(matrix: &TimeMatrix, order: &mut [usize]) {
    loop {
        let a = two_opt(matrix, order);
        let b = or_opt(matrix, order);
        if !a && !b {
            return;
        }
    }
}

/// Greedy construction from the depot. Ties go to the lowest target index.
pub fn nearest_neighbor(matrix: &TimeMatrix, targets: &[usize]) -> Vec<usize> {
    let mut left: Vec<usize> = targets.to_vec();
    left.sort_unstable();
    let mut order = Vec::with_capacity(left.len());
    let mut here = 0;
    while !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            if matrix.at(here, left[i] + 1) < matrix.at(here, left[best] + 1) {
                best = i;
            }
        }
        let t = left.remove(best);
        order.push(t);
        here = t + 1;
    }
    order
}

/// Matrix nodes of the closed walk depot -> order -> depot.
fn closed_nodes(order: &[usize]) -> Vec<usize> {
    let mut nodes = Vec::with_capacity(order.len() + 2);
    nodes.push(0);
    nodes.extend(order.iter().map(|&t| t + 1));
    nodes.push(0);
    nodes
}

fn write_back(order: &mut [usize], nodes: &[usize]) {
    for (slot, &n) in order.iter_mut().zip(&nodes[1..]) {
        *slot = n - 1;
    }
}

/// First-improvement 2-opt over the closed walk, scanning edge pairs by
/// increasing `i` then `j`, until a full pass finds nothing. Returns whether
/// the order changed.
pub fn two_opt(matrix: &TimeMatrix, order: &mut [usize]) -> bool {
    if order.len() < 3 {
        return false;
    }
    let mut s = closed_nodes(order);
    let last = s.len() - 1;
    let mut changed = false;
    loop {
        let mut improved = false;
        for i in 0..last - 2 {
            for j in (i + 2)..last {
                let delta = matrix.at(s[i], s[j]) + matrix.at(s[i + 1], s[j + 1])
                    - matrix.at(s[i], s[i + 1])
                    - matrix.at(s[j], s[j + 1]);
                if delta < -MOVE_EPS {
                    s[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
        changed = true;
    }
    if changed {
        write_back(order, &s);
    }
    changed
}

/// Or-opt: relocate a segment of 1 to 3 consecutive targets, in either
/// orientation, to the cheapest other edge. First improvement, repeated
/// until no move helps.
pub fn or_opt(matrix: &TimeMatrix, order: &mut [usize]) -> bool {
    let n = order.len();
    if n < 2 {
        return false;
    }
    let mut s = closed_nodes(order);
    let mut changed = false;
    'search: loop {
        for len in 1..=3.min(n - 1) {
            for i in 1..=(n + 1 - len) {
                let first = s[i];
                let last = s[i + len - 1];
                let before = s[i - 1];
                let after = s[i + len];
                let gain =
                    matrix.at(before, first) + matrix.at(last, after) - matrix.at(before, after);
                for p in 0..=n {
                    if p + 1 >= i && p < i + len {
                        continue;
                    }
                    let (a, b) = (s[p], s[p + 1]);
                    let base = matrix.at(a, b);
                    let fwd = matrix.at(a, first) + matrix.at(last, b) - base;
                    let rev = matrix.at(a, last) + matrix.at(first, b) - base;
                    let (cost, reversed) = if rev < fwd { (rev, true) } else { (fwd, false) };
                    if cost - gain < -MOVE_EPS {
                        let mut seg: Vec<usize> = s[i..i + len].to_vec();
                        if reversed {
                            seg.reverse();
                        }
                        let mut next = Vec::with_capacity(s.len());
                        if p < i {
                            next.extend_from_slice(&s[..=p]);
                            next.extend_from_slice(&seg);
                            next.extend_from_slice(&s[p + 1..i]);
                            next.extend_from_slice(&s[i + len..]);
                        } else {
                            next.extend_from_slice(&s[..i]);
                            next.extend_from_slice(&s[i + len..=p]);
                            next.extend_from_slice(&seg);
                            next.extend_from_slice(&s[p + 1..]);
                        }
                        s = next;
                        changed = true;
                        continue 'search;
                    }
                }
            }
        }
        break;
    }
    if changed {
        write_back(order, &s);
    }
    changed
}

/// Applies 2-opt to a tour and re-times it.
pub fn two_opt_improve(net: &Network, tour: &Tour) -> Tour {
    let mut order = tour.order.clone();
    two_opt(net.matrix(tour.vehicle), &mut order);
    Tour::timed(net, tour.vehicle, order)
}

/// Optimal tour order through `targets` with the default capacity limit.
pub fn held_karp(matrix: &TimeMatrix, targets: &[usize]) -> Result<Vec<usize>> {
    held_karp_capped(matrix, targets, EXACT_CAP)
}

/// Held–Karp over subsets of `targets`. The result does not depend on the
/// order in which targets are listed.
pub fn held_karp_capped(matrix: &TimeMatrix, targets: &[usize], cap: usize) -> Result<Vec<usize>> {
    let n = targets.len();
    if n > cap || n > 31 {
        return Err(Error::Capacity {
            requested: n,
            cap: cap.min(31),
        });
    }
    let mut ts = targets.to_vec();
    ts.sort_unstable();
    if n <= 1 {
        return Ok(ts);
    }
    let nodes: Vec<usize> = ts.iter().map(|&t| t + 1).collect();
    let full = 1usize << n;
    // best[mask * n + j]: cheapest path leaving the depot, visiting `mask`, ending at j.
    let mut best = vec![f64::INFINITY; full * n];
    let mut parent = vec![u8::MAX; full * n];
    for j in 0..n {
        best[(1 << j) * n + j] = matrix.at(0, nodes[j]);
    }
    for mask in 1..full {
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = best[mask * n + j];
            if !here.is_finite() {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let m2 = mask | (1 << next);
                let cand = here + matrix.at(nodes[j], nodes[next]);
                if cand < best[m2 * n + next] {
                    best[m2 * n + next] = cand;
                    parent[m2 * n + next] = j as u8;
                }
            }
        }
    }
    let last_mask = full - 1;
    let mut end = 0;
    let mut end_cost = f64::INFINITY;
    for j in 0..n {
        let c = best[last_mask * n + j] + matrix.at(nodes[j], 0);
        if c < end_cost {
            end_cost = c;
            end = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = last_mask;
    let mut j = end;
    loop {
        order.push(ts[j]);
        let p = parent[mask * n + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    order.reverse();
    Ok(order)
}
