//! Problem data model: points, vehicles, instances, tours and solutions,
//! together with the per-vehicle travel-time metric and feasibility checks.
//!
//! Vehicles and targets are identified by their 0-based position in the
//! instance. Depots are a separate vertex kind ([`Vertex::Depot`]) and are
//! never aliased to a target index, even when coordinates coincide.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when comparing a stated tour duration with the
/// recomputed one.
pub const DURATION_RTOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// The point at `radius` from `self` in direction `angle` (radians).
    pub fn offset_polar(&self, radius: f64, angle: f64) -> Point {
        Point::new(self.x + radius * angle.cos(), self.y + radius * angle.sin())
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub speed: f64,
    pub depot: Point,
}

impl Vehicle {
    pub const fn new(speed: f64, depot: Point) -> Self {
        Vehicle { speed, depot }
    }
}

/// Travel time between two points for a vehicle: Euclidean distance over speed.
pub fn travel_time(a: Point, b: Point, vehicle: &Vehicle) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!(
            "non-finite coordinates in travel_time: {a} -> {b}"
        )));
    }
    if !(vehicle.speed > 0.0 && vehicle.speed.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "vehicle speed must be positive and finite, got {}",
            vehicle.speed
        )));
    }
    Ok(a.distance(&b) / vehicle.speed)
}

/// A problem instance: targets, vehicles and the per-vehicle required sets.
///
/// Construction validates every structural invariant, so an `Instance` in
/// hand is always well formed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    targets: Vec<Point>,
    vehicles: Vec<Vehicle>,
    required: Vec<Vec<usize>>,
    owner: Vec<Option<usize>>,
}

/// On-disk layout of an instance. `required` maps a vehicle index to the
/// target indices it must visit.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    targets: Vec<Point>,
    vehicles: Vec<Vehicle>,
    #[serde(default)]
    required: BTreeMap<usize, Vec<usize>>,
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        let k = file.vehicles.len();
        let mut required = vec![Vec::new(); k];
        for (vehicle, targets) in file.required {
            if vehicle >= k {
                return Err(Error::InvalidInput(format!(
                    "required set given for vehicle {vehicle}, but only {k} vehicles exist"
                )));
            }
            required[vehicle] = targets;
        }
        Instance::new(file.targets, file.vehicles, required)
    }
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> Self {
        let required = inst
            .required
            .into_iter()
            .enumerate()
            .filter(|(_, r)| !r.is_empty())
            .collect();
        InstanceFile {
            targets: inst.targets,
            vehicles: inst.vehicles,
            required,
        }
    }
}

impl Instance {
    /// Builds and validates an instance. `required[i]` lists the targets
    /// vehicle `i` must cover; it may be shorter than the vehicle list.
    pub fn new(
        targets: Vec<Point>,
        vehicles: Vec<Vehicle>,
        mut required: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if vehicles.is_empty() {
            return Err(Error::InvalidInput(
                "at least one vehicle is required".into(),
            ));
        }
        if targets.is_empty() {
            return Err(Error::InvalidInput(
                "at least one target is required".into(),
            ));
        }
        if let Some((i, p)) = targets.iter().enumerate().find(|(_, p)| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "target {i} has non-finite coordinates {p}"
            )));
        }
        for (i, v) in vehicles.iter().enumerate() {
            if !(v.speed > 0.0 && v.speed.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "vehicle {i} speed must be positive and finite, got {}",
                    v.speed
                )));
            }
            if !v.depot.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "vehicle {i} depot has non-finite coordinates {}",
                    v.depot
                )));
            }
        }
        if required.len() > vehicles.len() {
            return Err(Error::InvalidInput(format!(
                "{} required sets given for {} vehicles",
                required.len(),
                vehicles.len()
            )));
        }
        required.resize(vehicles.len(), Vec::new());

        let mut owner = vec![None; targets.len()];
        for (vehicle, set) in required.iter_mut().enumerate() {
            set.sort_unstable();
            for &t in set.iter() {
                let slot = owner.get_mut(t).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "vehicle {vehicle} requires target {t}, but only {} targets exist",
                        targets.len()
                    ))
                })?;
                if let Some(other) = *slot {
                    return Err(Error::InvalidInput(if other == vehicle {
                        format!("target {t} listed twice in vehicle {vehicle}'s required set")
                    } else {
                        format!("target {t} required by both vehicle {other} and vehicle {vehicle}")
                    }));
                }
                *slot = Some(vehicle);
            }
        }

        Ok(Instance {
            targets,
            vehicles,
            required,
            owner,
        })
    }

    pub fn targets(&self) -> &[Point] {
        &self.targets
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn num_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    /// Targets vehicle `vehicle` must cover, in ascending index order.
    pub fn required(&self, vehicle: usize) -> &[usize] {
        &self.required[vehicle]
    }

    /// The vehicle a target is pinned to, if any.
    pub fn required_owner(&self, target: usize) -> Option<usize> {
        self.owner[target]
    }

    /// Targets any vehicle may cover, in ascending index order.
    pub fn free_targets(&self) -> Vec<usize> {
        (0..self.targets.len())
            .filter(|&t| self.owner[t].is_none())
            .collect()
    }

    pub fn depots(&self) -> Vec<Point> {
        self.vehicles.iter().map(|v| v.depot).collect()
    }

    /// Copy of this instance with every speed multiplied by `factor`.
    pub fn with_scaled_speeds(&self, factor: f64) -> Result<Instance> {
        let vehicles = self
            .vehicles
            .iter()
            .map(|v| Vehicle::new(v.speed * factor, v.depot))
            .collect();
        Instance::new(self.targets.clone(), vehicles, self.required.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Instance> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// A vertex of a vehicle's graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vertex {
    Depot,
    Target(usize),
}

/// Dense travel-time matrix for one vehicle over its depot and all targets.
/// Row/column 0 is the depot, target `t` lives at `t + 1`.
#[derive(Clone, Debug)]
pub struct TimeMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TimeMatrix {
    pub fn new(depot: Point, targets: &[Point], speed: f64) -> Self {
        let dim = targets.len() + 1;
        let at = |i: usize| if i == 0 { depot } else { targets[i - 1] };
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in (i + 1)..dim {
                let t = at(i).distance(&at(j)) / speed;
                data[i * dim + j] = t;
                data[j * dim + i] = t;
            }
        }
        TimeMatrix { dim, data }
    }

    #[inline]
    pub(crate) fn node(v: Vertex) -> usize {
        match v {
            Vertex::Depot => 0,
            Vertex::Target(t) => t + 1,
        }
    }

    #[inline]
    pub(crate) fn at(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.dim + b]
    }

    #[inline]
    pub fn time(&self, a: Vertex, b: Vertex) -> f64 {
        self.at(Self::node(a), Self::node(b))
    }

    /// Number of targets covered by the matrix.
    pub fn num_targets(&self) -> usize {
        self.dim - 1
    }

    /// Duration of the closed tour depot -> `order`... -> depot.
    pub fn cycle_time(&self, order: &[usize]) -> f64 {
        let mut prev = 0;
        let mut total = 0.0;
        for &t in order {
            total += self.at(prev, t + 1);
            prev = t + 1;
        }
        total + self.at(prev, 0)
    }
}

/// The per-vehicle travel-time graphs of an instance, for a given placement
/// of depots. The heuristic's perturbation stage builds networks with
/// displaced depots; everything else uses the true ones.
#[derive(Clone, Debug)]
pub struct Network {
    depots: Vec<Point>,
    matrices: Vec<TimeMatrix>,
}

impl Network {
    pub fn new(inst: &Instance) -> Self {
        let depots = inst.depots();
        Self::build(inst, depots)
    }

    pub fn with_depots(inst: &Instance, depots: &[Point]) -> Result<Self> {
        if depots.len() != inst.num_vehicles() {
            return Err(Error::InvalidInput(format!(
                "{} depots supplied for {} vehicles",
                depots.len(),
                inst.num_vehicles()
            )));
        }
        if let Some(p) = depots.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite depot {p}")));
        }
        Ok(Self::build(inst, depots.to_vec()))
    }

    fn build(inst: &Instance, depots: Vec<Point>) -> Self {
        let matrices = inst
            .vehicles()
            .iter()
            .zip(&depots)
            .map(|(v, &d)| TimeMatrix::new(d, inst.targets(), v.speed))
            .collect();
        Network { depots, matrices }
    }

    pub fn depots(&self) -> &[Point] {
        &self.depots
    }

    pub fn matrix(&self, vehicle: usize) -> &TimeMatrix {
        &self.matrices[vehicle]
    }

    #[inline]
    pub fn time(&self, vehicle: usize, a: Vertex, b: Vertex) -> f64 {
        self.matrices[vehicle].time(a, b)
    }

    pub fn num_vehicles(&self) -> usize {
        self.matrices.len()
    }
}

/// A closed tour of one vehicle. Only the visited targets are stored; the
/// depot at both ends is implicit, so every tour is closed by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub vehicle: usize,
    pub order: Vec<usize>,
    pub duration: f64,
}

impl Tour {
    pub fn depot_only(vehicle: usize) -> Self {
        Tour {
            vehicle,
            order: Vec::new(),
            duration: 0.0,
        }
    }

    /// Tour visiting `order`, timed on `net`.
    pub fn timed(net: &Network, vehicle: usize, order: Vec<usize>) -> Self {
        let duration = net.matrix(vehicle).cycle_time(&order);
        Tour {
            vehicle,
            order,
            duration,
        }
    }

    /// Parses a full vertex sequence (depot first and last) into a tour.
    pub fn from_sequence(net: &Network, vehicle: usize, seq: &[Vertex]) -> Result<Self> {
        let duration = tour_duration(net.matrix(vehicle), seq)?;
        let order = seq[1..seq.len() - 1]
            .iter()
            .map(|v| match v {
                Vertex::Target(t) => Ok(*t),
                Vertex::Depot => Err(Error::InvariantViolation(format!(
                    "vehicle {vehicle} tour revisits its depot mid-sequence"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Tour {
            vehicle,
            order,
            duration,
        })
    }

    /// Full vertex sequence, depot first and last.
    pub fn sequence(&self) -> Vec<Vertex> {
        std::iter::once(Vertex::Depot)
            .chain(self.order.iter().map(|&t| Vertex::Target(t)))
            .chain(std::iter::once(Vertex::Depot))
            .collect()
    }

    pub fn is_depot_only(&self) -> bool {
        self.order.is_empty()
    }

    /// The vertices before and after position `pos` of `order`.
    pub fn neighbors(&self, pos: usize) -> (Vertex, Vertex) {
        let prev = if pos == 0 {
            Vertex::Depot
        } else {
            Vertex::Target(self.order[pos - 1])
        };
        let next = self
            .order
            .get(pos + 1)
            .map_or(Vertex::Depot, |&t| Vertex::Target(t));
        (prev, next)
    }
}

/// Sum of travel times along a vertex sequence that must start and end at
/// the depot.
pub fn tour_duration(matrix: &TimeMatrix, seq: &[Vertex]) -> Result<f64> {
    if seq.len() < 2 {
        return Err(Error::InvariantViolation(format!(
            "tour sequence needs at least 2 vertices, got {}",
            seq.len()
        )));
    }
    if seq[0] != Vertex::Depot || seq[seq.len() - 1] != Vertex::Depot {
        return Err(Error::InvariantViolation(
            "tour sequence is not closed at the depot".into(),
        ));
    }
    if let Some(t) = seq.iter().find_map(|v| match v {
        Vertex::Target(t) if *t >= matrix.num_targets() => Some(*t),
        _ => None,
    }) {
        return Err(Error::InvalidInput(format!("unknown target {t} in tour")));
    }
    Ok(seq.windows(2).map(|w| matrix.time(w[0], w[1])).sum())
}

/// One tour per vehicle (indexed by vehicle) and the min-max objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub tours: Vec<Tour>,
    pub objective: f64,
}

impl Solution {
    pub fn from_tours(tours: Vec<Tour>) -> Self {
        let objective = tours.iter().map(|t| t.duration).fold(0.0, f64::max);
        Solution { tours, objective }
    }

    /// Vehicle with the longest tour; ties go to the lowest index.
    pub fn maximal_vehicle(&self) -> usize {
        let mut best = 0;
        for (i, t) in self.tours.iter().enumerate() {
            if t.duration > self.tours[best].duration {
                best = i;
            }
        }
        best
    }

    /// Targets visited by each vehicle, in tour order.
    pub fn allocation(&self) -> Vec<Vec<usize>> {
        self.tours.iter().map(|t| t.order.clone()).collect()
    }

    pub fn replace_tour(&mut self, tour: Tour) {
        let v = tour.vehicle;
        self.tours[v] = tour;
        self.objective = self.tours.iter().map(|t| t.duration).fold(0.0, f64::max);
    }
}

/// A broken solution invariant, as reported by [`validate_solution`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    TourCount {
        expected: usize,
        found: usize,
    },
    VehicleMismatch {
        position: usize,
        vehicle: usize,
    },
    UnknownTarget {
        vehicle: usize,
        target: usize,
    },
    UncoveredTarget {
        target: usize,
    },
    DuplicatedTarget {
        target: usize,
    },
    RequiredMisplaced {
        target: usize,
        required_by: usize,
        found_on: usize,
    },
    DurationMismatch {
        vehicle: usize,
        stated: f64,
        recomputed: f64,
    },
    ObjectiveMismatch {
        stated: f64,
        recomputed: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TourCount { expected, found } => {
                write!(f, "expected {expected} tours, found {found}")
            }
            Violation::VehicleMismatch { position, vehicle } => {
                write!(f, "tour at position {position} claims vehicle {vehicle}")
            }
            Violation::UnknownTarget { vehicle, target } => {
                write!(f, "vehicle {vehicle} visits unknown target {target}")
            }
            Violation::UncoveredTarget { target } => write!(f, "target {target} is not covered"),
            Violation::DuplicatedTarget { target } => {
                write!(f, "target {target} is covered more than once")
            }
            Violation::RequiredMisplaced {
                target,
                required_by,
                found_on,
            } => write!(
                f,
                "target {target} is required by vehicle {required_by} but visited by vehicle {found_on}"
            ),
            Violation::DurationMismatch {
                vehicle,
                stated,
                recomputed,
            } => write!(
                f,
                "vehicle {vehicle} tour duration {stated} does not match recomputed {recomputed}"
            ),
            Violation::ObjectiveMismatch { stated, recomputed } => {
                write!(f, "objective {stated} does not match max tour duration {recomputed}")
            }
        }
    }
}

/// Checks a solution against an instance. Never panics; an empty result
/// means the solution is feasible and its stated times are consistent.
pub fn validate_solution(inst: &Instance, sol: &Solution) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = inst.num_vehicles();
    let n = inst.num_targets();
    if sol.tours.len() != k {
        out.push(Violation::TourCount {
            expected: k,
            found: sol.tours.len(),
        });
    }

    let mut seen_on: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, tour) in sol.tours.iter().enumerate() {
        if tour.vehicle != pos || tour.vehicle >= k {
            out.push(Violation::VehicleMismatch {
                position: pos,
                vehicle: tour.vehicle,
            });
        }
        let mut known = true;
        for &t in &tour.order {
            match seen_on.get_mut(t) {
                Some(list) => list.push(pos),
                None => {
                    known = false;
                    out.push(Violation::UnknownTarget {
                        vehicle: pos,
                        target: t,
                    });
                }
            }
        }
        if known && pos < k {
            let v = &inst.vehicles()[pos];
            let mut prev = v.depot;
            let mut recomputed = 0.0;
            for &t in &tour.order {
                let p = inst.targets()[t];
                recomputed += prev.distance(&p) / v.speed;
                prev = p;
            }
            recomputed += prev.distance(&v.depot) / v.speed;
            let tol = DURATION_RTOL * recomputed.abs().max(1.0);
            // written so that a NaN duration also counts as a mismatch
            let agrees = (tour.duration - recomputed).abs() <= tol;
            if !agrees {
                out.push(Violation::DurationMismatch {
                    vehicle: pos,
                    stated: tour.duration,
                    recomputed,
                });
            }
        }
    }

    for (t, vehicles) in seen_on.iter().enumerate() {
        match vehicles.len() {
            0 => out.push(Violation::UncoveredTarget { target: t }),
            1 => {}
            _ => out.push(Violation::DuplicatedTarget { target: t }),
        }
        if let Some(req) = inst.required_owner(t) {
            if let Some(&wrong) = vehicles.iter().find(|&&v| v != req) {
                out.push(Violation::RequiredMisplaced {
                    target: t,
                    required_by: req,
                    found_on: wrong,
                });
            }
        }
    }

    let recomputed = sol.tours.iter().map(|t| t.duration).fold(0.0, f64::max);
    if sol.objective != recomputed {
        out.push(Violation::ObjectiveMismatch {
            stated: sol.objective,
            recomputed,
        });
    }
    out
}
