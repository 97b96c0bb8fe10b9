//! Route plans over the remaining horizon, their schedules and the decision log.

mod log;
mod schedule;

pub use log::{omega, validate_log, Decision, Departure, DecisionLog, EpochRecord, LegKind, LogViolation};
pub use schedule::{compute_schedule, RouteProfile, RouteSchedule, Schedule, VisitTimes};

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::instance::{Instance, Request, Vertex, DEPOT};
use crate::time::{epoch_ticks, Ticks};

/// Waiting strategy: when a vehicle leaves a planned vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Leave as soon as possible.
    DriveFirst,
    /// Leave as late as the rest of the route allows.
    WaitFirst,
    /// Leave as soon as possible after a per-visit wait.
    CustomWait,
    /// Drive-first, except wait-first after relocation visits.
    RelocationOnly,
}

impl Strategy {
    pub fn code(self) -> &'static str {
        match self {
            Strategy::DriveFirst => "df",
            Strategy::WaitFirst => "wf",
            Strategy::CustomWait => "cw",
            Strategy::RelocationOnly => "ro",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "df" => Ok(Strategy::DriveFirst),
            "wf" => Ok(Strategy::WaitFirst),
            "cw" => Ok(Strategy::CustomWait),
            "ro" => Ok(Strategy::RelocationOnly),
            other => Err(format!("unknown strategy {other:?} (expected df, wf, cw or ro)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VisitKind {
    Service,
    Relocation,
}

/// A planned stop. Relocations have no request, no demand and no service time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Visit {
    pub vertex: Vertex,
    pub request: Option<Request>,
    /// Extra epochs spent after the visit; only read under custom-wait.
    pub wait: u32,
}

impl Visit {
    pub fn service(request: Request) -> Visit {
        Visit { vertex: request.vertex, request: Some(request), wait: 0 }
    }

    pub fn relocation(vertex: Vertex) -> Visit {
        Visit { vertex, request: None, wait: 0 }
    }

    pub fn kind(&self) -> VisitKind {
        if self.request.is_some() {
            VisitKind::Service
        } else {
            VisitKind::Relocation
        }
    }

    pub fn is_relocation(&self) -> bool {
        self.request.is_none()
    }
}

/// Where a vehicle is and when it can next leave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Current vertex, or the vertex it is heading to.
    pub vertex: Vertex,
    /// Time at which the vehicle is free to depart from `vertex`.
    pub free: Ticks,
    pub load: f64,
    /// The current vertex was reached by a relocation.
    pub at_relocation: bool,
    /// The vehicle has returned to the depot for good.
    pub done: bool,
}

impl VehicleState {
    /// Vehicle waiting at the depot, first allowed to leave at `epoch`.
    pub fn at_depot(epoch: u32) -> VehicleState {
        VehicleState { vertex: DEPOT, free: epoch_ticks(epoch), load: 0.0, at_relocation: false, done: false }
    }
}

/// Initial fleet: every vehicle at the depot, free from epoch `max(e_0, 1)`.
pub fn initial_fleet(instance: &Instance) -> Vec<VehicleState> {
    let start = instance.window(DEPOT).earliest.max(1);
    vec![VehicleState::at_depot(start); instance.vehicles()]
}

/// Planned future visits, one sequence per vehicle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoutePlan {
    pub routes: Vec<Vec<Visit>>,
    pub strategy: Strategy,
    pub relocation: bool,
}

impl RoutePlan {
    pub fn empty(vehicles: usize, strategy: Strategy, relocation: bool) -> RoutePlan {
        RoutePlan { routes: vec![Vec::new(); vehicles], strategy, relocation }
    }

    pub fn visit_count(&self) -> usize {
        self.routes.iter().map(Vec::len).sum()
    }

    pub fn service_requests(&self) -> Vec<Request> {
        let mut out: Vec<Request> = self.routes.iter().flatten().filter_map(|v| v.request).collect();
        out.sort();
        out
    }

    pub fn has_service_at(&self, vertex: Vertex) -> bool {
        self.routes.iter().flatten().any(|v| v.vertex == vertex && v.request.is_some())
    }

    /// Text dump: `v0: S3 R5 S7+2` (S = service, R = relocation, +w = custom wait).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, route) in self.routes.iter().enumerate() {
            let _ = write!(out, "v{k}:");
            for v in route {
                let tag = if v.is_relocation() { 'R' } else { 'S' };
                let _ = write!(out, " {tag}{}", v.vertex);
                if v.wait > 0 {
                    let _ = write!(out, "+{}", v.wait);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Travel time of the plan in ticks, from each vehicle's position through
/// its visits and back to the depot.
pub fn total_travel_ticks(plan: &RoutePlan, instance: &Instance, fleet: &[VehicleState]) -> Ticks {
    plan.routes
        .iter()
        .enumerate()
        .map(|(k, route)| {
            let start = fleet.get(k).map_or(DEPOT, |s| s.vertex);
            let mut pos = start;
            let mut sum = 0;
            for v in route {
                sum += instance.travel_ticks(pos, v.vertex);
                pos = v.vertex;
            }
            sum + instance.travel_ticks(pos, DEPOT)
        })
        .sum()
}

/// [`total_travel_ticks`] as a real number.
pub fn total_travel_cost(plan: &RoutePlan, instance: &Instance, fleet: &[VehicleState]) -> f64 {
    crate::time::to_real(total_travel_ticks(plan, instance, fleet))
}

/// Commits every leg of `schedule` departing strictly before `before`,
/// moving the vehicles and dropping the visits from `plan`. Vehicles left
/// with nothing planned away from the depot return once their latest return
/// departure is before `before`. `on_leg(vehicle, from, to, kind, times)` sees
/// each committed leg.
pub fn commit_before(
    instance: &Instance,
    fleet: &mut [VehicleState],
    plan: &mut RoutePlan,
    schedule: &mut Schedule,
    before: Ticks,
    mut on_leg: impl FnMut(usize, Vertex, Vertex, LegKind, &VisitTimes),
) {
    for (k, state) in fleet.iter_mut().enumerate() {
        let route = &mut plan.routes[k];
        let times = &mut schedule.routes[k];
        let mut n = 0;
        while n < route.len() && times.visits[n].depart < before {
            let visit = route[n];
            let t = times.visits[n];
            let kind = match visit.request {
                Some(r) => LegKind::Service(r),
                None => LegKind::Relocation,
            };
            on_leg(k, state.vertex, visit.vertex, kind, &t);
            state.vertex = visit.vertex;
            state.free = t.free;
            state.load = t.load;
            state.at_relocation = visit.is_relocation();
            n += 1;
        }
        route.drain(..n);
        times.visits.drain(..n);
        if route.is_empty() && !state.done && state.vertex != DEPOT {
            if let Some(dep) = times.return_depart.filter(|&d| d < before) {
                let arrival = dep + instance.travel_ticks(state.vertex, DEPOT);
                let t = VisitTimes { depart: dep, arrival, start: arrival, end: arrival, free: arrival, load: state.load };
                on_leg(k, state.vertex, DEPOT, LegKind::Return, &t);
                state.vertex = DEPOT;
                state.free = arrival;
                state.at_relocation = false;
                state.done = true;
                times.return_depart = None;
                times.return_arrival = None;
            }
        }
    }
}
