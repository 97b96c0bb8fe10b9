use serde::{Deserialize, Serialize};

use super::{RoutePlan, Strategy, VehicleState, Visit};
use crate::instance::{Instance, Vertex, DEPOT};
use crate::time::{ceil_epoch, epoch_ticks, floor_epoch, Ticks};

const NEVER: Ticks = Ticks::MIN / 4;

/// Times of one planned visit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisitTimes {
    /// Departure from the previous position.
    pub depart: Ticks,
    pub arrival: Ticks,
    /// Service start; equals `arrival` for relocations.
    pub start: Ticks,
    /// Service end; equals `arrival` for relocations.
    pub end: Ticks,
    /// Earliest time the vehicle may leave.
    pub free: Ticks,
    /// Load after the visit.
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RouteSchedule {
    pub visits: Vec<VisitTimes>,
    /// Departure of the final leg back to the depot; `None` when the vehicle
    /// is already at the depot with nothing to do.
    pub return_depart: Option<Ticks>,
    pub return_arrival: Option<Ticks>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub routes: Vec<RouteSchedule>,
}

/// Latest-time bounds and earliest ready times of one route, used for O(1)
/// insertion checks.
#[derive(Debug, Clone)]
pub struct RouteProfile {
    /// `ready[0]` is the vehicle's free time, `ready[k + 1]` the earliest
    /// time it may leave visit `k`.
    pub ready: Vec<Ticks>,
    /// Latest arrival at visit `k` keeping the remainder feasible.
    pub latest_arrival: Vec<Ticks>,
    /// `latest_depart[k]` is the latest departure toward visit `k`
    /// (`k = len` is the return leg).
    pub latest_depart: Vec<Ticks>,
    /// Load after every planned service.
    pub final_load: f64,
    pub feasible: bool,
}

fn waits(strategy: Strategy, v: &Visit) -> Ticks {
    if strategy == Strategy::CustomWait {
        epoch_ticks(v.wait)
    } else {
        0
    }
}

fn release(v: &Visit) -> Ticks {
    v.request.map_or(0, |r| epoch_ticks(r.reveal_epoch))
}

/// Latest departure from `vertex` that still reaches the depot by `l_0`.
pub fn latest_return_departure(instance: &Instance, vertex: Vertex) -> Ticks {
    floor_epoch(epoch_ticks(instance.window(DEPOT).latest) - instance.travel_ticks(vertex, DEPOT))
}

/// Backward pass. Returns `(latest_arrival, latest_depart)`.
fn latest_pass(instance: &Instance, state: &VehicleState, route: &[Visit], strategy: Strategy) -> (Vec<Ticks>, Vec<Ticks>) {
    let m = route.len();
    let mut la = vec![0; m];
    let mut ld = vec![0; m + 1];
    let last = route.last().map_or(state.vertex, |v| v.vertex);
    ld[m] = if last == DEPOT { epoch_ticks(instance.window(DEPOT).latest) } else { latest_return_departure(instance, last) };
    for k in (0..m).rev() {
        let v = &route[k];
        let after = ld[k + 1] - waits(strategy, v);
        la[k] = if v.is_relocation() {
            after
        } else {
            (epoch_ticks(instance.window(v.vertex).latest)).min(after - instance.service_ticks(v.vertex))
        };
        let prev = if k == 0 { state.vertex } else { route[k - 1].vertex };
        let mut dep = floor_epoch(la[k] - instance.travel_ticks(prev, v.vertex));
        if v.is_relocation() {
            dep = dep.min(instance.relocation_deadline(v.vertex).unwrap_or(NEVER));
        }
        ld[k] = dep;
    }
    (la, ld)
}

/// Schedule of one route; `None` when infeasible.
pub(crate) fn route_schedule(
    instance: &Instance,
    state: &VehicleState,
    route: &[Visit],
    strategy: Strategy,
    now: Ticks,
) -> Option<RouteSchedule> {
    if state.done {
        return route.is_empty().then(RouteSchedule::default);
    }
    let (_, ld) = latest_pass(instance, state, route, strategy);
    let cap = instance.capacity();
    let mut out = RouteSchedule { visits: Vec::with_capacity(route.len()), return_depart: None, return_arrival: None };
    let mut pos = state.vertex;
    let mut ready = state.free;
    let mut load = state.load;
    let mut after_relocation = state.at_relocation;
    for (k, v) in route.iter().enumerate() {
        let earliest = ceil_epoch(ready).max(now);
        if earliest > ld[k] {
            return None;
        }
        let depart = match strategy {
            Strategy::DriveFirst | Strategy::CustomWait => earliest,
            Strategy::WaitFirst => ld[k],
            Strategy::RelocationOnly if after_relocation => ld[k],
            Strategy::RelocationOnly => earliest,
        };
        let arrival = depart + instance.travel_ticks(pos, v.vertex);
        let (start, end) = if v.is_relocation() {
            (arrival, arrival)
        } else {
            let w = instance.window(v.vertex);
            let start = arrival.max(epoch_ticks(w.earliest)).max(release(v));
            if start > epoch_ticks(w.latest) {
                return None;
            }
            load += instance.demand(v.vertex);
            if load > cap + 1e-9 {
                return None;
            }
            (start, start + instance.service_ticks(v.vertex))
        };
        let free = if strategy == Strategy::CustomWait { ceil_epoch(end) + waits(strategy, v) } else { end };
        out.visits.push(VisitTimes { depart, arrival, start, end, free, load });
        pos = v.vertex;
        ready = free;
        after_relocation = v.is_relocation();
    }
    if pos != DEPOT {
        let earliest = ceil_epoch(ready).max(now);
        let latest = ld[route.len()];
        if earliest > latest {
            return None;
        }
        out.return_depart = Some(latest);
        out.return_arrival = Some(latest + instance.travel_ticks(pos, DEPOT));
    }
    Some(out)
}

/// Schedules every route of `plan` from the fleet state at time `now`
/// (an epoch boundary). `None` if any window, capacity, relocation deadline
/// or depot-return bound is violated.
pub fn compute_schedule(plan: &RoutePlan, instance: &Instance, fleet: &[VehicleState], now: Ticks) -> Option<Schedule> {
    assert_eq!(plan.routes.len(), fleet.len(), "one route per vehicle");
    let mut routes = Vec::with_capacity(fleet.len());
    for (state, route) in fleet.iter().zip(&plan.routes) {
        for v in route {
            assert!(v.vertex != DEPOT && v.vertex < instance.vertex_count(), "visit to invalid vertex {}", v.vertex);
        }
        routes.push(route_schedule(instance, state, route, plan.strategy, now)?);
    }
    Some(Schedule { routes })
}

impl RouteProfile {
    pub fn new(instance: &Instance, state: &VehicleState, route: &[Visit], strategy: Strategy, now: Ticks) -> RouteProfile {
        let (latest_arrival, latest_depart) = latest_pass(instance, state, route, strategy);
        let feasible = route_schedule(instance, state, route, strategy, now).is_some();
        // earliest departures: the drive-first realization (with waits under custom-wait)
        let mut ready = Vec::with_capacity(route.len() + 1);
        ready.push(state.free);
        let mut pos = state.vertex;
        let mut cur = state.free;
        let mut final_load = state.load;
        for v in route {
            let arrival = ceil_epoch(cur).max(now) + instance.travel_ticks(pos, v.vertex);
            let end = if v.is_relocation() {
                arrival
            } else {
                final_load += instance.demand(v.vertex);
                arrival.max(epoch_ticks(instance.window(v.vertex).earliest)).max(release(v))
                    + instance.service_ticks(v.vertex)
            };
            cur = if strategy == Strategy::CustomWait { ceil_epoch(end) + waits(strategy, v) } else { end };
            ready.push(cur);
            pos = v.vertex;
        }
        RouteProfile { ready, latest_arrival, latest_depart, final_load, feasible: feasible && !state.done }
    }

    /// Whether `visit` (a service) can be inserted before position `pos`
    /// (`pos == route.len()` appends) without breaking the route.
    pub fn can_insert(
        &self,
        instance: &Instance,
        state: &VehicleState,
        route: &[Visit],
        strategy: Strategy,
        now: Ticks,
        pos: usize,
        visit: &Visit,
    ) -> bool {
        if !self.feasible {
            return false;
        }
        let j = visit.vertex;
        if self.final_load + instance.demand(j) > instance.capacity() + 1e-9 {
            return false;
        }
        let prev = if pos == 0 { state.vertex } else { route[pos - 1].vertex };
        let depart = ceil_epoch(self.ready[pos]).max(now);
        let arrival = depart + instance.travel_ticks(prev, j);
        let w = instance.window(j);
        let start = arrival.max(epoch_ticks(w.earliest)).max(release(visit));
        if start > epoch_ticks(w.latest) {
            return false;
        }
        let end = start + instance.service_ticks(j);
        let next_depart = ceil_epoch(end) + waits(strategy, visit);
        if pos == route.len() {
            next_depart <= latest_return_departure(instance, j)
        } else {
            let next = &route[pos];
            if next.is_relocation() && next_depart > instance.relocation_deadline(next.vertex).unwrap_or(NEVER) {
                return false;
            }
            next_depart + instance.travel_ticks(j, next.vertex) <= self.latest_arrival[pos]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::uniform;
    use crate::instance::{InstanceParts, ProbabilitySlice, Request, TimeWindow};

    fn inst(p: InstanceParts) -> Instance {
        Instance::from_parts(p).unwrap()
    }

    fn plan_of(strategy: Strategy, visits: Vec<Visit>) -> RoutePlan {
        RoutePlan { routes: vec![visits], strategy, relocation: false }
    }

    fn svc(v: Vertex) -> Visit {
        Visit::service(Request::new(v, 0, v as u32))
    }

    #[test]
    fn drive_first_single_customer() {
        let mut p = uniform(1, 35, 50);
        p.windows[1] = TimeWindow::new(10, 20);
        let inst = inst(p);
        let fleet = vec![VehicleState::at_depot(1)];
        let s = compute_schedule(&plan_of(Strategy::DriveFirst, vec![svc(1)]), &inst, &fleet, 10).unwrap();
        let v = s.routes[0].visits[0];
        assert_eq!(v.depart, 10);
        assert_eq!(v.arrival, 10 + 35);
        assert_eq!(v.start, 100); // max(arrival, e_1)
        assert_eq!(v.end, 110);
        assert_eq!(s.routes[0].return_depart, Some(floor_epoch(500 - 35)));
    }

    #[test]
    fn wait_first_delays_to_latest_start() {
        let mut p = uniform(1, 35, 50);
        p.windows[1] = TimeWindow::new(10, 20);
        let inst = inst(p);
        let fleet = vec![VehicleState::at_depot(1)];
        let s = compute_schedule(&plan_of(Strategy::WaitFirst, vec![svc(1)]), &inst, &fleet, 10).unwrap();
        let v = s.routes[0].visits[0];
        // latest start is l_1 = 20; latest departure floor(200 - 35) = 160
        assert_eq!(v.depart, 160);
        assert_eq!(v.start, 195);
    }

    #[test]
    fn custom_wait_adds_epochs() {
        let inst = inst(uniform(2, 15, 50));
        let fleet = vec![VehicleState::at_depot(1)];
        let mut a = svc(1);
        a.wait = 3;
        let s = compute_schedule(&plan_of(Strategy::CustomWait, vec![a, svc(2)]), &inst, &fleet, 10).unwrap();
        let v = &s.routes[0].visits;
        assert_eq!(v[0].arrival, 25);
        assert_eq!(v[0].end, 35);
        assert_eq!(v[0].free, 40 + 30);
        assert_eq!(v[1].depart, 70);
    }

    #[test]
    fn capacity_and_windows_make_routes_infeasible() {
        let mut p = uniform(2, 10, 50);
        p.capacity = 1.5;
        let i1 = inst(p);
        let fleet = vec![VehicleState::at_depot(1)];
        assert!(compute_schedule(&plan_of(Strategy::DriveFirst, vec![svc(1), svc(2)]), &i1, &fleet, 10).is_none());
        let mut p = uniform(1, 10, 50);
        p.windows[1] = TimeWindow::new(1, 1);
        let i2 = inst(p);
        // arrival at 2.0 > l_1 = 1
        assert!(compute_schedule(&plan_of(Strategy::DriveFirst, vec![svc(1)]), &i2, &fleet, 10).is_none());
        // depot return beyond l_0
        let i3 = inst(uniform(1, 260, 50));
        assert!(compute_schedule(&plan_of(Strategy::DriveFirst, vec![svc(1)]), &i3, &fleet, 10).is_none());
    }

    #[test]
    fn boundary_ties_are_feasible() {
        let mut p = uniform(1, 20, 10);
        p.windows[1] = TimeWindow::new(3, 3);
        p.windows[0] = TimeWindow::new(0, 6);
        // depart 1, arrive 3 = l_1, serve until 4, return at 6 = l_0
        let i = inst(p);
        let fleet = vec![VehicleState::at_depot(1)];
        assert!(compute_schedule(&plan_of(Strategy::DriveFirst, vec![svc(1)]), &i, &fleet, 10).is_some());
    }

    #[test]
    fn relocation_deadline_is_enforced() {
        let mut p = uniform(2, 10, 30);
        p.probability = vec![ProbabilitySlice { start: 2, end: 4, vertex: 2, per_epoch: 0.2 }];
        let i = inst(p);
        let fleet = vec![VehicleState::at_depot(1)];
        let plan = RoutePlan { routes: vec![vec![Visit::relocation(2)]], strategy: Strategy::DriveFirst, relocation: true };
        assert!(compute_schedule(&plan, &i, &fleet, 30).is_some());
        assert!(compute_schedule(&plan, &i, &fleet, 40).is_none());
        let dead = RoutePlan { routes: vec![vec![Visit::relocation(1)]], strategy: Strategy::DriveFirst, relocation: true };
        assert!(compute_schedule(&dead, &i, &fleet, 10).is_none());
    }

    #[test]
    fn relocation_only_waits_after_relocations() {
        let mut p = uniform(2, 10, 30);
        p.probability = vec![ProbabilitySlice { start: 1, end: 20, vertex: 1, per_epoch: 0.1 }];
        let i = inst(p);
        let fleet = vec![VehicleState::at_depot(1)];
        let route = vec![Visit::relocation(1), svc(2)];
        let ro = compute_schedule(&plan_of(Strategy::RelocationOnly, route.clone()), &i, &fleet, 10).unwrap();
        let df = compute_schedule(&plan_of(Strategy::DriveFirst, route), &i, &fleet, 10).unwrap();
        assert_eq!(ro.routes[0].visits[0], df.routes[0].visits[0]);
        // leaves the relocation at the latest time: floor(l_0 - t - d - t) = 27
        assert_eq!(ro.routes[0].visits[1].depart, 270);
        assert_eq!(df.routes[0].visits[1].depart, 20);
    }

    #[test]
    fn insertion_check_matches_full_schedule() {
        let mut p = uniform(4, 23, 20);
        p.windows[1] = TimeWindow::new(2, 6);
        p.windows[3] = TimeWindow::new(8, 12);
        let i = inst(p);
        let state = VehicleState::at_depot(1);
        for strategy in [Strategy::DriveFirst, Strategy::WaitFirst, Strategy::CustomWait, Strategy::RelocationOnly] {
            let route = vec![svc(1), svc(3)];
            let prof = RouteProfile::new(&i, &state, &route, strategy, 10);
            for pos in 0..=route.len() {
                for j in [2, 4] {
                    let mut r = route.clone();
                    r.insert(pos, svc(j));
                    let full = route_schedule(&i, &state, &r, strategy, 10).is_some();
                    assert_eq!(prof.can_insert(&i, &state, &route, strategy, 10, pos, &svc(j)), full, "{strategy:?} {pos} {j}");
                }
            }
        }
    }
}
