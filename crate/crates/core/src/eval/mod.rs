//! The scenario-averaged rejection estimate and its exact counterparts.

mod exact;

pub use exact::{exact_q, two_stage_value, ExactMove, ExactRoot, OracleError, OracleLimits};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, Request, Vertex};
use crate::plan::{commit_before, compute_schedule, DecisionLog, LegKind, RouteProfile, RoutePlan, VehicleState, Visit};
use crate::scenario::{Scenario, ScenarioPool};
use crate::time::{epoch_ticks, to_epoch, Ticks};

/// Mean and per-scenario rejections of one evaluation. An infeasible plan
/// scores `+∞` with no per-scenario values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mean: f64,
    pub per_scenario: Vec<u32>,
}

impl EvalResult {
    pub fn infeasible() -> EvalResult {
        EvalResult { mean: f64::INFINITY, per_scenario: vec![] }
    }

    pub fn is_feasible(&self) -> bool {
        self.mean.is_finite()
    }
}

/// A feasible position for a new service visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Insertion {
    pub vehicle: usize,
    /// Index the visit takes in the vehicle's route.
    pub position: usize,
    /// Added travel time in ticks.
    pub cost: Ticks,
}

/// Every feasible insertion of `request` into `plan`, in (vehicle, position)
/// order. Visit order is otherwise unchanged.
pub fn insertion_candidates(
    instance: &Instance,
    plan: &RoutePlan,
    fleet: &[VehicleState],
    request: Request,
    now: Ticks,
) -> Vec<Insertion> {
    let visit = Visit::service(request);
    let j = request.vertex;
    let mut out = Vec::new();
    for (k, (state, route)) in fleet.iter().zip(&plan.routes).enumerate() {
        if state.done {
            continue;
        }
        let profile = RouteProfile::new(instance, state, route, plan.strategy, now);
        if !profile.feasible {
            continue;
        }
        for pos in 0..=route.len() {
            if profile.can_insert(instance, state, route, plan.strategy, now, pos, &visit) {
                let prev = if pos == 0 { state.vertex } else { route[pos - 1].vertex };
                let next: Vertex = route.get(pos).map_or(crate::instance::DEPOT, |v| v.vertex);
                let cost = instance.travel_ticks(prev, j) + instance.travel_ticks(j, next) - instance.travel_ticks(prev, next);
                out.push(Insertion { vehicle: k, position: pos, cost });
            }
        }
    }
    out
}

/// Cheapest feasible insertion of `request`; ties go to the lowest vehicle,
/// then the earliest position.
pub fn try_to_serve(
    instance: &Instance,
    plan: &RoutePlan,
    fleet: &[VehicleState],
    request: Request,
    now: Ticks,
) -> Option<Insertion> {
    let mut best: Option<Insertion> = None;
    for ins in insertion_candidates(instance, plan, fleet, request, now) {
        if best.map_or(true, |b| ins.cost < b.cost) {
            best = Some(ins);
        }
    }
    best
}

pub fn apply_insertion(plan: &mut RoutePlan, insertion: Insertion, request: Request) {
    plan.routes[insertion.vehicle].insert(insertion.position, Visit::service(request));
}

/// What one simulated scenario did, for nonanticipativity checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceEvent {
    Depart { epoch: u32, vehicle: usize, to: Vertex, kind: LegKind },
    Accept { request: Request, vehicle: usize, position: usize },
    Reject { request: Request },
}

impl TraceEvent {
    /// Epoch at which the decision was taken.
    pub fn epoch(&self) -> u32 {
        match self {
            TraceEvent::Depart { epoch, .. } => *epoch,
            TraceEvent::Accept { request, .. } | TraceEvent::Reject { request } => request.reveal_epoch,
        }
    }
}

/// Greedy simulation of one scenario: reveals are processed in order, each
/// inserted by [`try_to_serve`] from its reveal epoch or rejected; legs that
/// depart before a reveal are frozen first. Returns the rejections, or
/// `None` if the starting plan is infeasible.
pub fn simulate(
    instance: &Instance,
    fleet: &[VehicleState],
    plan: &RoutePlan,
    requests: &[Request],
    now: Ticks,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Option<u32> {
    let mut fleet = fleet.to_vec();
    let mut plan = plan.clone();
    let mut schedule = compute_schedule(&plan, instance, &fleet, now)?;
    let mut rejected = 0;
    for &r in requests {
        let t = epoch_ticks(r.reveal_epoch);
        debug_assert!(t >= now, "reveal before the plan starts");
        commit_before(instance, &mut fleet, &mut plan, &mut schedule, t, |vehicle, _, to, kind, times| {
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(TraceEvent::Depart { epoch: to_epoch(times.depart) as u32, vehicle, to, kind });
            }
        });
        match try_to_serve(instance, &plan, &fleet, r, t) {
            Some(ins) => {
                apply_insertion(&mut plan, ins, r);
                schedule = compute_schedule(&plan, instance, &fleet, t).expect("checked insertion stays feasible");
                if let Some(tr) = trace.as_deref_mut() {
                    tr.push(TraceEvent::Accept { request: r, vehicle: ins.vehicle, position: ins.position });
                }
            }
            None => {
                rejected += 1;
                if let Some(tr) = trace.as_deref_mut() {
                    tr.push(TraceEvent::Reject { request: r });
                }
            }
        }
    }
    if let Some(tr) = trace {
        commit_before(instance, &mut fleet, &mut plan, &mut schedule, Ticks::MAX, |vehicle, _, to, kind, times| {
            tr.push(TraceEvent::Depart { epoch: to_epoch(times.depart) as u32, vehicle, to, kind });
        });
    }
    Some(rejected)
}

/// `Q̄` for a plan starting at `now`, with every reveal up to `known_epoch`
/// already handled. Scenarios are simulated in parallel and reduced in pool
/// order.
pub fn q_bar_with(
    instance: &Instance,
    fleet: &[VehicleState],
    plan: &RoutePlan,
    scenarios: &[Scenario],
    known_epoch: u32,
    now: Ticks,
) -> EvalResult {
    if compute_schedule(plan, instance, fleet, now).is_none() {
        return EvalResult::infeasible();
    }
    let per_scenario: Vec<u32> = scenarios
        .par_iter()
        .map(|s| simulate(instance, fleet, plan, &s.requests_after(known_epoch), now, None).expect("plan is feasible"))
        .collect();
    let mean = if per_scenario.is_empty() {
        0.0
    } else {
        per_scenario.iter().map(|&r| u64::from(r)).sum::<u64>() as f64 / per_scenario.len() as f64
    };
    EvalResult { mean, per_scenario }
}

/// `Q̄(a^{0..t}, plan, S)`: the plan covers epochs after the last committed
/// epoch of `log`.
pub fn q_bar(log: &DecisionLog, plan: &RoutePlan, pool: &ScenarioPool, instance: &Instance) -> EvalResult {
    q_bar_with(instance, &log.fleet, plan, pool.scenarios(), log.epoch, epoch_ticks(log.epoch + 1))
}

/// Per-scenario simulation traces of [`q_bar_with`].
pub fn q_bar_traces(
    instance: &Instance,
    fleet: &[VehicleState],
    plan: &RoutePlan,
    scenarios: &[Scenario],
    known_epoch: u32,
    now: Ticks,
) -> Vec<Vec<TraceEvent>> {
    scenarios
        .iter()
        .map(|s| {
            let mut trace = Vec::new();
            simulate(instance, fleet, plan, &s.requests_after(known_epoch), now, Some(&mut trace));
            trace
        })
        .collect()
}
