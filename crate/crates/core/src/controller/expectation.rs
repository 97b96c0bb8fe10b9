//! The Expectation baseline: each epoch, every candidate action is scored
//! by solving each sampled scenario separately from the state it leads to.

use log::warn;
use rayon::prelude::*;

use super::gsa::insert_greedily;
use super::{ControllerConfig, EpochSummary, RunError, RunOutput, TracePoint};
use crate::eval::{apply_insertion, exact_q, simulate, try_to_serve, ExactMove, ExactRoot, OracleLimits};
use crate::instance::{Instance, Request, DEPOT};
use crate::plan::{compute_schedule, DecisionLog, LegKind, RoutePlan, VehicleState, VisitTimes};
use crate::rng::{stream, Stream};
use crate::scenario::{Scenario, ScenarioPool};
use crate::time::epoch_ticks;

/// Approximate cost of one scenario from the state after a candidate action.
pub trait ScenarioSolver: Sync {
    /// `root` is the post-action state and `plan` the backup plan's
    /// continuation from it.
    fn cost(&self, instance: &Instance, root: &ExactRoot, plan: &RoutePlan, scenario: &Scenario) -> f64;
}

/// Replays the scenario's reveals against the continuation plan with
/// cheapest insertion.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyInsertion;

impl ScenarioSolver for GreedyInsertion {
    fn cost(&self, instance: &Instance, root: &ExactRoot, plan: &RoutePlan, scenario: &Scenario) -> f64 {
        let now = epoch_ticks(root.epoch + 1);
        simulate(instance, &root.fleet, plan, &scenario.requests_after(root.epoch), now, None)
            .map_or(f64::INFINITY, f64::from)
    }
}

/// Optimal rejections of the scenario with full knowledge of it; only for
/// instances within the oracle limits.
#[derive(Debug, Clone, Copy)]
pub struct ExactScenario {
    pub limits: OracleLimits,
}

impl ScenarioSolver for ExactScenario {
    fn cost(&self, instance: &Instance, root: &ExactRoot, _plan: &RoutePlan, scenario: &Scenario) -> f64 {
        let root = ExactRoot { past_rejections: 0, ..root.clone() };
        match exact_q(instance, &root, std::slice::from_ref(scenario), &[1.0], &self.limits) {
            Ok(v) => v,
            Err(e) => {
                warn!("exact scenario solver refused: {e}");
                f64::INFINITY
            }
        }
    }
}

/// The backup plan after `moves` produced `root`: executed visits are
/// dropped; if the rest no longer schedules, pending requests are
/// re-inserted from scratch by cheapest insertion. `None` if that fails.
pub fn continuation_plan(instance: &Instance, plan: &RoutePlan, moves: &[ExactMove], root: &ExactRoot) -> Option<RoutePlan> {
    let mut p = plan.clone();
    for (k, mv) in moves.iter().enumerate() {
        match *mv {
            ExactMove::Serve(r) => {
                for route in &mut p.routes {
                    route.retain(|v| v.request != Some(r));
                }
            }
            ExactMove::Relocate(v) => {
                if p.routes[k].first().is_some_and(|x| x.is_relocation() && x.vertex == v) {
                    p.routes[k].remove(0);
                }
            }
            ExactMove::Wait | ExactMove::Return => {}
        }
    }
    let now = epoch_ticks(root.epoch + 1);
    if compute_schedule(&p, instance, &root.fleet, now).is_some() {
        return Some(p);
    }
    let mut q = RoutePlan::empty(plan.routes.len(), plan.strategy, plan.relocation);
    let mut pending = root.pending.clone();
    pending.sort();
    for r in pending {
        let ins = try_to_serve(instance, &q, &root.fleet, r, now)?;
        apply_insertion(&mut q, ins, r);
    }
    Some(q)
}

/// Mean solver cost of every candidate (`+∞` when the action is not
/// allowed or leaves no feasible continuation) and the index of the
/// cheapest; ties go to the earliest candidate.
pub fn choose_expectation(
    instance: &Instance,
    root: &ExactRoot,
    plan: &RoutePlan,
    candidates: &[Vec<ExactMove>],
    scenarios: &[Scenario],
    solver: &dyn ScenarioSolver,
) -> Option<(usize, Vec<f64>)> {
    if candidates.is_empty() {
        return None;
    }
    let costs: Vec<f64> = candidates
        .iter()
        .map(|moves| {
            let Some(post) = root.step(instance, moves) else { return f64::INFINITY };
            let Some(cont) = continuation_plan(instance, plan, moves, &post) else { return f64::INFINITY };
            if scenarios.is_empty() {
                return 0.0;
            }
            let per: Vec<f64> = scenarios.par_iter().map(|s| solver.cost(instance, &post, &cont, s)).collect();
            per.iter().sum::<f64>() / per.len() as f64
        })
        .collect();
    let mut best = 0;
    for (i, c) in costs.iter().enumerate() {
        if *c < costs[best] {
            best = i;
        }
    }
    Some((best, costs))
}

/// What the backup plan does at epoch `t`, one move per vehicle.
fn planned_moves(instance: &Instance, plan: &RoutePlan, fleet: &[VehicleState], t: u32) -> Option<Vec<ExactMove>> {
    let now = epoch_ticks(t);
    let schedule = compute_schedule(plan, instance, fleet, now)?;
    Some(
        plan.routes
            .iter()
            .zip(&schedule.routes)
            .map(|(route, times)| match route.first() {
                Some(v) if times.visits[0].depart == now => match v.request {
                    Some(r) => ExactMove::Serve(r),
                    None => ExactMove::Relocate(v.vertex),
                },
                None if times.return_depart == Some(now) => ExactMove::Return,
                _ => ExactMove::Wait,
            })
            .collect(),
    )
}

fn deviations(instance: &Instance, base: &[ExactMove], fleet: &[VehicleState], pending: &[Request], t: u32) -> Vec<Vec<ExactMove>> {
    let now = epoch_ticks(t);
    let mut out = vec![base.to_vec()];
    for (k, state) in fleet.iter().enumerate() {
        if state.done || state.free > now {
            continue;
        }
        let mut alts = vec![ExactMove::Wait];
        alts.extend(pending.iter().map(|&r| ExactMove::Serve(r)));
        alts.extend(
            instance
                .customers()
                .filter(|&v| v != state.vertex && instance.last_reveal_epoch(v) > t)
                .map(ExactMove::Relocate),
        );
        if state.vertex != DEPOT {
            alts.push(ExactMove::Return);
        }
        for alt in alts {
            if alt != base[k] {
                let mut moves = base.to_vec();
                moves[k] = alt;
                out.push(moves);
            }
        }
    }
    out
}

pub(super) fn run(instance: &Instance, config: &ControllerConfig) -> Result<RunOutput, RunError> {
    let mut log = DecisionLog::new(instance);
    let mut plan = RoutePlan::empty(instance.vehicles(), config.strategy, false);
    let mut pool = ScenarioPool::new(instance, config.pool_size, config.resample_period, 1, stream(config.seed, Stream::Pool));
    let mut events = Vec::new();
    let mut trace = Vec::new();

    let deterministic: Vec<Request> = instance.deterministic_requests().copied().collect();
    let (accepted, rejected) = insert_greedily(instance, &mut log, &mut plan, &deterministic, 0, epoch_ticks(1));
    events.push(EpochSummary { epoch: 0, revealed: deterministic, accepted, rejected, incumbent: None, iterations: 0 });

    for t in 1..=instance.horizon() {
        let revealed = instance.reveals_at(t).to_vec();
        let (accepted, rejected) = insert_greedily(instance, &mut log, &mut plan, &revealed, t, epoch_ticks(t));
        pool.resample(instance, t);
        let root = ExactRoot {
            epoch: t - 1,
            fleet: log.fleet.clone(),
            pending: plan.service_requests(),
            past_rejections: log.rejected,
        };
        let base = planned_moves(instance, &plan, &log.fleet, t).ok_or(RunError::Unschedulable(t))?;
        let mut candidates = deviations(instance, &base, &log.fleet, &root.pending, t);
        if candidates.len() > config.expectation_candidates {
            warn!(
                "epoch {t}: {} candidate actions, keeping the first {}",
                candidates.len(),
                config.expectation_candidates
            );
            candidates.truncate(config.expectation_candidates);
        }
        let (choice, value) = if candidates.len() == 1 {
            (0, None)
        } else {
            let (i, costs) =
                choose_expectation(instance, &root, &plan, &candidates, pool.scenarios(), &GreedyInsertion).expect("candidates");
            if costs[i].is_infinite() {
                (0, None)
            } else {
                (i, Some(costs[i]))
            }
        };
        let moves = &candidates[choice];
        let post = root.step(instance, moves).ok_or(RunError::Unschedulable(t))?;
        plan = continuation_plan(instance, &plan, moves, &post).ok_or(RunError::Unschedulable(t))?;
        for (k, mv) in moves.iter().enumerate() {
            let (before, after) = (log.fleet[k], post.fleet[k]);
            let kind = match *mv {
                ExactMove::Wait => continue,
                ExactMove::Serve(r) => LegKind::Service(r),
                ExactMove::Relocate(_) => LegKind::Relocation,
                ExactMove::Return => LegKind::Return,
            };
            let depart = epoch_ticks(t);
            let arrival = depart + instance.travel_ticks(before.vertex, after.vertex);
            let start = match kind {
                LegKind::Service(r) => after.free - instance.service_ticks(r.vertex),
                _ => arrival,
            };
            let times = VisitTimes { depart, arrival, start, end: after.free, free: after.free, load: after.load };
            log.depart(t, k, before.vertex, after.vertex, kind, &times);
        }
        log.fleet = post.fleet;
        log.close_epoch(t);
        if let Some(v) = value {
            trace.push(TracePoint { epoch: t, generation: u64::from(t), value: v });
        }
        events.push(EpochSummary { epoch: t, revealed, accepted, rejected, incumbent: value, iterations: candidates.len() });
    }
    Ok(RunOutput { log, events, trace, final_plan: plan })
}
