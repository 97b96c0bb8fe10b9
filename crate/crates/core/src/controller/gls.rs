//! Travel-cost local search with simulated annealing; no scenarios.

use super::gsa::insert_greedily;
use super::{execute_epoch, Clock, ControllerConfig, EpochSummary, RunError, RunOutput, TracePoint};
use crate::instance::{Instance, Request};
use crate::plan::{compute_schedule, total_travel_cost, DecisionLog, RoutePlan};
use crate::rng::{stream, Stream};
use crate::search::{anneal_accept, shake, MoveContext, Rotor};
use crate::time::{epoch_ticks, Ticks};

pub(super) fn run(instance: &Instance, config: &ControllerConfig) -> Result<RunOutput, RunError> {
    let mut log = DecisionLog::new(instance);
    let mut plan = RoutePlan::empty(instance.vehicles(), config.strategy, false);
    let mut rotor = Rotor::new(config.strategy, false);
    let mut moves = stream(config.seed, Stream::Moves);
    let mut accept_rng = stream(config.seed, Stream::Annealing);
    let mut annealing = config.annealing;
    let mut trace = Vec::new();
    let mut events = Vec::new();

    let mut improve = |log: &DecisionLog, plan: &mut RoutePlan, budget: usize, epoch: u32, now: Ticks, trace: &mut Vec<TracePoint>| {
        let ctx = MoveContext { instance, start_epoch: (now / epoch_ticks(1)) as u32 };
        let mut current = total_travel_cost(plan, instance, &log.fleet);
        if plan.visit_count() == 0 {
            return (current, 0);
        }
        let mut clock = Clock::start(config.clock, budget);
        let mut iterations = 0;
        while clock.spend() {
            iterations += 1;
            let (candidate, _) = shake(plan, &mut rotor, &ctx, &mut moves);
            if compute_schedule(&candidate, instance, &log.fleet, now).is_none() {
                continue;
            }
            let cost = total_travel_cost(&candidate, instance, &log.fleet);
            if anneal_accept(current, cost, &mut annealing, &mut accept_rng) {
                *plan = candidate;
                current = cost;
            }
        }
        trace.push(TracePoint { epoch, generation: 0, value: current });
        (current, iterations)
    };

    let first = epoch_ticks(1);
    let deterministic: Vec<Request> = instance.deterministic_requests().copied().collect();
    let (accepted, rejected) = insert_greedily(instance, &mut log, &mut plan, &deterministic, 0, first);
    let (value, iterations) = if deterministic.is_empty() {
        (0.0, 0)
    } else {
        improve(&log, &mut plan, config.offline_budget, 0, first, &mut trace)
    };
    events.push(EpochSummary { epoch: 0, revealed: deterministic, accepted, rejected, incumbent: Some(value), iterations });

    for t in 1..=instance.horizon() {
        let revealed = instance.reveals_at(t).to_vec();
        let (accepted, rejected) = insert_greedily(instance, &mut log, &mut plan, &revealed, t, epoch_ticks(t));
        execute_epoch(instance, &mut log, &mut plan, t)?;
        let (value, iterations) = if t < instance.horizon() {
            improve(&log, &mut plan, config.epoch_budget, t, epoch_ticks(t + 1), &mut trace)
        } else {
            (total_travel_cost(&plan, instance, &log.fleet), 0)
        };
        events.push(EpochSummary { epoch: t, revealed, accepted, rejected, incumbent: Some(value), iterations });
    }
    Ok(RunOutput { log, events, trace, final_plan: plan })
}
