use rand_chacha::ChaCha8Rng;

use super::{execute_epoch, Clock, ControllerConfig, EpochSummary, RunError, RunOutput, TracePoint};
use crate::eval::{apply_insertion, insertion_candidates, q_bar_with, try_to_serve};
use crate::instance::{Instance, Request};
use crate::plan::{compute_schedule, DecisionLog, RoutePlan};
use crate::rng::{stream, Stream};
use crate::scenario::ScenarioPool;
use crate::search::{relocation_candidates, shake, MoveContext, Rotor};
use crate::time::{epoch_ticks, Ticks};

struct Gsa<'a> {
    instance: &'a Instance,
    config: &'a ControllerConfig,
    pool: ScenarioPool,
    rotor: Rotor,
    moves: ChaCha8Rng,
    log: DecisionLog,
    plan: RoutePlan,
    trace: Vec<TracePoint>,
    generation: u64,
}

pub(super) fn run(instance: &Instance, config: &ControllerConfig) -> Result<RunOutput, RunError> {
    let relocation = config.relocation_enabled();
    let mut gsa = Gsa {
        instance,
        config,
        pool: ScenarioPool::new(instance, config.pool_size, config.resample_period, 1, stream(config.seed, Stream::Pool)),
        rotor: Rotor::new(config.strategy, relocation),
        moves: stream(config.seed, Stream::Moves),
        log: DecisionLog::new(instance),
        plan: RoutePlan::empty(instance.vehicles(), config.strategy, relocation),
        trace: Vec::new(),
        generation: 0,
    };
    let mut events = Vec::new();

    let first = epoch_ticks(1);
    let deterministic: Vec<Request> = instance.deterministic_requests().copied().collect();
    let (accepted, rejected) = insert_greedily(instance, &mut gsa.log, &mut gsa.plan, &deterministic, 0, first);
    let mut iterations = 0;
    if !deterministic.is_empty() || relocation {
        iterations = gsa.improve(config.offline_budget, 0, first);
    }
    events.push(EpochSummary {
        epoch: 0,
        revealed: deterministic,
        accepted,
        rejected,
        incumbent: gsa.trace.last().map(|p| p.value),
        iterations,
    });

    for t in 1..=instance.horizon() {
        let revealed = instance.reveals_at(t).to_vec();
        let (accepted, rejected) = gsa.handle_requests(t, &revealed);
        execute_epoch(instance, &mut gsa.log, &mut gsa.plan, t)?;
        gsa.pool.update(&revealed, t, instance);
        gsa.generation += 1;
        let iterations = if t < instance.horizon() { gsa.improve(config.epoch_budget, t, epoch_ticks(t + 1)) } else { 0 };
        events.push(EpochSummary {
            epoch: t,
            revealed,
            accepted,
            rejected,
            incumbent: gsa.trace.last().map(|p| p.value),
            iterations,
        });
    }
    Ok(RunOutput { log: gsa.log, events, trace: gsa.trace, final_plan: gsa.plan })
}

/// Cheapest insertion of each request in turn; failures are rejected.
pub(super) fn insert_greedily(
    instance: &Instance,
    log: &mut DecisionLog,
    plan: &mut RoutePlan,
    requests: &[Request],
    epoch: u32,
    now: Ticks,
) -> (Vec<Request>, Vec<Request>) {
    let (mut accepted, mut rejected) = (Vec::new(), Vec::new());
    for &r in requests {
        match try_to_serve(instance, plan, &log.fleet, r, now) {
            Some(ins) => {
                apply_insertion(plan, ins, r);
                log.accept(epoch, r, ins.vehicle);
                accepted.push(r);
            }
            None => {
                log.reject(epoch, r);
                rejected.push(r);
            }
        }
    }
    (accepted, rejected)
}

fn owner(plan: &RoutePlan, r: Request) -> usize {
    plan.routes.iter().position(|route| route.iter().any(|v| v.request == Some(r))).expect("request is planned")
}

impl Gsa<'_> {
    fn q_bar(&self, plan: &RoutePlan, known: u32, now: Ticks) -> f64 {
        q_bar_with(self.instance, &self.log.fleet, plan, self.pool.scenarios(), known, now).mean
    }

    fn record(&mut self, epoch: u32, value: f64) {
        self.trace.push(TracePoint { epoch, generation: self.generation, value });
    }

    /// Sequential GSA decisions for the requests revealed at `t`: among the
    /// feasible modifications found within the insertion budget, the one
    /// with the lowest `Q̄` is adopted.
    fn handle_requests(&mut self, t: u32, revealed: &[Request]) -> (Vec<Request>, Vec<Request>) {
        let now = epoch_ticks(t);
        let (mut accepted, mut rejected) = (Vec::new(), Vec::new());
        for &r in revealed {
            let mut found = insertion_candidates(self.instance, &self.plan, &self.log.fleet, r, now);
            found.sort_by_key(|i| i.cost);
            found.truncate(self.config.insertion_budget);
            let mut candidates: Vec<RoutePlan> = found
                .into_iter()
                .map(|ins| {
                    let mut p = self.plan.clone();
                    apply_insertion(&mut p, ins, r);
                    p
                })
                .collect();
            if candidates.is_empty() {
                let ctx = MoveContext { instance: self.instance, start_epoch: t };
                for _ in 0..self.config.insertion_budget {
                    let (mut p, _) = shake(&self.plan, &mut self.rotor, &ctx, &mut self.moves);
                    if let Some(ins) = try_to_serve(self.instance, &p, &self.log.fleet, r, now) {
                        apply_insertion(&mut p, ins, r);
                        // the shake may have broken another route
                        if compute_schedule(&p, self.instance, &self.log.fleet, now).is_some() {
                            candidates.push(p);
                        }
                    }
                }
            }
            let chosen = match candidates.len() {
                0 => None,
                1 => candidates.pop(),
                _ => {
                    let values: Vec<f64> = candidates.iter().map(|p| self.q_bar(p, t, now)).collect();
                    let mut best = 0;
                    for (i, v) in values.iter().enumerate() {
                        if *v < values[best] {
                            best = i;
                        }
                    }
                    Some(candidates.swap_remove(best))
                }
            };
            match chosen {
                Some(p) => {
                    self.plan = p;
                    self.log.accept(t, r, owner(&self.plan, r));
                    accepted.push(r);
                }
                None => {
                    self.log.reject(t, r);
                    rejected.push(r);
                }
            }
        }
        if !revealed.is_empty() {
            self.generation += 1;
        }
        (accepted, rejected)
    }

    /// Hill-climbing on `Q̄` for a plan starting at `now`, reveals up to
    /// `known` handled. Only strict improvements are kept; the pool is
    /// resampled every `β` iterations and the incumbent re-evaluated.
    fn improve(&mut self, budget: usize, known: u32, now: Ticks) -> usize {
        let instance = self.instance;
        let start_epoch = (now / epoch_ticks(1)) as u32;
        let ctx = MoveContext { instance, start_epoch };
        debug_assert!(compute_schedule(&self.plan, instance, &self.log.fleet, now).is_some());
        let movable =
            self.plan.visit_count() > 0 || (self.plan.relocation && !relocation_candidates(&self.plan, &ctx).is_empty());
        let mut best = self.q_bar(&self.plan, known, now);
        self.record(known, best);
        if !movable {
            return 0;
        }
        let mut clock = Clock::start(self.config.clock, budget);
        let mut iterations = 0;
        while clock.spend() {
            iterations += 1;
            if self.pool.tick() {
                self.pool.resample(instance, known);
                self.generation += 1;
                best = self.q_bar(&self.plan, known, now);
                self.record(known, best);
                continue;
            }
            let (candidate, _) = shake(&self.plan, &mut self.rotor, &ctx, &mut self.moves);
            if candidate == self.plan {
                continue;
            }
            let value = self.q_bar(&candidate, known, now);
            if value < best {
                self.plan = candidate;
                best = value;
                self.record(known, best);
            }
        }
        iterations
    }
}
