//! Neighborhood moves on route plans, the round-robin operator rotation and
//! the Metropolis acceptance rule of the travel-cost baseline.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, Vertex};
use crate::plan::{RoutePlan, Strategy, Visit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    /// Move one visit to another position, possibly on another vehicle.
    Relocate,
    /// Exchange two visits.
    Swap,
    /// Reverse a segment of one route.
    Inverted2Opt,
    /// Exchange segments of 1 to 3 visits between two vehicles.
    CrossExchange,
    WaitIncrease,
    WaitDecrease,
    RelocationInsert,
    RelocationRemove,
}

impl MoveKind {
    pub fn applicable(self, strategy: Strategy, relocation: bool) -> bool {
        let relocation = relocation || strategy == Strategy::RelocationOnly;
        match self {
            MoveKind::WaitIncrease | MoveKind::WaitDecrease => strategy == Strategy::CustomWait,
            MoveKind::RelocationInsert | MoveKind::RelocationRemove => relocation,
            _ => true,
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MoveKind::Relocate => "relocate",
            MoveKind::Swap => "swap",
            MoveKind::Inverted2Opt => "inverted-2opt",
            MoveKind::CrossExchange => "cross-exchange",
            MoveKind::WaitIncrease => "wait-increase",
            MoveKind::WaitDecrease => "wait-decrease",
            MoveKind::RelocationInsert => "relocation-insert",
            MoveKind::RelocationRemove => "relocation-remove",
        };
        f.write_str(s)
    }
}

/// Fixed operator order: the four base moves, then the custom-wait moves,
/// then the relocation moves.
pub const ROTATION_ORDER: [MoveKind; 8] = [
    MoveKind::Relocate,
    MoveKind::Swap,
    MoveKind::Inverted2Opt,
    MoveKind::CrossExchange,
    MoveKind::WaitIncrease,
    MoveKind::WaitDecrease,
    MoveKind::RelocationInsert,
    MoveKind::RelocationRemove,
];

/// Applicable operators in rotation order. Relocation-only implies relocation.
pub fn rotation(strategy: Strategy, relocation: bool) -> Vec<MoveKind> {
    ROTATION_ORDER.into_iter().filter(|k| k.applicable(strategy, relocation)).collect()
}

/// Round-robin position in the operator list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rotor {
    ops: Vec<MoveKind>,
    next: usize,
}

impl Rotor {
    pub fn new(strategy: Strategy, relocation: bool) -> Rotor {
        Rotor { ops: rotation(strategy, relocation), next: 0 }
    }

    pub fn operators(&self) -> &[MoveKind] {
        &self.ops
    }

    pub fn advance(&mut self) -> MoveKind {
        let k = self.ops[self.next];
        self.next = (self.next + 1) % self.ops.len();
        k
    }
}

/// What moves need to know beyond the plan.
#[derive(Debug, Clone, Copy)]
pub struct MoveContext<'a> {
    pub instance: &'a Instance,
    /// First epoch the plan covers; relocation targets must still be able to
    /// reveal a request after it.
    pub start_epoch: u32,
}

/// Relocation targets: vertices that can still reveal a request after
/// `start_epoch` and have no planned service.
pub fn relocation_candidates(plan: &RoutePlan, ctx: &MoveContext<'_>) -> Vec<Vertex> {
    ctx.instance
        .customers()
        .filter(|&v| ctx.instance.last_reveal_epoch(v) > ctx.start_epoch && !plan.has_service_at(v))
        .collect()
}

fn positions(plan: &RoutePlan) -> Vec<(usize, usize)> {
    plan.routes.iter().enumerate().flat_map(|(k, r)| (0..r.len()).map(move |i| (k, i))).collect()
}

fn pick<T: Copy>(items: &[T], rng: &mut ChaCha8Rng) -> Option<T> {
    (!items.is_empty()).then(|| items[rng.gen_range(0..items.len())])
}

/// Applies `kind` at uniformly drawn targets. The result is structurally
/// valid but may be unschedulable; a move with no valid target returns the
/// plan unchanged.
pub fn apply_move(plan: &RoutePlan, kind: MoveKind, ctx: &MoveContext<'_>, rng: &mut ChaCha8Rng) -> RoutePlan {
    assert!(kind.applicable(plan.strategy, plan.relocation), "{kind} is not applicable to this plan");
    let mut out = plan.clone();
    let routes = &mut out.routes;
    match kind {
        MoveKind::Relocate => {
            if let Some((k, i)) = pick(&positions(plan), rng) {
                let v = routes[k].remove(i);
                let to = rng.gen_range(0..routes.len());
                let at = rng.gen_range(0..=routes[to].len());
                routes[to].insert(at, v);
            }
        }
        MoveKind::Swap => {
            let all = positions(plan);
            if all.len() >= 2 {
                let a = rng.gen_range(0..all.len());
                let mut b = rng.gen_range(0..all.len() - 1);
                if b >= a {
                    b += 1;
                }
                let ((ka, ia), (kb, ib)) = (all[a], all[b]);
                let tmp = routes[ka][ia];
                routes[ka][ia] = routes[kb][ib];
                routes[kb][ib] = tmp;
            }
        }
        MoveKind::Inverted2Opt => {
            let long: Vec<usize> = (0..routes.len()).filter(|&k| routes[k].len() >= 2).collect();
            if let Some(k) = pick(&long, rng) {
                let n = routes[k].len();
                let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                routes[k][a.min(b)..=a.max(b)].reverse();
            }
        }
        MoveKind::CrossExchange => {
            let busy: Vec<usize> = (0..routes.len()).filter(|&k| !routes[k].is_empty()).collect();
            if busy.len() >= 2 {
                let a = rng.gen_range(0..busy.len());
                let mut b = rng.gen_range(0..busy.len() - 1);
                if b >= a {
                    b += 1;
                }
                let (ka, kb) = (busy[a], busy[b]);
                let segment = |k: usize, rng: &mut ChaCha8Rng| {
                    let n = routes[k].len();
                    let len = rng.gen_range(1..=3.min(n));
                    let start = rng.gen_range(0..=n - len);
                    (start, len)
                };
                let (sa, la) = segment(ka, rng);
                let (sb, lb) = segment(kb, rng);
                let seg_a: Vec<Visit> = routes[ka].drain(sa..sa + la).collect();
                let seg_b: Vec<Visit> = routes[kb].drain(sb..sb + lb).collect();
                routes[ka].splice(sa..sa, seg_b);
                routes[kb].splice(sb..sb, seg_a);
            }
        }
        MoveKind::WaitIncrease => {
            if let Some((k, i)) = pick(&positions(plan), rng) {
                routes[k][i].wait += 1;
            }
        }
        MoveKind::WaitDecrease => {
            let waiting: Vec<_> = positions(plan).into_iter().filter(|&(k, i)| plan.routes[k][i].wait > 0).collect();
            if let Some((k, i)) = pick(&waiting, rng) {
                routes[k][i].wait -= 1;
            }
        }
        MoveKind::RelocationInsert => {
            if let Some(v) = pick(&relocation_candidates(plan, ctx), rng) {
                let k = rng.gen_range(0..routes.len());
                let at = rng.gen_range(0..=routes[k].len());
                routes[k].insert(at, Visit::relocation(v));
            }
        }
        MoveKind::RelocationRemove => {
            let relocs: Vec<_> =
                positions(plan).into_iter().filter(|&(k, i)| plan.routes[k][i].is_relocation()).collect();
            if let Some((k, i)) = pick(&relocs, rng) {
                routes[k].remove(i);
            }
        }
    }
    out
}

/// Next operator in the rotation applied to `plan`.
pub fn shake(plan: &RoutePlan, rotor: &mut Rotor, ctx: &MoveContext<'_>, rng: &mut ChaCha8Rng) -> (RoutePlan, MoveKind) {
    let kind = rotor.advance();
    (apply_move(plan, kind, ctx, rng), kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingState {
    pub temperature: f64,
    pub cooling_rate: f64,
}

impl Default for AnnealingState {
    fn default() -> Self {
        AnnealingState { temperature: 10.0, cooling_rate: 0.999 }
    }
}

/// Metropolis rule: improvements and ties are accepted, a worse candidate
/// with probability `exp((current - candidate) / T)`. Cools after every call.
pub fn anneal_accept(current: f64, candidate: f64, state: &mut AnnealingState, rng: &mut ChaCha8Rng) -> bool {
    assert!(state.temperature > 0.0, "temperature must stay positive");
    let accept = if candidate <= current {
        true
    } else if candidate.is_infinite() {
        false
    } else {
        rng.gen::<f64>() < ((current - candidate) / state.temperature).exp()
    };
    state.temperature *= state.cooling_rate;
    accept
}
