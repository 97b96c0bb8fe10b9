//! Exhaustive expected-rejection oracle for tiny instances.
//!
//! A dynamic program over epochs. At each epoch the scenarios still
//! consistent with the history are split by what they reveal; the policy
//! accepts any subset of the reveals and then picks one action per idle
//! vehicle: wait, drive to a pending request and serve it, relocate to a
//! customer vertex that may still reveal a request, or return to the depot for good. Every plan-driven
//! simulation lies inside this action space, so the optimum never exceeds
//! the greedy estimate.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::instance::{Instance, Request, Vertex, DEPOT};
use crate::plan::{DecisionLog, RoutePlan, VehicleState};
use crate::scenario::Scenario;
use crate::time::{ceil_epoch, epoch_ticks, Ticks};

/// Size bounds past which the oracle refuses to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    /// Vertices including the depot.
    pub max_vertices: usize,
    pub max_remaining_epochs: u32,
    pub max_scenarios: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_vertices: 6, max_remaining_epochs: 12, max_scenarios: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{what} is {value}, above the oracle limit of {limit}")]
    TooLarge { what: &'static str, value: usize, limit: usize },
    #[error("scenario weights must be positive and match the scenarios")]
    BadWeights,
}

/// Starting point of the oracle: everything up to `epoch` is committed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRoot {
    pub epoch: u32,
    pub fleet: Vec<VehicleState>,
    /// Accepted requests not yet served.
    pub pending: Vec<Request>,
    pub past_rejections: u32,
}

/// One vehicle's action in [`ExactRoot::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactMove {
    Wait,
    Serve(Request),
    Relocate(Vertex),
    Return,
}

impl ExactRoot {
    pub fn from_log(log: &DecisionLog, plan: &RoutePlan) -> ExactRoot {
        ExactRoot {
            epoch: log.epoch,
            fleet: log.fleet.clone(),
            pending: plan.service_requests(),
            past_rejections: log.rejected,
        }
    }

    /// Applies one move per vehicle at epoch `self.epoch + 1`, with no
    /// reveals at that epoch. Relocations may target any customer here;
    /// the relocation rule only binds inside the search. `None` if a move
    /// is not allowed.
    pub fn step(&self, instance: &Instance, moves: &[ExactMove]) -> Option<ExactRoot> {
        assert_eq!(moves.len(), self.fleet.len(), "one move per vehicle");
        let epoch = self.epoch + 1;
        let now = epoch_ticks(epoch);
        let mut next = self.clone();
        next.epoch = epoch;
        for (state, mv) in next.fleet.iter_mut().zip(moves) {
            let idle = !state.done && state.free <= now;
            let veh = Veh::of(state);
            let moved = match *mv {
                ExactMove::Wait => continue,
                _ if !idle => return None,
                ExactMove::Serve(r) => {
                    let i = next.pending.iter().position(|p| *p == r)?;
                    next.pending.remove(i);
                    serve(instance, &veh, r.vertex, r.reveal_epoch, now)?
                }
                ExactMove::Relocate(v) => {
                    if v == DEPOT || v == state.vertex {
                        return None;
                    }
                    relocate(instance, &veh, v, now)
                }
                ExactMove::Return => go_home(instance, &veh, now)?,
            };
            *state = VehicleState {
                vertex: moved.vertex as Vertex,
                free: moved.free,
                load: f64::from_bits(moved.load),
                at_relocation: matches!(mv, ExactMove::Relocate(_)),
                done: moved.done,
            };
        }
        Some(next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Veh {
    vertex: u16,
    free: Ticks,
    load: u64,
    done: bool,
}

impl Veh {
    fn of(s: &VehicleState) -> Veh {
        Veh { vertex: s.vertex as u16, free: s.free, load: s.load.to_bits(), done: s.done }
    }

    fn load(&self) -> f64 {
        f64::from_bits(self.load)
    }
}

fn serve(instance: &Instance, v: &Veh, j: Vertex, release: u32, now: Ticks) -> Option<Veh> {
    let load = v.load() + instance.demand(j);
    if load > instance.capacity() + 1e-9 {
        return None;
    }
    let w = instance.window(j);
    let arrival = now + instance.travel_ticks(v.vertex as Vertex, j);
    let start = arrival.max(epoch_ticks(w.earliest)).max(epoch_ticks(release));
    if start > epoch_ticks(w.latest) {
        return None;
    }
    Some(Veh { vertex: j as u16, free: start + instance.service_ticks(j), load: load.to_bits(), done: false })
}

/// Relocations follow the plan rule: the vertex must still be able to
/// reveal a request later, unless an accepted request waits there.
fn may_relocate(instance: &Instance, to: Vertex, epoch: u32, pending: &[(u32, u16)]) -> bool {
    instance.last_reveal_epoch(to) > epoch || pending.iter().any(|&(_, j)| j as Vertex == to)
}

fn relocate(instance: &Instance, v: &Veh, to: Vertex, now: Ticks) -> Veh {
    Veh { vertex: to as u16, free: now + instance.travel_ticks(v.vertex as Vertex, to), load: v.load, done: false }
}

fn go_home(instance: &Instance, v: &Veh, now: Ticks) -> Option<Veh> {
    let arrival = now + instance.travel_ticks(v.vertex as Vertex, DEPOT);
    (arrival <= epoch_ticks(instance.window(DEPOT).latest)).then_some(Veh {
        vertex: DEPOT as u16,
        free: arrival,
        load: v.load,
        done: true,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct State {
    vehs: Vec<Veh>,
    /// `(release epoch, vertex)`, sorted.
    pending: Vec<(u32, u16)>,
}

struct Oracle<'a> {
    instance: &'a Instance,
    horizon: u32,
    reveals: Vec<Vec<(u32, Vertex)>>,
    weights: Vec<f64>,
    shortest: Vec<Ticks>,
    before: HashMap<(u32, u64, State), f64>,
    after: HashMap<(u32, u64, State), f64>,
}

impl<'a> Oracle<'a> {
    fn new(instance: &'a Instance, root_epoch: u32, scenarios: &[Scenario], weights: &[f64]) -> Oracle<'a> {
        let n = instance.vertex_count();
        let mut sp: Vec<Ticks> = (0..n * n).map(|k| instance.travel_ticks(k / n, k % n)).collect();
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = sp[i * n + m] + sp[m * n + j];
                    if via < sp[i * n + j] {
                        sp[i * n + j] = via;
                    }
                }
            }
        }
        let horizon = instance.horizon();
        Oracle {
            instance,
            horizon,
            reveals: scenarios
                .iter()
                .map(|s| s.reveals.iter().copied().filter(|&(e, _)| e > root_epoch && e <= horizon).collect())
                .collect(),
            weights: weights.to_vec(),
            shortest: sp,
            before: HashMap::new(),
            after: HashMap::new(),
        }
    }

    fn sp(&self, a: Vertex, b: Vertex) -> Ticks {
        self.shortest[a * self.instance.vertex_count() + b]
    }

    /// Idle vehicles share the same free time; done vehicles are interchangeable.
    fn canonical(&self, mut s: State, epoch: u32) -> State {
        let now = epoch_ticks(epoch);
        for v in &mut s.vehs {
            if v.done {
                *v = Veh { vertex: DEPOT as u16, free: 0, load: 0, done: true };
            } else if v.free < now {
                v.free = now;
            }
        }
        s.vehs.sort_unstable();
        s.pending.sort_unstable();
        s
    }

    /// Necessary conditions for finishing: each vehicle can still get home
    /// and each pending request can still be reached by some vehicle.
    fn viable(&self, s: &State, epoch: u32) -> bool {
        let now = epoch_ticks(epoch);
        let l0 = epoch_ticks(self.instance.window(DEPOT).latest);
        let leave = |v: &Veh| ceil_epoch(v.free).max(now);
        for v in s.vehs.iter().filter(|v| !v.done) {
            if leave(v) + self.sp(v.vertex as Vertex, DEPOT) > l0 {
                return false;
            }
        }
        s.pending.iter().all(|&(_, j)| {
            let lj = epoch_ticks(self.instance.window(j as Vertex).latest);
            s.vehs.iter().any(|v| !v.done && leave(v) + self.sp(v.vertex as Vertex, j as Vertex) <= lj)
        })
    }

    fn terminal(s: &State) -> f64 {
        let home = s.vehs.iter().all(|v| v.done || v.vertex as Vertex == DEPOT);
        if s.pending.is_empty() && home {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Expected future rejections at the start of `epoch`, over the scenarios in `group`.
    fn value(&mut self, epoch: u32, group: u64, state: State) -> f64 {
        if epoch > self.horizon {
            return Self::terminal(&state);
        }
        let state = self.canonical(state, epoch);
        if !self.viable(&state, epoch) {
            return f64::INFINITY;
        }
        let key = (epoch, group, state);
        if let Some(&v) = self.before.get(&key) {
            return v;
        }
        let mut parts: BTreeMap<Vec<Vertex>, (u64, f64)> = BTreeMap::new();
        for s in 0..self.reveals.len() {
            if group & (1 << s) != 0 {
                let here: Vec<Vertex> = self.reveals[s].iter().filter(|(e, _)| *e == epoch).map(|&(_, v)| v).collect();
                let entry = parts.entry(here).or_insert((0, 0.0));
                entry.0 |= 1 << s;
                entry.1 += self.weights[s];
            }
        }
        let total: f64 = parts.values().map(|p| p.1).sum();
        let mut out = 0.0;
        for (here, (mask, w)) in parts {
            let v = self.decide(epoch, mask, &key.2, &here);
            if v.is_infinite() {
                out = f64::INFINITY;
                break;
            }
            out += w / total * v;
        }
        self.before.insert(key, out);
        out
    }

    /// Best acceptance subset for the reveals `here`, then the best action.
    fn decide(&mut self, epoch: u32, group: u64, state: &State, here: &[Vertex]) -> f64 {
        let mut best = f64::INFINITY;
        for subset in 0u32..(1 << here.len()) {
            let rejected = here.len() as u32 - subset.count_ones();
            if f64::from(rejected) >= best {
                continue;
            }
            let mut s = state.clone();
            for (k, &v) in here.iter().enumerate() {
                if subset & (1 << k) != 0 {
                    s.pending.push((epoch, v as u16));
                }
            }
            s.pending.sort_unstable();
            if !self.viable(&s, epoch) {
                continue;
            }
            let v = f64::from(rejected) + self.act(epoch, group, s);
            if v < best {
                best = v;
            }
        }
        best
    }

    fn act(&mut self, epoch: u32, group: u64, state: State) -> f64 {
        let key = (epoch, group, state);
        if let Some(&v) = self.after.get(&key) {
            return v;
        }
        let mut best = f64::INFINITY;
        let mut cur = key.2.clone();
        self.joint(epoch, group, 0, &mut cur, &mut best);
        self.after.insert(key, best);
        best
    }

    fn joint(&mut self, epoch: u32, group: u64, k: usize, cur: &mut State, best: &mut f64) {
        if k == cur.vehs.len() {
            let v = self.value(epoch + 1, group, cur.clone());
            if v < *best {
                *best = v;
            }
            return;
        }
        let now = epoch_ticks(epoch);
        let veh = cur.vehs[k];
        // wait (also the only option for busy or finished vehicles)
        self.joint(epoch, group, k + 1, cur, best);
        if veh.done || veh.free > now {
            return;
        }
        // identical vehicles: only the first idle copy needs to branch on
        // the same move; keep it simple and branch on every copy
        let mut tried: Vec<(u32, u16)> = Vec::new();
        for i in 0..cur.pending.len() {
            let (release, j) = cur.pending[i];
            if tried.contains(&(release, j)) {
                continue;
            }
            tried.push((release, j));
            if let Some(next) = serve(self.instance, &veh, j as Vertex, release, now) {
                let taken = cur.pending.remove(i);
                cur.vehs[k] = next;
                self.joint(epoch, group, k + 1, cur, best);
                cur.vehs[k] = veh;
                cur.pending.insert(i, taken);
            }
        }
        for to in self.instance.customers() {
            if to == veh.vertex as Vertex || !may_relocate(self.instance, to, epoch, &cur.pending) {
                continue;
            }
            cur.vehs[k] = relocate(self.instance, &veh, to, now);
            self.joint(epoch, group, k + 1, cur, best);
        }
        if veh.vertex as Vertex != DEPOT {
            if let Some(next) = go_home(self.instance, &veh, now) {
                cur.vehs[k] = next;
                self.joint(epoch, group, k + 1, cur, best);
            }
        }
        cur.vehs[k] = veh;
    }
}

fn check(instance: &Instance, root: &ExactRoot, scenarios: &[Scenario], weights: &[f64], limits: &OracleLimits) -> Result<(), OracleError> {
    let too_large = |what, value: usize, limit: usize| {
        if value > limit {
            Err(OracleError::TooLarge { what, value, limit })
        } else {
            Ok(())
        }
    };
    too_large("vertex count", instance.vertex_count(), limits.max_vertices)?;
    too_large("remaining horizon", instance.horizon().saturating_sub(root.epoch) as usize, limits.max_remaining_epochs as usize)?;
    too_large("scenario count", scenarios.len(), limits.max_scenarios.min(64))?;
    if weights.len() != scenarios.len() || weights.iter().any(|w| !(*w > 0.0)) {
        return Err(OracleError::BadWeights);
    }
    Ok(())
}

fn root_state(root: &ExactRoot) -> State {
    State {
        vehs: root.fleet.iter().map(Veh::of).collect(),
        pending: root.pending.iter().map(|r| (r.reveal_epoch, r.vertex as u16)).collect(),
    }
}

/// Optimal expected rejections (past plus future) from `root` when the
/// future follows one of `scenarios` with the given weights, and decisions
/// may only use what has been revealed so far.
pub fn exact_q(
    instance: &Instance,
    root: &ExactRoot,
    scenarios: &[Scenario],
    weights: &[f64],
    limits: &OracleLimits,
) -> Result<f64, OracleError> {
    check(instance, root, scenarios, weights, limits)?;
    if scenarios.is_empty() {
        return Ok(f64::from(root.past_rejections));
    }
    let mut oracle = Oracle::new(instance, root.epoch, scenarios, weights);
    let all = if scenarios.len() == 64 { u64::MAX } else { (1u64 << scenarios.len()) - 1 };
    Ok(f64::from(root.past_rejections) + oracle.value(root.epoch + 1, all, root_state(root)))
}

/// Weighted mean of the clairvoyant optimum of each scenario, plus past
/// rejections.
pub fn two_stage_value(
    instance: &Instance,
    root: &ExactRoot,
    scenarios: &[Scenario],
    weights: &[f64],
    limits: &OracleLimits,
) -> Result<f64, OracleError> {
    check(instance, root, scenarios, weights, limits)?;
    let total: f64 = weights.iter().sum();
    let mut out = 0.0;
    for (s, w) in scenarios.iter().zip(weights) {
        let mut oracle = Oracle::new(instance, root.epoch, std::slice::from_ref(s), &[1.0]);
        out += w / total * oracle.value(root.epoch + 1, 1, root_state(root));
    }
    Ok(f64::from(root.past_rejections) + if scenarios.is_empty() { 0.0 } else { out })
}
