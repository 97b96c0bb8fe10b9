use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{initial_fleet, VehicleState, VisitTimes};
use crate::instance::{Instance, Request, Vertex, DEPOT};
use crate::time::{ceil_epoch, epoch_ticks, Ticks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    /// `vehicle` is the planned vehicle at acceptance time.
    Accept { request: Request, vehicle: usize },
    Reject { request: Request },
}

impl Decision {
    pub fn request(&self) -> Request {
        match *self {
            Decision::Accept { request, .. } | Decision::Reject { request } => request,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LegKind {
    Service(Request),
    Relocation,
    Return,
}

/// A committed leg: the vehicle left `from` at `epoch` toward `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Departure {
    pub epoch: u32,
    pub vehicle: usize,
    pub from: Vertex,
    pub to: Vertex,
    pub kind: LegKind,
    pub arrival: Ticks,
    pub start: Ticks,
    pub free: Ticks,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub decisions: Vec<Decision>,
    pub departures: Vec<Departure>,
}

/// Committed actions `a^0..a^t` and the fleet state they lead to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionLog {
    pub records: Vec<EpochRecord>,
    pub fleet: Vec<VehicleState>,
    /// Last epoch whose action has been committed.
    pub epoch: u32,
    pub accepted: u32,
    pub rejected: u32,
}

impl DecisionLog {
    pub fn new(instance: &Instance) -> DecisionLog {
        DecisionLog {
            records: vec![EpochRecord { epoch: 0, ..Default::default() }],
            fleet: initial_fleet(instance),
            epoch: 0,
            accepted: 0,
            rejected: 0,
        }
    }

    fn record(&mut self, epoch: u32) -> &mut EpochRecord {
        if self.records.last().map_or(true, |r| r.epoch != epoch) {
            assert!(self.records.last().map_or(true, |r| r.epoch < epoch), "log records must advance");
            self.records.push(EpochRecord { epoch, ..Default::default() });
        }
        self.records.last_mut().expect("just pushed")
    }

    pub fn accept(&mut self, epoch: u32, request: Request, vehicle: usize) {
        self.accepted += 1;
        self.record(epoch).decisions.push(Decision::Accept { request, vehicle });
    }

    pub fn reject(&mut self, epoch: u32, request: Request) {
        self.rejected += 1;
        self.record(epoch).decisions.push(Decision::Reject { request });
    }

    pub fn depart(&mut self, epoch: u32, vehicle: usize, from: Vertex, to: Vertex, kind: LegKind, t: &VisitTimes) {
        let d = Departure { epoch, vehicle, from, to, kind, arrival: t.arrival, start: t.start, free: t.free };
        self.record(epoch).departures.push(d);
    }

    /// Marks epoch `epoch` as committed.
    pub fn close_epoch(&mut self, epoch: u32) {
        self.record(epoch);
        self.epoch = epoch;
    }

    pub fn decisions(&self) -> impl Iterator<Item = &Decision> {
        self.records.iter().flat_map(|r| r.decisions.iter())
    }

    pub fn departures(&self) -> impl Iterator<Item = &Departure> {
        self.records.iter().flat_map(|r| r.departures.iter())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("log serializes")
    }
}

/// The objective: rejections if the log is feasible, `+∞` otherwise.
pub fn omega(log: &DecisionLog, feasible: bool) -> f64 {
    if feasible {
        f64::from(log.rejected)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogViolation {
    #[error("request {0:?} decided {1} times")]
    Decisions(Request, usize),
    #[error("request {0:?} decided at the wrong epoch")]
    DecisionEpoch(Request),
    #[error("decision for unrevealed request {0:?}")]
    Unknown(Request),
    #[error("vehicle {vehicle}: {message}")]
    Route { vehicle: usize, message: String },
    #[error("accepted request {0:?} is never served")]
    Unserved(Request),
}

/// Independent replay of a log: every revealed request decided once at its
/// reveal epoch; routes respect departure times, windows, capacity and the
/// depot bounds; when `complete`, every accepted request is served and every
/// vehicle is back at the depot.
pub fn validate_log(log: &DecisionLog, instance: &Instance, complete: bool) -> Result<(), LogViolation> {
    let mut count: HashMap<Request, usize> = HashMap::new();
    let revealed: Vec<Request> =
        instance.requests().iter().copied().filter(|r| r.reveal_epoch <= log.epoch).collect();
    let mut accepted: HashMap<Request, usize> = HashMap::new();
    for rec in &log.records {
        for d in &rec.decisions {
            let r = d.request();
            if !revealed.contains(&r) {
                return Err(LogViolation::Unknown(r));
            }
            if r.reveal_epoch != rec.epoch {
                return Err(LogViolation::DecisionEpoch(r));
            }
            *count.entry(r).or_default() += 1;
            if let Decision::Accept { vehicle, .. } = *d {
                accepted.insert(r, vehicle);
            }
        }
    }
    for r in &revealed {
        let n = count.get(r).copied().unwrap_or(0);
        if n != 1 {
            return Err(LogViolation::Decisions(*r, n));
        }
    }

    let l0 = epoch_ticks(instance.window(DEPOT).latest);
    let start = epoch_ticks(instance.window(DEPOT).earliest.max(1));
    let mut served: HashMap<Request, usize> = HashMap::new();
    for k in 0..instance.vehicles() {
        let fail = |message: String| LogViolation::Route { vehicle: k, message };
        let mut pos = DEPOT;
        let mut free = start;
        let mut load = 0.0;
        let mut returned = false;
        for d in log.departures().filter(|d| d.vehicle == k) {
            if returned {
                return Err(fail("departs after returning".into()));
            }
            let dep = epoch_ticks(d.epoch);
            if d.from != pos {
                return Err(fail(format!("departs from {} but is at {pos}", d.from)));
            }
            if dep < ceil_epoch(free) {
                return Err(fail(format!("departs at epoch {} before being free", d.epoch)));
            }
            let arrival = dep + instance.travel_ticks(pos, d.to);
            if arrival != d.arrival {
                return Err(fail(format!("arrival {} recorded as {}", arrival, d.arrival)));
            }
            match d.kind {
                LegKind::Service(r) => {
                    // the accepting vehicle is not binding: plans may reassign
                    if !accepted.contains_key(&r) {
                        return Err(fail(format!("serves {r:?} which was never accepted")));
                    }
                    let w = instance.window(r.vertex);
                    let s = arrival.max(epoch_ticks(w.earliest)).max(epoch_ticks(r.reveal_epoch));
                    if s > epoch_ticks(w.latest) || d.start != s {
                        return Err(fail(format!("service of {r:?} starts at {} outside its window", d.start)));
                    }
                    if d.free < s + instance.service_ticks(r.vertex) {
                        return Err(fail(format!("leaves {r:?} before service ends")));
                    }
                    load += instance.demand(r.vertex);
                    if load > instance.capacity() + 1e-9 {
                        return Err(fail("capacity exceeded".into()));
                    }
                    *served.entry(r).or_default() += 1;
                    free = d.free;
                }
                LegKind::Relocation => {
                    free = d.free.max(arrival);
                }
                LegKind::Return => {
                    if d.to != DEPOT || arrival > l0 {
                        return Err(fail(format!("returns at {arrival} after the depot closes")));
                    }
                    returned = true;
                    free = arrival;
                }
            }
            pos = d.to;
        }
        if complete && pos != DEPOT {
            return Err(fail("does not end at the depot".into()));
        }
        let _ = free;
    }
    for (r, n) in &served {
        if *n != 1 {
            return Err(LogViolation::Decisions(*r, *n));
        }
    }
    if complete {
        for r in accepted.keys() {
            if !served.contains_key(r) {
                return Err(LogViolation::Unserved(*r));
            }
        }
    }
    Ok(())
}
