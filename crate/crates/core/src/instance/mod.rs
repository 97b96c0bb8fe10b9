//! Static problem data and the dynamic request model.

mod fixture;
mod format;
mod generator;
mod solomon;

pub use fixture::{fig1_fixture, Fig1Vertices};
pub use format::{read_dynamic_instance, write_dynamic_instance};
pub use generator::{
    generate_dynamic_instance, realized_dynamic_share, synthetic_base, ClassProfile, GeneratorOptions, SyntheticBase,
};
pub use solomon::parse_static_instance;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{epoch_ticks, to_real, Ticks};

pub type Vertex = usize;
pub const DEPOT: Vertex = 0;

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(usize),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("unknown instance class {0}")]
    UnknownClass(u8),
    #[error("class {0} instances are not supported: the source benchmark set is unavailable")]
    UnsupportedClass(u8),
}

/// A customer request `(vertex, revealEpoch)`; `arrival_index` orders reveals
/// that share an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Request {
    pub reveal_epoch: u32,
    pub arrival_index: u32,
    pub vertex: Vertex,
}

impl Request {
    pub fn new(vertex: Vertex, reveal_epoch: u32, arrival_index: u32) -> Self {
        Request { reveal_epoch, arrival_index, vertex }
    }

    pub fn is_deterministic(&self) -> bool {
        self.reveal_epoch == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub earliest: u32,
    pub latest: u32,
}

impl TimeWindow {
    pub fn new(earliest: u32, latest: u32) -> Self {
        TimeWindow { earliest, latest }
    }
}

/// Per-epoch reveal probability of one vertex, constant over `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySlice {
    pub start: u32,
    pub end: u32,
    pub vertex: Vertex,
    pub per_epoch: f64,
}

/// Raw fields of an [`Instance`]; validated by [`Instance::from_parts`].
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceParts {
    pub name: String,
    pub horizon: u32,
    /// Optional planar coordinates, kept for provenance only.
    pub coords: Vec<(f64, f64)>,
    /// Row-major `(n+1)^2` travel times in ticks.
    pub travel: Vec<Ticks>,
    pub demand: Vec<f64>,
    pub service: Vec<u32>,
    pub windows: Vec<TimeWindow>,
    pub vehicles: usize,
    pub capacity: f64,
    pub probability: Vec<ProbabilitySlice>,
    pub requests: Vec<Request>,
}

/// Immutable DS-VRPTW instance. Vertex 0 is the depot, customers are `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    parts: InstanceParts,
    size: usize,
    // dense P^t[i], indexed epoch * size + vertex
    prob: Vec<f64>,
    // last epoch with P^t[i] > 0, 0 if none
    last_reveal: Vec<u32>,
}

impl Instance {
    pub fn from_parts(mut parts: InstanceParts) -> Result<Instance, InstanceError> {
        let size = parts.demand.len();
        if size == 0 {
            return Err(InstanceError::Invalid("missing depot".into()));
        }
        let h = parts.horizon;
        if h == 0 {
            return Err(InstanceError::Invalid("horizon must be positive".into()));
        }
        let check_len = |what: &str, len: usize, want: usize| {
            if len != want {
                Err(InstanceError::Invalid(format!("{what} has {len} entries, expected {want}")))
            } else {
                Ok(())
            }
        };
        check_len("service", parts.service.len(), size)?;
        check_len("windows", parts.windows.len(), size)?;
        check_len("travel", parts.travel.len(), size * size)?;
        if !parts.coords.is_empty() {
            check_len("coords", parts.coords.len(), size)?;
        }
        if parts.vehicles == 0 {
            return Err(InstanceError::Invalid("fleet is empty".into()));
        }
        if !(parts.capacity >= 0.0) {
            return Err(InstanceError::Invalid("capacity must be nonnegative".into()));
        }
        for i in 0..size {
            for j in 0..size {
                let t = parts.travel[i * size + j];
                if t < 0 || (i == j && t != 0) {
                    return Err(InstanceError::Invalid(format!("bad travel time {i}->{j}: {t}")));
                }
            }
            let w = parts.windows[i];
            if w.earliest > w.latest {
                return Err(InstanceError::Invalid(format!("window of {i} is empty")));
            }
            if w.latest > h {
                return Err(InstanceError::Invalid(format!("window of {i} exceeds the horizon")));
            }
            if !(parts.demand[i] >= 0.0) {
                return Err(InstanceError::Invalid(format!("negative demand at {i}")));
            }
            if i == DEPOT {
                if parts.service[i] != 0 {
                    return Err(InstanceError::Invalid("depot service must be 0".into()));
                }
            } else {
                if w.earliest < 1 {
                    return Err(InstanceError::Invalid(format!("window of {i} starts before epoch 1")));
                }
                if parts.service[i] < 1 || parts.service[i] > h {
                    return Err(InstanceError::Invalid(format!("service duration of {i} outside [1,H]")));
                }
            }
        }
        let mut prob = vec![0.0; (h as usize + 1) * size];
        let mut last_reveal = vec![0; size];
        for s in &parts.probability {
            if s.vertex == DEPOT || s.vertex >= size {
                return Err(InstanceError::Invalid(format!("probability for bad vertex {}", s.vertex)));
            }
            if s.start < 1 || s.start > s.end || s.end > h {
                return Err(InstanceError::Invalid(format!("bad probability slice [{}, {}]", s.start, s.end)));
            }
            if !(0.0..=1.0).contains(&s.per_epoch) {
                return Err(InstanceError::Invalid(format!("probability {} outside [0,1]", s.per_epoch)));
            }
            for e in s.start..=s.end {
                prob[e as usize * size + s.vertex] = s.per_epoch;
            }
            if s.per_epoch > 0.0 {
                last_reveal[s.vertex] = last_reveal[s.vertex].max(s.end);
            }
        }
        parts.requests.sort();
        for pair in parts.requests.windows(2) {
            if pair[0].reveal_epoch == pair[1].reveal_epoch && pair[0].arrival_index == pair[1].arrival_index {
                return Err(InstanceError::Invalid(format!(
                    "duplicate arrival index {} at epoch {}",
                    pair[0].arrival_index, pair[0].reveal_epoch
                )));
            }
        }
        for r in &parts.requests {
            if r.vertex == DEPOT || r.vertex >= size || r.reveal_epoch > h {
                return Err(InstanceError::Invalid(format!("bad request {r:?}")));
            }
        }
        Ok(Instance { parts, size, prob, last_reveal })
    }

    pub fn parts(&self) -> &InstanceParts {
        &self.parts
    }

    pub fn name(&self) -> &str {
        &self.parts.name
    }

    pub fn horizon(&self) -> u32 {
        self.parts.horizon
    }

    /// Number of customer regions `n`.
    pub fn customer_count(&self) -> usize {
        self.size - 1
    }

    /// Number of vertices including the depot.
    pub fn vertex_count(&self) -> usize {
        self.size
    }

    pub fn customers(&self) -> std::ops::RangeInclusive<Vertex> {
        1..=self.size - 1
    }

    #[inline]
    pub fn travel_ticks(&self, from: Vertex, to: Vertex) -> Ticks {
        self.parts.travel[from * self.size + to]
    }

    pub fn travel_time(&self, from: Vertex, to: Vertex) -> f64 {
        to_real(self.travel_ticks(from, to))
    }

    #[inline]
    pub fn demand(&self, v: Vertex) -> f64 {
        self.parts.demand[v]
    }

    #[inline]
    pub fn service(&self, v: Vertex) -> u32 {
        self.parts.service[v]
    }

    #[inline]
    pub fn service_ticks(&self, v: Vertex) -> Ticks {
        epoch_ticks(self.parts.service[v])
    }

    #[inline]
    pub fn window(&self, v: Vertex) -> TimeWindow {
        self.parts.windows[v]
    }

    pub fn vehicles(&self) -> usize {
        self.parts.vehicles
    }

    pub fn capacity(&self) -> f64 {
        self.parts.capacity
    }

    /// `P^t[i]`; zero outside `[1, H]`.
    #[inline]
    pub fn reveal_probability(&self, epoch: u32, vertex: Vertex) -> f64 {
        if epoch == 0 || epoch > self.parts.horizon {
            return 0.0;
        }
        self.prob[epoch as usize * self.size + vertex]
    }

    /// Sum of `P^t[vertex]` over `t >= from`.
    pub fn future_reveal_mass(&self, vertex: Vertex, from: u32) -> f64 {
        (from.max(1)..=self.parts.horizon).map(|t| self.reveal_probability(t, vertex)).sum()
    }

    /// Last epoch at which `vertex` can be revealed (0 if never).
    pub fn last_reveal_epoch(&self, vertex: Vertex) -> u32 {
        self.last_reveal[vertex]
    }

    /// Latest departure (in ticks) toward a relocation at `vertex`: the
    /// vehicle must leave while a request for `vertex` can still appear
    /// later. `None` when the vertex never reveals anything.
    pub fn relocation_deadline(&self, vertex: Vertex) -> Option<Ticks> {
        match self.last_reveal[vertex] {
            0 => None,
            last => Some(epoch_ticks(last - 1)),
        }
    }

    pub fn probability_slices(&self) -> &[ProbabilitySlice] {
        &self.parts.probability
    }

    /// All requests of the replayed realization, sorted by `(epoch, arrival)`.
    pub fn requests(&self) -> &[Request] {
        &self.parts.requests
    }

    pub fn deterministic_requests(&self) -> impl Iterator<Item = &Request> {
        self.parts.requests.iter().filter(|r| r.reveal_epoch == 0)
    }

    /// Requests revealed at `epoch`, in arrival order.
    pub fn reveals_at(&self, epoch: u32) -> &[Request] {
        let reqs = &self.parts.requests;
        let lo = reqs.partition_point(|r| r.reveal_epoch < epoch);
        let hi = reqs.partition_point(|r| r.reveal_epoch <= epoch);
        &reqs[lo..hi]
    }

    /// Upper bound on the epoch at which a request for `vertex` can still be
    /// useful: `min(l_0 - t_{i,0} - d_i, l_i - t_{0,i})`, truncated and floored at 0.
    pub fn latest_useful_epoch(&self, vertex: Vertex) -> u32 {
        let l0 = epoch_ticks(self.window(DEPOT).latest);
        let li = epoch_ticks(self.window(vertex).latest);
        let a = l0 - self.travel_ticks(vertex, DEPOT) - self.service_ticks(vertex);
        let b = li - self.travel_ticks(DEPOT, vertex);
        let bound = a.min(b);
        if bound <= 0 {
            0
        } else {
            crate::time::to_epoch(bound) as u32
        }
    }

    /// Same instance with a different realization of requests.
    pub fn with_requests(&self, requests: Vec<Request>) -> Result<Instance, InstanceError> {
        let mut parts = self.parts.clone();
        parts.requests = requests;
        Instance::from_parts(parts)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Instance {
        self.parts.name = name.into();
        self
    }
}

/// Free function form of [`Instance::latest_useful_epoch`].
pub fn latest_useful_epoch(instance: &Instance, vertex: Vertex) -> u32 {
    instance.latest_useful_epoch(vertex)
}

/// Builds a travel matrix from planar points with the one-decimal truncation rule.
pub fn euclidean_travel(coords: &[(f64, f64)]) -> Vec<Ticks> {
    let n = coords.len();
    let mut travel = vec![0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                travel[i * n + j] = crate::time::truncate_to_ticks((dx * dx + dy * dy).sqrt());
            }
        }
    }
    travel
}
