//! Monte Carlo scenarios of future reveals and the pool kept by the controller.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, Request, Vertex};

/// One sampled realization of the reveals in `[start_epoch, H]`, sorted by
/// `(epoch, vertex)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub start_epoch: u32,
    pub reveals: Vec<(u32, Vertex)>,
}

impl Scenario {
    pub fn new(start_epoch: u32, mut reveals: Vec<(u32, Vertex)>) -> Scenario {
        reveals.sort_unstable();
        Scenario { start_epoch, reveals }
    }

    pub fn empty(start_epoch: u32) -> Scenario {
        Scenario { start_epoch, reveals: vec![] }
    }

    /// Reveals strictly after `epoch`, as requests numbered in vertex order
    /// within each epoch.
    pub fn requests_after(&self, epoch: u32) -> Vec<Request> {
        let mut out = Vec::new();
        let mut last = u32::MAX;
        let mut idx = 0;
        for &(e, v) in self.reveals.iter().filter(|(e, _)| *e > epoch) {
            if e != last {
                last = e;
                idx = 0;
            }
            out.push(Request::new(v, e, idx));
            idx += 1;
        }
        out
    }

    /// `epoch:vertex` pairs separated by spaces.
    pub fn dump(&self) -> String {
        let parts: Vec<String> = self.reveals.iter().map(|(e, v)| format!("{e}:{v}")).collect();
        parts.join(" ")
    }
}

/// Bernoulli draw of every `(epoch, vertex)` with `P > 0`, restricted to
/// epochs in `[from_epoch, H]` that do not exceed the vertex's latest useful
/// epoch.
pub fn sample_scenario(instance: &Instance, from_epoch: u32, rng: &mut ChaCha8Rng) -> Scenario {
    let cells = candidate_cells(instance, from_epoch);
    draw(&cells, from_epoch, rng)
}

fn candidate_cells(instance: &Instance, from_epoch: u32) -> Vec<(u32, Vertex, f64)> {
    let mut cells = Vec::new();
    let bounds: Vec<u32> = (0..instance.vertex_count()).map(|v| instance.latest_useful_epoch(v)).collect();
    let mut slices: Vec<_> = instance.probability_slices().to_vec();
    slices.sort_by_key(|s| (s.start, s.vertex));
    for epoch in from_epoch.max(1)..=instance.horizon() {
        for s in &slices {
            if s.start <= epoch && epoch <= s.end && s.per_epoch > 0.0 && epoch <= bounds[s.vertex] {
                cells.push((epoch, s.vertex, s.per_epoch));
            }
        }
    }
    cells.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    cells
}

fn draw(cells: &[(u32, Vertex, f64)], from_epoch: u32, rng: &mut ChaCha8Rng) -> Scenario {
    let mut reveals = Vec::new();
    for &(epoch, vertex, p) in cells {
        if rng.gen::<f64>() < p {
            reveals.push((epoch, vertex));
        }
    }
    Scenario { start_epoch: from_epoch, reveals }
}

/// The `α` scenarios shared by all evaluations of one run.
#[derive(Debug, Clone)]
pub struct ScenarioPool {
    scenarios: Vec<Scenario>,
    size: usize,
    resample_period: usize,
    iterations_since_resample: usize,
    start_epoch: u32,
    rng: ChaCha8Rng,
}

impl ScenarioPool {
    /// Samples `size` scenarios covering `[from_epoch, H]`.
    pub fn new(instance: &Instance, size: usize, resample_period: usize, from_epoch: u32, rng: ChaCha8Rng) -> Self {
        let mut pool = ScenarioPool {
            scenarios: Vec::new(),
            size,
            resample_period: resample_period.max(1),
            iterations_since_resample: 0,
            start_epoch: from_epoch,
            rng,
        };
        pool.fill(instance, from_epoch);
        pool
    }

    /// Pool with fixed contents; used by oracles and tests.
    pub fn from_scenarios(scenarios: Vec<Scenario>, resample_period: usize, rng: ChaCha8Rng) -> Self {
        let start_epoch = scenarios.first().map_or(1, |s| s.start_epoch);
        ScenarioPool {
            size: scenarios.len(),
            scenarios,
            resample_period: resample_period.max(1),
            iterations_since_resample: 0,
            start_epoch,
            rng,
        }
    }

    fn fill(&mut self, instance: &Instance, from_epoch: u32) {
        let cells = candidate_cells(instance, from_epoch);
        self.scenarios = (0..self.size).map(|_| draw(&cells, from_epoch, &mut self.rng)).collect();
        self.start_epoch = from_epoch;
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn start_epoch(&self) -> u32 {
        self.start_epoch
    }

    pub fn resample_period(&self) -> usize {
        self.resample_period
    }

    pub fn iterations_since_resample(&self) -> usize {
        self.iterations_since_resample
    }

    /// Reconciles every scenario with the reveals realized at `epoch`:
    /// matching sampled reveals are dropped, the others are removed once past
    /// their latest useful epoch or delayed uniformly into
    /// `(epoch, latestUsefulEpoch]`. The pool then starts at `epoch + 1`.
    pub fn update(&mut self, realized: &[Request], epoch: u32, instance: &Instance) {
        let mut realized_count: HashMap<Vertex, usize> = HashMap::new();
        for r in realized.iter().filter(|r| r.reveal_epoch == epoch) {
            *realized_count.entry(r.vertex).or_default() += 1;
        }
        for scenario in &mut self.scenarios {
            let mut left = realized_count.clone();
            let mut kept = Vec::with_capacity(scenario.reveals.len());
            for &(e, v) in &scenario.reveals {
                if e > epoch {
                    kept.push((e, v));
                    continue;
                }
                if e < epoch {
                    continue;
                }
                if let Some(n) = left.get_mut(&v).filter(|n| **n > 0) {
                    *n -= 1;
                    continue;
                }
                let bound = instance.latest_useful_epoch(v);
                if epoch >= bound {
                    continue;
                }
                kept.push((self.rng.gen_range(epoch + 1..=bound), v));
            }
            kept.sort_unstable();
            scenario.reveals = kept;
            scenario.start_epoch = epoch + 1;
        }
        self.start_epoch = epoch + 1;
    }

    /// Fresh pool covering `[epoch + 1, H]`.
    pub fn resample(&mut self, instance: &Instance, epoch: u32) {
        self.fill(instance, epoch + 1);
        self.iterations_since_resample = 0;
    }

    /// Counts one improvement iteration; true when the pool is due for
    /// resampling.
    pub fn tick(&mut self) -> bool {
        self.iterations_since_resample += 1;
        self.iterations_since_resample >= self.resample_period
    }

    /// One scenario per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in &self.scenarios {
            let _ = writeln!(out, "{}", s.dump());
        }
        out
    }
}
