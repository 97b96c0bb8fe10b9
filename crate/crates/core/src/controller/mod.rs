//! Online decision loops: scenario-based GSA, the travel-cost GLS baseline
//! and the Expectation baseline.

mod expectation;
mod gls;
mod gsa;

pub use expectation::{choose_expectation, continuation_plan, ExactScenario, GreedyInsertion, ScenarioSolver};

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, Request};
use crate::plan::{commit_before, compute_schedule, DecisionLog, RoutePlan, Strategy};
use crate::search::AnnealingState;
use crate::time::epoch_ticks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionRule {
    Gsa,
    Gls,
    Expectation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClockMode {
    /// Budgets count evaluator calls; runs are reproducible.
    Logical,
    /// Budgets are milliseconds.
    Wallclock,
}

impl FromStr for ClockMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logical" => Ok(ClockMode::Logical),
            "wallclock" => Ok(ClockMode::Wallclock),
            other => Err(format!("unknown clock mode {other:?} (expected logical or wallclock)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Scenarios in the pool (`α`).
    pub pool_size: usize,
    /// Improvement iterations between resamples (`β`).
    pub resample_period: usize,
    /// Insertion candidates or shake attempts per request (`δ_ins`).
    pub insertion_budget: usize,
    pub offline_budget: usize,
    pub epoch_budget: usize,
    pub strategy: Strategy,
    pub relocation: bool,
    pub rule: DecisionRule,
    pub seed: u64,
    pub clock: ClockMode,
    pub annealing: AnnealingState,
    /// Cap on candidate actions per epoch for the Expectation rule.
    pub expectation_candidates: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            pool_size: 30,
            resample_period: 30,
            insertion_budget: 20,
            offline_budget: 1000,
            epoch_budget: 200,
            strategy: Strategy::DriveFirst,
            relocation: false,
            rule: DecisionRule::Gsa,
            seed: 0,
            clock: ClockMode::Logical,
            annealing: AnnealingState::default(),
            expectation_candidates: 32,
        }
    }
}

impl ControllerConfig {
    /// Configuration for `GSA-df`, `GSA-dfr`, `GSA-ro`, `GSA-wf`, `GSA-cw`,
    /// `GLS-df` or `EXP`, other fields at their defaults.
    pub fn for_algorithm(id: &str) -> Result<ControllerConfig, ConfigError> {
        let base = ControllerConfig::default();
        let bad = || ConfigError::UnknownAlgorithm(id.to_string());
        if id == "EXP" {
            return Ok(ControllerConfig { rule: DecisionRule::Expectation, ..base });
        }
        let (rule, code) = id.split_once('-').ok_or_else(bad)?;
        let rule = match rule {
            "GSA" => DecisionRule::Gsa,
            "GLS" => DecisionRule::Gls,
            _ => return Err(bad()),
        };
        let (code, relocation) = match code.strip_suffix('r') {
            Some(c) if c != "" => (c, true),
            _ => (code, false),
        };
        let strategy: Strategy = code.parse().map_err(|_| bad())?;
        if rule == DecisionRule::Gls && (strategy != Strategy::DriveFirst || relocation) {
            return Err(bad());
        }
        Ok(ControllerConfig { rule, strategy, relocation, ..base })
    }

    pub fn algorithm_id(&self) -> String {
        match self.rule {
            DecisionRule::Expectation => "EXP".into(),
            DecisionRule::Gls => format!("GLS-{}", self.strategy),
            DecisionRule::Gsa => {
                let r = if self.relocation && self.strategy != Strategy::RelocationOnly { "r" } else { "" };
                format!("GSA-{}{r}", self.strategy)
            }
        }
    }

    /// Relocation-only implies relocation.
    pub fn relocation_enabled(&self) -> bool {
        self.relocation || self.strategy == Strategy::RelocationOnly
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("pool size", self.pool_size),
            ("resample period", self.resample_period),
            ("insertion budget", self.insertion_budget),
            ("epoch budget", self.epoch_budget),
            ("expectation candidates", self.expectation_candidates),
        ];
        for (what, v) in positive {
            if v == 0 {
                return Err(ConfigError::NonPositive(what));
            }
        }
        if !(self.annealing.temperature > 0.0) || !(0.0 < self.annealing.cooling_rate && self.annealing.cooling_rate < 1.0)
        {
            return Err(ConfigError::Annealing);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown algorithm {0:?} (expected GSA-df, GSA-dfr, GSA-ro, GSA-wf, GSA-cw, GLS-df or EXP)")]
    UnknownAlgorithm(String),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("annealing needs a positive temperature and a cooling rate in (0,1)")]
    Annealing,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("the plan became unschedulable at epoch {0}")]
    Unschedulable(u32),
}

/// One line of the structured event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: u32,
    pub revealed: Vec<Request>,
    pub accepted: Vec<Request>,
    pub rejected: Vec<Request>,
    /// Incumbent value after improvement: `Q̄` for GSA and EXP, travel cost for GLS.
    pub incumbent: Option<f64>,
    pub iterations: usize,
}

/// Incumbent value after a change. The generation advances whenever the
/// pool changes or the plan changes outside hill-climbing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub epoch: u32,
    pub generation: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub log: DecisionLog,
    pub events: Vec<EpochSummary>,
    pub trace: Vec<TracePoint>,
    pub final_plan: RoutePlan,
}

impl RunOutput {
    /// Event log as line-delimited JSON.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }
}

/// Evaluation budget, in calls or milliseconds depending on the clock mode.
pub(crate) struct Clock {
    mode: ClockMode,
    calls_left: usize,
    deadline: Instant,
}

impl Clock {
    pub(crate) fn start(mode: ClockMode, budget: usize) -> Clock {
        Clock { mode, calls_left: budget, deadline: Instant::now() + Duration::from_millis(budget as u64) }
    }

    /// Whether one more evaluation fits in the budget; consumes it.
    pub(crate) fn spend(&mut self) -> bool {
        match self.mode {
            ClockMode::Logical => {
                if self.calls_left == 0 {
                    return false;
                }
                self.calls_left -= 1;
                true
            }
            ClockMode::Wallclock => Instant::now() < self.deadline,
        }
    }
}

/// Commits the legs of `plan` that leave at `epoch` and closes the epoch.
pub(crate) fn execute_epoch(
    instance: &Instance,
    log: &mut DecisionLog,
    plan: &mut RoutePlan,
    epoch: u32,
) -> Result<(), RunError> {
    let mut schedule =
        compute_schedule(plan, instance, &log.fleet, epoch_ticks(epoch)).ok_or(RunError::Unschedulable(epoch))?;
    let mut fleet = log.fleet.clone();
    let mut legs = Vec::new();
    commit_before(instance, &mut fleet, plan, &mut schedule, epoch_ticks(epoch + 1), |k, from, to, kind, t| {
        legs.push((k, from, to, kind, *t));
    });
    for (k, from, to, kind, t) in legs {
        log.depart(epoch, k, from, to, kind, &t);
    }
    log.fleet = fleet;
    log.close_epoch(epoch);
    Ok(())
}

/// Runs the configured decision rule over the whole horizon.
pub fn run_online(instance: &Instance, config: &ControllerConfig) -> Result<RunOutput, RunError> {
    config.validate()?;
    match config.rule {
        DecisionRule::Gsa => gsa::run(instance, config),
        DecisionRule::Gls => gls::run(instance, config),
        DecisionRule::Expectation => expectation::run(instance, config),
    }
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionRule::Gsa => "GSA",
            DecisionRule::Gls => "GLS",
            DecisionRule::Expectation => "EXP",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_ids_round_trip() {
        for id in ["GSA-df", "GSA-dfr", "GSA-ro", "GSA-wf", "GSA-cw", "GSA-cwr", "GLS-df", "EXP"] {
            assert_eq!(ControllerConfig::for_algorithm(id).unwrap().algorithm_id(), id);
        }
        for bad in ["GSA", "GLS-wf", "MSA-df", "GSA-xx", "GSA-r"] {
            assert!(ControllerConfig::for_algorithm(bad).is_err(), "{bad}");
        }
        assert!(ControllerConfig::for_algorithm("GSA-ro").unwrap().relocation_enabled());
    }

    #[test]
    fn validation_rejects_zero_budgets() {
        let c = ControllerConfig { epoch_budget: 0, ..Default::default() };
        assert_eq!(c.validate(), Err(ConfigError::NonPositive("epoch budget")));
        assert_eq!(ControllerConfig::default().validate(), Ok(()));
    }

    #[test]
    fn logical_clock_counts_calls() {
        let mut c = Clock::start(ClockMode::Logical, 3);
        assert_eq!((0..5).filter(|_| c.spend()).count(), 3);
    }
}
