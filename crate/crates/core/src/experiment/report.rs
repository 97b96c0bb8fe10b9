use serde::{Deserialize, Serialize};

use crate::controller::{ControllerConfig, RunOutput};

/// Min, mean and max of the improvement iterations over epochs `1..=H`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationStats {
    pub min: usize,
    pub mean: f64,
    pub max: usize,
}

impl IterationStats {
    pub fn of(counts: &[usize]) -> IterationStats {
        if counts.is_empty() {
            return IterationStats::default();
        }
        IterationStats {
            min: *counts.iter().min().expect("non-empty"),
            mean: counts.iter().sum::<usize>() as f64 / counts.len() as f64,
            max: *counts.iter().max().expect("non-empty"),
        }
    }
}

/// Outcome of one `(instance, algorithm, seed)` run. A failed run keeps
/// its error and zero counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance_id: String,
    pub algorithm_id: String,
    pub seed: u64,
    pub rejections: u32,
    pub accepted: u32,
    pub revealed: u32,
    pub iterations: IterationStats,
    pub event_log_path: Option<String>,
    pub error: Option<String>,
}

impl RunReport {
    pub fn from_output(instance_id: &str, config: &ControllerConfig, output: &RunOutput) -> RunReport {
        let per_epoch: Vec<usize> = output.events.iter().filter(|e| e.epoch > 0).map(|e| e.iterations).collect();
        let revealed = output.events.iter().map(|e| e.revealed.len() as u32).sum();
        RunReport {
            instance_id: instance_id.to_string(),
            algorithm_id: config.algorithm_id(),
            seed: config.seed,
            rejections: output.log.rejected,
            accepted: output.log.accepted,
            revealed,
            iterations: IterationStats::of(&per_epoch),
            event_log_path: None,
            error: None,
        }
    }

    pub fn failed(instance_id: &str, config: &ControllerConfig, error: impl ToString) -> RunReport {
        RunReport {
            instance_id: instance_id.to_string(),
            algorithm_id: config.algorithm_id(),
            seed: config.seed,
            rejections: 0,
            accepted: 0,
            revealed: 0,
            iterations: IterationStats::default(),
            event_log_path: None,
            error: Some(error.to_string()),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}
