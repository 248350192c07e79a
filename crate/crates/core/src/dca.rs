//! Dynamic core assignment: keep the fewest workers that still meet the
//! per-ms wall-time budget.
//!
//! A windowed-mean threshold controller with hysteresis and a cooldown.
//! Growth triggers when the mean exceeds `up_threshold * budget`. Shrinking
//! triggers when the mean, rescaled by the predicted slowdown of running on
//! one worker fewer, is still below `down_threshold * budget`. At most one
//! change happens per `cooldown_ms`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DcaError {
    #[error("invalid DCA config: {0}")]
    Config(String),
    #[error("wall-time sample {0} ms is not a finite non-negative number")]
    Sample(f64),
    #[error("worker count {0} outside the configured bounds")]
    Workers(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DcaConfig {
    /// Wall-time target per model ms.
    pub budget_ms: f64,
    /// Number of per-ms samples averaged.
    pub window: usize,
    pub up_threshold: f64,
    pub down_threshold: f64,
    pub cooldown_ms: u32,
    pub min_workers: usize,
    pub max_workers: usize,
}

impl Default for DcaConfig {
    fn default() -> Self {
        Self {
            budget_ms: 1.0,
            window: 50,
            up_threshold: 0.9,
            down_threshold: 0.5,
            cooldown_ms: 100,
            min_workers: 1,
            max_workers: 8,
        }
    }
}

impl DcaConfig {
    pub fn validate(&self) -> Result<(), DcaError> {
        let fail = |m: &str| Err(DcaError::Config(m.to_string()));
        if !(self.budget_ms.is_finite() && self.budget_ms > 0.0) {
            return fail("budget_ms must be positive");
        }
        if self.window == 0 {
            return fail("window must be at least 1");
        }
        if !(0.0 < self.down_threshold && self.down_threshold < self.up_threshold && self.up_threshold <= 1.0) {
            return fail("thresholds must satisfy 0 < down < up <= 1");
        }
        if self.cooldown_ms == 0 {
            return fail("cooldown_ms must be at least 1");
        }
        if self.min_workers == 0 || self.min_workers > self.max_workers {
            return fail("worker bounds must satisfy 1 <= min <= max");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Hold,
    Grow,
    Shrink,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Hold => "hold",
            Decision::Grow => "grow",
            Decision::Shrink => "shrink",
        })
    }
}

#[derive(Debug, Clone)]
pub struct DcaState {
    config: DcaConfig,
    current: usize,
    samples: VecDeque<f64>,
    sum: f64,
    since_change: u32,
    /// Exponential moving average of wall time per worker count.
    observed: BTreeMap<usize, f64>,
}

impl DcaState {
    pub fn new(config: DcaConfig, initial_workers: usize) -> Result<Self, DcaError> {
        config.validate()?;
        if !(config.min_workers..=config.max_workers).contains(&initial_workers) {
            return Err(DcaError::Workers(initial_workers));
        }
        Ok(Self {
            samples: VecDeque::with_capacity(config.window),
            config,
            current: initial_workers,
            sum: 0.0,
            since_change: 0,
            observed: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &DcaConfig {
        &self.config
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn window_mean(&self) -> Option<f64> {
        (!self.samples.is_empty()).then(|| self.sum / self.samples.len() as f64)
    }

    /// Feeds one ms's wall time and returns the decision, already applied to
    /// [`current`](Self::current).
    pub fn observe(&mut self, ms_wall_time: f64) -> Result<Decision, DcaError> {
        if !(ms_wall_time.is_finite() && ms_wall_time >= 0.0) {
            return Err(DcaError::Sample(ms_wall_time));
        }
        if self.samples.len() == self.config.window {
            self.sum -= self.samples.pop_front().expect("window non-empty");
        }
        self.samples.push_back(ms_wall_time);
        self.sum += ms_wall_time;
        let alpha = 1.0 / self.config.window as f64;
        self.observed
            .entry(self.current)
            .and_modify(|m| *m += alpha * (ms_wall_time - *m))
            .or_insert(ms_wall_time);
        self.since_change = self.since_change.saturating_add(1);

        let cfg = &self.config;
        let mean = self.sum / self.samples.len() as f64;
        let cooled = self.since_change >= cfg.cooldown_ms;
        let decision = if cooled && mean > cfg.up_threshold * cfg.budget_ms && self.current < cfg.max_workers {
            Decision::Grow
        } else if cooled
            && self.current > cfg.min_workers
            && mean * self.efficiency_estimate(self.current, self.current - 1) < cfg.down_threshold * cfg.budget_ms
        {
            Decision::Shrink
        } else {
            Decision::Hold
        };
        match decision {
            Decision::Grow => self.current += 1,
            Decision::Shrink => self.current -= 1,
            Decision::Hold => return Ok(decision),
        }
        self.since_change = 0;
        Ok(decision)
    }

    /// Predicted wall-time multiplier for moving from `from` to `to` workers:
    /// the ratio of observed means when both counts have been seen,
    /// otherwise linear scaling `from / to`. Observed ratios are clamped
    /// between 1.0 and the linear factor, since table entries can come from
    /// different load phases.
    pub fn efficiency_estimate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return 1.0;
        }
        let linear = from as f64 / to as f64;
        match (self.observed.get(&from), self.observed.get(&to)) {
            (Some(&f), Some(&t)) if f > 0.0 => t / f,
            _ => return linear,
        }
        .clamp(linear.min(1.0), linear.max(1.0))
    }

    /// Seeds the observation table, e.g. from an earlier calibration run.
    pub fn record_observation(&mut self, workers: usize, mean_ms: f64) {
        self.observed.insert(workers, mean_ms);
    }
}

/// One row of the DCA trace CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcaTraceRow {
    pub model_ms: u64,
    pub wall_ms: f64,
    /// Workers in effect during this ms.
    pub workers: usize,
    pub decision: Decision,
}

/// Sum of allocated workers over all ms.
pub fn worker_ms_integral(trace: &[DcaTraceRow]) -> u64 {
    trace.iter().map(|r| r.workers as u64).sum()
}
