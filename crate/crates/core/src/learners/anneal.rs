//! Temperature and learning-rate annealing.

use serde::{Deserialize, Serialize};

use super::Optimizer;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use crate::float::FloatExt as _;

/// Exponential annealing that kicks in at round `k_start`:
///
/// `T_k = decay^max(k - k_start, 0)` with decay 0.99 by default, so the
/// temperature stays at 1 through round `k_start` and decreases strictly
/// afterwards. On every tick the same factor is applied to the optimizer's
/// learning rate, i.e. `gamma_k = gamma_{k-1} * T_k` (a compounding decay,
/// faster than the temperature itself).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    k_start: u64,
    decay: f64,
    current_temperature: f64,
}

pub const DEFAULT_DECAY: f64 = 0.99;

impl AnnealSchedule {
    pub fn new(k_start: u64) -> Self {
        Self::with_decay(k_start, DEFAULT_DECAY)
    }

    pub fn with_decay(k_start: u64, decay: f64) -> Self {
        Self {
            k_start,
            decay,
            current_temperature: 1.0,
        }
    }

    pub fn k_start(&self) -> u64 {
        self.k_start
    }

    /// Closed-form temperature at round `k` without mutating the schedule.
    pub fn temperature_at(&self, k: u64) -> f64 {
        let exponent = k.saturating_sub(self.k_start);
        if exponent == 0 {
            1.0
        } else {
            self.decay.powf(exponent as f64)
        }
    }

    /// Temperature after the most recent tick.
    pub fn current_temperature(&self) -> f64 {
        self.current_temperature
    }

    /// Advances to round `k`: records `T_k` and decays the optimizer's
    /// learning rate by it. Returns `(T_k, gamma_k)`; the learning rate is
    /// `None` for optimizers without one (Adadelta).
    pub fn tick(&mut self, k: u64, optimizer: &mut Optimizer) -> (f64, Option<f64>) {
        let temperature = self.temperature_at(k);
        self.current_temperature = temperature;
        optimizer.scale_learning_rate(temperature);
        (temperature, optimizer.learning_rate())
    }
}
