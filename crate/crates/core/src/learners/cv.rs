//! Running-mean control variate.

use serde::{Deserialize, Serialize};

/// Running average of all rewards seen so far, subtracted from the incoming
/// reward before it enters a gradient estimate. Centering the reward this way
/// reduces estimator variance without changing its expectation, because the
/// expected score function is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlVariateState {
    count: u64,
    mean: f64,
}

impl ControlVariateState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds `reward` into the running mean (including the current round)
    /// and returns `reward - mean`. The first reward always adjusts to 0.
    pub fn adjust(&mut self, reward: f64) -> f64 {
        self.count += 1;
        self.mean += (reward - self.mean) / self.count as f64;
        reward - self.mean
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}
