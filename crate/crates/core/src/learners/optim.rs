//! Gradient-ascent optimizers: plain SGD, Adadelta, and Adam.
//!
//! All steps take an ascent direction (the learners maximize reward) and
//! mutate the weights in place. Moment accumulators are sized lazily from the
//! first gradient, so constructors do not need the feature dimension up
//! front. A step that would write a non-finite weight is rejected and leaves
//! the weights untouched — that is the divergence diagnostic.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_dims, LearnerError, PolicyWeights};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use crate::float::FloatExt as _;

pub const ADAM_DEFAULT_BETA1: f64 = 0.9;
pub const ADAM_DEFAULT_BETA2: f64 = 0.999;
pub const ADAM_DEFAULT_EPSILON: f64 = 1e-8;
pub const ADADELTA_DEFAULT_RHO: f64 = 0.95;
pub const ADADELTA_DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdState {
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaState {
    pub rho: f64,
    pub epsilon: f64,
    acc_grad_sq: Vec<f64>,
    acc_update_sq: Vec<f64>,
}

/// Learning-rate adaptation schedule state; one of SGD, Adadelta, Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd(SgdState),
    Adadelta(AdadeltaState),
    Adam(AdamState),
}

impl Optimizer {
    pub fn sgd(learning_rate: f64) -> Self {
        Optimizer::Sgd(SgdState { learning_rate })
    }

    pub fn adam(learning_rate: f64) -> Self {
        Self::adam_with(
            learning_rate,
            ADAM_DEFAULT_BETA1,
            ADAM_DEFAULT_BETA2,
            ADAM_DEFAULT_EPSILON,
        )
    }

    pub fn adam_with(learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Optimizer::Adam(AdamState {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        })
    }

    pub fn adadelta() -> Self {
        Self::adadelta_with(ADADELTA_DEFAULT_RHO, ADADELTA_DEFAULT_EPSILON)
    }

    pub fn adadelta_with(rho: f64, epsilon: f64) -> Self {
        Optimizer::Adadelta(AdadeltaState {
            rho,
            epsilon,
            acc_grad_sq: Vec::new(),
            acc_update_sq: Vec::new(),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Optimizer::Sgd(_) => "sgd",
            Optimizer::Adadelta(_) => "adadelta",
            Optimizer::Adam(_) => "adam",
        }
    }

    /// Steps taken so far.
    pub fn step_count(&self) -> u64 {
        match self {
            Optimizer::Adam(s) => s.step,
            // SGD and Adadelta do not need a counter for their updates.
            _ => 0,
        }
    }

    /// Current explicit learning rate; Adadelta has none.
    pub fn learning_rate(&self) -> Option<f64> {
        match self {
            Optimizer::Sgd(s) => Some(s.learning_rate),
            Optimizer::Adam(s) => Some(s.learning_rate),
            Optimizer::Adadelta(_) => None,
        }
    }

    /// Multiplies the explicit learning rate by `factor` (annealing hook).
    /// No-op for Adadelta.
    pub fn scale_learning_rate(&mut self, factor: f64) {
        match self {
            Optimizer::Sgd(s) => s.learning_rate *= factor,
            Optimizer::Adam(s) => s.learning_rate *= factor,
            Optimizer::Adadelta(_) => {}
        }
    }

    /// One ascent step along `gradient`.
    pub fn step(
        &mut self,
        weights: &mut PolicyWeights,
        gradient: &[f64],
    ) -> Result<(), LearnerError> {
        check_dims(weights.dim(), gradient.len())?;
        let updated = match self {
            Optimizer::Sgd(state) => sgd_step(state, weights.as_slice(), gradient),
            Optimizer::Adadelta(state) => adadelta_step(state, weights.as_slice(), gradient),
            Optimizer::Adam(state) => adam_step(state, weights.as_slice(), gradient),
        };
        if updated.iter().any(|w| !w.is_finite()) {
            return Err(LearnerError::NonFiniteUpdate);
        }
        weights.as_mut_slice().copy_from_slice(&updated);
        Ok(())
    }
}

fn sgd_step(state: &SgdState, weights: &[f64], gradient: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .zip(gradient)
        .map(|(&w, &g)| w + state.learning_rate * g)
        .collect()
}

fn adam_step(state: &mut AdamState, weights: &[f64], gradient: &[f64]) -> Vec<f64> {
    if state.first_moment.is_empty() {
        state.first_moment = vec![0.0; weights.len()];
        state.second_moment = vec![0.0; weights.len()];
    }
    state.step += 1;
    let bias1 = 1.0 - state.beta1.powi(state.step as i32);
    let bias2 = 1.0 - state.beta2.powi(state.step as i32);
    weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let g = gradient[i];
            let m = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
            let v = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
            state.first_moment[i] = m;
            state.second_moment[i] = v;
            let m_hat = m / bias1;
            let v_hat = v / bias2;
            w + state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon)
        })
        .collect()
}

fn adadelta_step(state: &mut AdadeltaState, weights: &[f64], gradient: &[f64]) -> Vec<f64> {
    if state.acc_grad_sq.is_empty() {
        state.acc_grad_sq = vec![0.0; weights.len()];
        state.acc_update_sq = vec![0.0; weights.len()];
    }
    weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let g = gradient[i];
            state.acc_grad_sq[i] = state.rho * state.acc_grad_sq[i] + (1.0 - state.rho) * g * g;
            let update = ((state.acc_update_sq[i] + state.epsilon).sqrt()
                / (state.acc_grad_sq[i] + state.epsilon).sqrt())
                * g;
            state.acc_update_sq[i] =
                state.rho * state.acc_update_sq[i] + (1.0 - state.rho) * update * update;
            w + update
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_moves_along_the_gradient() {
        let mut opt = Optimizer::sgd(0.1);
        let mut w = PolicyWeights::zeros(2);
        opt.step(&mut w, &[1.0, -2.0]).unwrap();
        assert!((w.as_slice()[0] - 0.1).abs() < 1e-15);
        assert!((w.as_slice()[1] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        // Bias correction at t=1 makes m_hat/sqrt(v_hat) = sign(g).
        let mut opt = Optimizer::adam(1e-3);
        let mut w = PolicyWeights::zeros(1);
        opt.step(&mut w, &[0.3]).unwrap();
        assert!((w.as_slice()[0] - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn adadelta_zero_gradient_leaves_weights() {
        let mut opt = Optimizer::adadelta();
        let mut w = PolicyWeights::new(alloc::vec![0.7, -0.3]);
        for _ in 0..5 {
            opt.step(&mut w, &[0.0, 0.0]).unwrap();
        }
        assert_eq!(w.as_slice(), &[0.7, -0.3]);
    }

    #[test]
    fn adadelta_moves_without_explicit_learning_rate() {
        let mut opt = Optimizer::adadelta();
        assert_eq!(opt.learning_rate(), None);
        let mut w = PolicyWeights::zeros(1);
        opt.step(&mut w, &[1.0]).unwrap();
        assert!(w.as_slice()[0] > 0.0);
    }

    #[test]
    fn non_finite_update_is_rejected_and_weights_survive() {
        let mut opt = Optimizer::sgd(f64::INFINITY);
        let mut w = PolicyWeights::new(alloc::vec![0.5]);
        let err = opt.step(&mut w, &[1.0]).unwrap_err();
        assert_eq!(err, LearnerError::NonFiniteUpdate);
        assert_eq!(w.as_slice(), &[0.5]);
    }

    #[test]
    fn gradient_dimension_is_checked() {
        let mut opt = Optimizer::sgd(0.1);
        let mut w = PolicyWeights::zeros(2);
        assert!(matches!(
            opt.step(&mut w, &[1.0]).unwrap_err(),
            LearnerError::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn adam_ascends_a_quadratic() {
        // f(w) = -||w - w*||^2, gradient 2(w* - w). 200 steps at 0.05 must
        // come within 0.1 of the optimum for entries in [-1, 1].
        let target = [0.8, -1.0, 0.3, 0.6, -0.2];
        let mut opt = Optimizer::adam(0.05);
        let mut w = PolicyWeights::zeros(5);
        for _ in 0..200 {
            let gradient: alloc::vec::Vec<f64> = w
                .as_slice()
                .iter()
                .zip(&target)
                .map(|(&wi, &ti)| 2.0 * (ti - wi))
                .collect();
            opt.step(&mut w, &gradient).unwrap();
        }
        let dist: f64 = w
            .as_slice()
            .iter()
            .zip(&target)
            .map(|(&wi, &ti)| (wi - ti) * (wi - ti))
            .sum::<f64>()
            .sqrt();
        assert!(dist < 0.1, "Adam ended {dist} away from the optimum");
    }

    #[test]
    fn learning_rate_scaling() {
        let mut opt = Optimizer::adam(1e-2);
        opt.scale_learning_rate(0.5);
        assert_eq!(opt.learning_rate(), Some(5e-3));
        let mut ad = Optimizer::adadelta();
        ad.scale_learning_rate(0.5); // no-op
        assert_eq!(ad.learning_rate(), None);
    }
}
