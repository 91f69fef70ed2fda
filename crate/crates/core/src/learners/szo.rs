//! One-point stochastic zeroth-order optimization.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use super::policy::{argmax, candidate_scores};
use super::{
    check_dims, ControlVariateState, Learner, LearnerError, LearnerSnapshot, Optimizer,
    PolicyWeights, Proposal,
};
use crate::env::ClientInstance;

/// Draws the Gaussian perturbation `epsilon ~ N(0, sigma^2 I)`.
pub fn szo_perturbation<R: Rng + ?Sized>(dim: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Proposes the argmax candidate under the perturbed weights `w + epsilon`
/// (the "Viterbi" choice of the perturbed model). Ties go to the lowest
/// index.
pub fn szo_propose(
    weights: &PolicyWeights,
    candidates: &[crate::env::Candidate],
    epsilon: &[f64],
) -> Result<usize, LearnerError> {
    check_dims(weights.dim(), epsilon.len())?;
    let perturbed = PolicyWeights::new(
        weights
            .as_slice()
            .iter()
            .zip(epsilon)
            .map(|(&w, &e)| w + e)
            .collect(),
    );
    let scores = candidate_scores(&perturbed, candidates)?;
    if scores.is_empty() {
        return Err(LearnerError::NoCandidates);
    }
    Ok(argmax(&scores))
}

/// One-point gradient estimate: the (control-variate adjusted) reward times
/// the perturbation that produced it. This is an ascent direction on the
/// Gaussian-smoothed objective `E_eps[reward(argmax under w + eps)]`.
pub fn szo_gradient(epsilon: &[f64], adjusted_reward: f64) -> Vec<f64> {
    epsilon.iter().map(|&e| adjusted_reward * e).collect()
}

/// Zeroth-order learner: perturb, propose argmax, and learn from the single
/// observed reward. No sampling distribution is ever materialized, which is
/// the method's selling point — inference and learning both use argmax.
#[derive(Debug, Clone)]
pub struct SzoLearner {
    weights: PolicyWeights,
    optimizer: Optimizer,
    cv: ControlVariateState,
    sigma: f64,
    rounds: u64,
    rng: ChaCha12Rng,
    pending: Option<PendingPerturbation>,
}

#[derive(Debug, Clone)]
struct PendingPerturbation {
    instance_id: String,
    epsilon: Vec<f64>,
}

impl SzoLearner {
    pub fn new(initial_weights: PolicyWeights, optimizer: Optimizer, sigma: f64, seed: u64) -> Self {
        Self {
            weights: initial_weights,
            optimizer,
            cv: ControlVariateState::new(),
            sigma,
            rounds: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
            pending: None,
        }
    }

    pub fn weights(&self) -> &PolicyWeights {
        &self.weights
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }
}

impl Learner for SzoLearner {
    fn kind(&self) -> &'static str {
        "szo-cv"
    }

    fn propose(&mut self, instance: &ClientInstance) -> Result<Proposal, LearnerError> {
        let epsilon = szo_perturbation(self.weights.dim(), self.sigma, &mut self.rng);
        let index = szo_propose(&self.weights, &instance.candidates, &epsilon)?;
        self.pending = Some(PendingPerturbation {
            instance_id: instance.id.clone(),
            epsilon,
        });
        Proposal::for_candidate(instance, index)
    }

    fn update(
        &mut self,
        instance: &ClientInstance,
        _proposal: &Proposal,
        reward: f64,
    ) -> Result<(), LearnerError> {
        let pending = self
            .pending
            .take()
            .filter(|p| p.instance_id == instance.id)
            .ok_or_else(|| LearnerError::NoPendingProposal(instance.id.clone()))?;
        let adjusted = self.cv.adjust(reward);
        let gradient = szo_gradient(&pending.epsilon, adjusted);
        self.optimizer.step(&mut self.weights, &gradient)?;
        self.rounds += 1;
        Ok(())
    }

    fn snapshot(&self) -> LearnerSnapshot {
        LearnerSnapshot::Szo {
            weights: self.weights.clone(),
            optimizer: self.optimizer.clone(),
            cv: self.cv,
            sigma: self.sigma,
            rounds: self.rounds,
        }
    }
}
