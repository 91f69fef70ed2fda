//! Expected-reward policy gradient learner.

use alloc::string::String;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{
    el_gradient, softmax_with_temperature, AnnealSchedule, ControlVariateState, Learner,
    LearnerError, LearnerSnapshot, Optimizer, PolicyWeights, Proposal,
};
use super::policy::candidate_scores;
use crate::env::ClientInstance;

/// Stochastically optimizes expected reward for the linear softmax policy:
/// each round samples a candidate from the tempered softmax, then moves the
/// weights along the score-function gradient estimate
/// `(reward - baseline) * (phi(sampled) - E_p[phi])`, where the baseline is
/// the running mean of past rewards when the control variate is enabled.
#[derive(Debug, Clone)]
pub struct ElLearner {
    weights: PolicyWeights,
    optimizer: Optimizer,
    cv: Option<ControlVariateState>,
    anneal: Option<AnnealSchedule>,
    rounds: u64,
    rng: ChaCha12Rng,
    pending: Option<PendingSample>,
}

#[derive(Debug, Clone)]
struct PendingSample {
    instance_id: String,
    sampled_index: usize,
    temperature: f64,
}

impl ElLearner {
    pub fn new(
        initial_weights: PolicyWeights,
        optimizer: Optimizer,
        use_cv: bool,
        anneal: Option<AnnealSchedule>,
        seed: u64,
    ) -> Self {
        Self {
            weights: initial_weights,
            optimizer,
            cv: use_cv.then(ControlVariateState::new),
            anneal,
            rounds: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
            pending: None,
        }
    }

    pub fn weights(&self) -> &PolicyWeights {
        &self.weights
    }

    pub fn optimizer(&self) -> &Optimizer {
        &self.optimizer
    }

    /// Direct access for scripted experiments (e.g. injecting a learning-rate
    /// spike late in a run).
    pub fn optimizer_mut(&mut self) -> &mut Optimizer {
        &mut self.optimizer
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    fn temperature(&self) -> f64 {
        self.anneal
            .as_ref()
            .map_or(1.0, |a| a.temperature_at(self.rounds))
    }
}

impl Learner for ElLearner {
    fn kind(&self) -> &'static str {
        "el-cv"
    }

    fn propose(&mut self, instance: &ClientInstance) -> Result<Proposal, LearnerError> {
        let temperature = self.temperature();
        let scores = candidate_scores(&self.weights, &instance.candidates)?;
        let dist = softmax_with_temperature(&scores, temperature)?;
        let sampled_index = dist.sample(&mut self.rng);
        self.pending = Some(PendingSample {
            instance_id: instance.id.clone(),
            sampled_index,
            temperature,
        });
        Proposal::for_candidate(instance, sampled_index)
    }

    fn update(
        &mut self,
        instance: &ClientInstance,
        proposal: &Proposal,
        reward: f64,
    ) -> Result<(), LearnerError> {
        let pending = self
            .pending
            .take()
            .filter(|p| p.instance_id == instance.id && p.sampled_index == proposal.candidate_index)
            .ok_or_else(|| LearnerError::NoPendingProposal(instance.id.clone()))?;

        let adjusted = match self.cv.as_mut() {
            Some(cv) => cv.adjust(reward),
            None => reward,
        };
        let gradient = el_gradient(
            &self.weights,
            &instance.candidates,
            pending.sampled_index,
            adjusted,
            pending.temperature,
        )?;
        if let Some(anneal) = self.anneal.as_mut() {
            anneal.tick(self.rounds, &mut self.optimizer);
        }
        self.optimizer.step(&mut self.weights, &gradient)?;
        self.rounds += 1;
        Ok(())
    }

    fn snapshot(&self) -> LearnerSnapshot {
        LearnerSnapshot::Linear {
            weights: self.weights.clone(),
            optimizer: self.optimizer.clone(),
            cv: self.cv,
            anneal: self.anneal.clone(),
            rounds: self.rounds,
        }
    }
}
