//! UCB1 system selection and the online reward regressor.
//!
//! The ensemble treats whole systems as bandit arms: a fixed seed policy and
//! an "adapted" policy that ranks candidates by a linear model trained online
//! to predict the reward a hypothesis will get. Three UCB1 variants are
//! supported: vanilla index maximization, a sampling variant that draws arms
//! from a softmax over the indices (more exploration), and a holdout-filtered
//! variant that keeps the rounds used to train the regressor out of the arm
//! statistics.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::policy::{argmax, candidate_scores, softmax_with_temperature};
use super::{check_dims, dot, Learner, LearnerError, LearnerSnapshot, PolicyWeights, Proposal};
use crate::env::ClientInstance;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use crate::float::FloatExt as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UcbVariant {
    Vanilla,
    Sampling,
    HoldoutFiltered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ArmStat {
    pulls: u64,
    mean_reward: f64,
}

/// Pull counts and running mean rewards per arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbArmStats {
    arms: Vec<ArmStat>,
}

impl UcbArmStats {
    pub fn new(num_arms: usize) -> Self {
        Self {
            arms: alloc::vec![
                ArmStat {
                    pulls: 0,
                    mean_reward: 0.0
                };
                num_arms
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn total_pulls(&self) -> u64 {
        self.arms.iter().map(|a| a.pulls).sum()
    }

    pub fn pulls(&self, arm: usize) -> Option<u64> {
        self.arms.get(arm).map(|a| a.pulls)
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        self.arms.get(arm).map(|a| a.mean_reward)
    }

    /// Records one observed reward for `arm`.
    pub fn update(&mut self, arm: usize, reward: f64) -> Result<(), LearnerError> {
        let len = self.arms.len();
        let stat = self
            .arms
            .get_mut(arm)
            .ok_or(LearnerError::IndexOutOfRange { index: arm, len })?;
        stat.pulls += 1;
        stat.mean_reward += (reward - stat.mean_reward) / stat.pulls as f64;
        Ok(())
    }

    /// The UCB1 index `mean + sqrt(2 ln n / n_j)`. Unplayed arms have an
    /// infinite index.
    pub fn index(&self, arm: usize) -> Option<f64> {
        let stat = self.arms.get(arm)?;
        if stat.pulls == 0 {
            return Some(f64::INFINITY);
        }
        let total = self.total_pulls() as f64;
        Some(stat.mean_reward + (2.0 * total.ln() / stat.pulls as f64).sqrt())
    }
}

/// Selects an arm. Unplayed arms are taken first (lowest index first);
/// otherwise `Vanilla` and `HoldoutFiltered` pick the argmax UCB1 index
/// (ties to the lowest index), while `Sampling` draws an arm from a
/// unit-temperature softmax over the indices.
pub fn ucb1_select<R: Rng + ?Sized>(
    stats: &UcbArmStats,
    variant: UcbVariant,
    rng: &mut R,
) -> Result<usize, LearnerError> {
    if stats.is_empty() {
        return Err(LearnerError::NoArms);
    }
    if let Some(unplayed) = stats.arms.iter().position(|a| a.pulls == 0) {
        return Ok(unplayed);
    }
    let indices: Vec<f64> = (0..stats.len())
        .map(|arm| stats.index(arm).expect("arm in range"))
        .collect();
    match variant {
        UcbVariant::Vanilla | UcbVariant::HoldoutFiltered => Ok(argmax(&indices)),
        UcbVariant::Sampling => {
            let dist = softmax_with_temperature(&indices, 1.0)?;
            Ok(dist.sample(rng))
        }
    }
}

/// Linear model trained online (SGD on squared error) to predict the reward
/// a hypothesis will get from its features. Predictions are clamped to the
/// reward range [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRegressor {
    weights: PolicyWeights,
    learning_rate: f64,
    observations: u64,
}

pub const REGRESSOR_DEFAULT_LEARNING_RATE: f64 = 0.1;

impl RewardRegressor {
    pub fn new(dim: usize) -> Self {
        Self::with_learning_rate(dim, REGRESSOR_DEFAULT_LEARNING_RATE)
    }

    pub fn with_learning_rate(dim: usize, learning_rate: f64) -> Self {
        Self {
            weights: PolicyWeights::zeros(dim),
            learning_rate,
            observations: 0,
        }
    }

    pub fn weights(&self) -> &PolicyWeights {
        &self.weights
    }

    pub fn observations(&self) -> u64 {
        self.observations
    }

    /// One SGD step on the squared prediction error.
    pub fn update(&mut self, features: &[f64], reward: f64) -> Result<(), LearnerError> {
        check_dims(self.weights.dim(), features.len())?;
        let error = reward - dot(self.weights.as_slice(), features);
        for (w, &f) in self.weights.as_mut_slice().iter_mut().zip(features) {
            *w += self.learning_rate * error * f;
        }
        self.observations += 1;
        Ok(())
    }

    /// Predicted reward, clamped to [0, 1].
    pub fn predict(&self, features: &[f64]) -> Result<f64, LearnerError> {
        check_dims(self.weights.dim(), features.len())?;
        Ok(dot(self.weights.as_slice(), features).clamp(0.0, 1.0))
    }
}

/// Per-round choice between the seed system (arm 0) and the regressor-guided
/// adapted system (arm 1), driven by UCB1.
#[derive(Debug, Clone)]
pub struct UcbEnsembleLearner {
    seed_weights: PolicyWeights,
    regressor: RewardRegressor,
    stats: UcbArmStats,
    variant: UcbVariant,
    rounds: u64,
    rng: ChaCha12Rng,
    pending_arm: Option<usize>,
}

pub const ARM_SEED: usize = 0;
pub const ARM_ADAPTED: usize = 1;

impl UcbEnsembleLearner {
    pub fn new(seed_weights: PolicyWeights, variant: UcbVariant, seed: u64) -> Self {
        let dim = seed_weights.dim();
        Self {
            seed_weights,
            regressor: RewardRegressor::new(dim),
            stats: UcbArmStats::new(2),
            variant,
            rounds: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
            pending_arm: None,
        }
    }

    pub fn stats(&self) -> &UcbArmStats {
        &self.stats
    }

    pub fn regressor(&self) -> &RewardRegressor {
        &self.regressor
    }

    /// With the holdout-filtered variant, even rounds train the regressor
    /// and odd rounds feed the arm statistics, so the statistics are never
    /// computed on the regressor's own training examples.
    fn is_regressor_training_round(&self) -> bool {
        match self.variant {
            UcbVariant::HoldoutFiltered => self.rounds % 2 == 0,
            _ => true,
        }
    }

    fn propose_index(&mut self, instance: &ClientInstance, arm: usize) -> Result<usize, LearnerError> {
        match arm {
            ARM_SEED => {
                let scores = candidate_scores(&self.seed_weights, &instance.candidates)?;
                if scores.is_empty() {
                    return Err(LearnerError::NoCandidates);
                }
                Ok(argmax(&scores))
            }
            _ => {
                let scores: Vec<f64> = instance
                    .candidates
                    .iter()
                    .map(|c| self.regressor.predict(&c.features))
                    .collect::<Result<_, _>>()?;
                if scores.is_empty() {
                    return Err(LearnerError::NoCandidates);
                }
                Ok(argmax(&scores))
            }
        }
    }
}

impl Learner for UcbEnsembleLearner {
    fn kind(&self) -> &'static str {
        "ucb1-ensemble"
    }

    fn propose(&mut self, instance: &ClientInstance) -> Result<Proposal, LearnerError> {
        let arm = ucb1_select(&self.stats, self.variant, &mut self.rng)?;
        let index = self.propose_index(instance, arm)?;
        self.pending_arm = Some(arm);
        Proposal::for_candidate(instance, index)
    }

    fn update(
        &mut self,
        instance: &ClientInstance,
        proposal: &Proposal,
        reward: f64,
    ) -> Result<(), LearnerError> {
        let arm = self
            .pending_arm
            .take()
            .ok_or_else(|| LearnerError::NoPendingProposal(instance.id.clone()))?;
        let features = &instance
            .candidates
            .get(proposal.candidate_index)
            .ok_or(LearnerError::IndexOutOfRange {
                index: proposal.candidate_index,
                len: instance.candidates.len(),
            })?
            .features;

        let trains_regressor = self.is_regressor_training_round();
        if trains_regressor {
            self.regressor.update(features, reward)?;
        }
        if self.variant != UcbVariant::HoldoutFiltered || !trains_regressor {
            self.stats.update(arm, reward)?;
        }
        self.rounds += 1;
        Ok(())
    }

    fn snapshot(&self) -> LearnerSnapshot {
        LearnerSnapshot::UcbEnsemble {
            seed_weights: self.seed_weights.clone(),
            regressor: self.regressor.clone(),
            arms: self.stats.clone(),
            variant: self.variant,
            rounds: self.rounds,
        }
    }
}
