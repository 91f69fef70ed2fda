//! Bandit learners over a linear softmax policy on candidate sets.
//!
//! Every learner implements the same two-phase round contract: `propose` a
//! candidate for the current instance, then `update` with the scalar reward
//! the service returned for exactly that proposal. Learners are stateful and
//! single-threaded by contract (the protocol is strictly sequential per
//! participant); all randomness comes from an injectable seeded RNG, so a
//! fixed seed makes whole runs reproducible.
//!
//! Available learners:
//!
//! - [`ElLearner`]: expected-reward policy gradient (score-function
//!   estimator) with an optional running-mean control variate and optional
//!   temperature/learning-rate annealing.
//! - [`SzoLearner`]: one-point stochastic zeroth-order optimization — the
//!   weights are perturbed with Gaussian noise, the argmax candidate under
//!   the perturbed weights is proposed, and the (control-variate adjusted)
//!   reward times the noise is the ascent direction.
//! - [`UcbEnsembleLearner`]: UCB1 selection between a fixed seed policy and
//!   a policy guided by an online reward regressor.
//! - [`StaticLearner`] / [`OracleLearner`]: the degenerate baselines.

mod anneal;
mod baseline;
mod cv;
mod el;
mod optim;
mod policy;
mod szo;
mod ucb;

pub use anneal::AnnealSchedule;
pub use baseline::{oracle_policy, static_policy, OracleLearner, StaticLearner};
pub use cv::ControlVariateState;
pub use el::ElLearner;
pub use optim::{AdadeltaState, AdamState, Optimizer, SgdState};
pub use policy::{
    argmax, candidate_scores, el_gradient, softmax_with_temperature, PolicyDistribution,
    PolicyWeights,
};
pub use szo::{szo_gradient, szo_propose, SzoLearner};
pub use ucb::{
    ucb1_select, RewardRegressor, UcbArmStats, UcbEnsembleLearner, UcbVariant, ARM_ADAPTED,
    ARM_SEED,
};

use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bleu::TokenSequence;
use crate::env::ClientInstance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("candidate index {index} out of range for {len} candidates")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("instance has no candidates")]
    NoCandidates,
    #[error("UCB selection requires at least one arm")]
    NoArms,
    #[error("optimizer produced a non-finite update (divergence)")]
    NonFiniteUpdate,
    #[error("no pending proposal for instance `{0}`; propose before updating")]
    NoPendingProposal(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
}

/// A learner's answer for one round: which candidate it proposes.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub candidate_index: usize,
    pub tokens: TokenSequence,
}

impl Proposal {
    pub fn for_candidate(instance: &ClientInstance, index: usize) -> Result<Self, LearnerError> {
        let candidate = instance
            .candidates
            .get(index)
            .ok_or(LearnerError::IndexOutOfRange {
                index,
                len: instance.candidates.len(),
            })?;
        Ok(Self {
            candidate_index: index,
            tokens: candidate.tokens.clone(),
        })
    }
}

/// The online learning contract: propose one translation per source, then
/// consume the single reward the environment grants for it. `update` must be
/// called exactly once per scored round, with the exact reward returned by
/// the service, before the next `propose`.
pub trait Learner {
    /// Stable name for manifests and reports.
    fn kind(&self) -> &'static str;

    fn propose(&mut self, instance: &ClientInstance) -> Result<Proposal, LearnerError>;

    fn update(
        &mut self,
        instance: &ClientInstance,
        proposal: &Proposal,
        reward: f64,
    ) -> Result<(), LearnerError>;

    /// Serializable model state for checkpoint files.
    fn snapshot(&self) -> LearnerSnapshot;
}

/// Serializable model state, one variant per learner family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LearnerSnapshot {
    Linear {
        weights: PolicyWeights,
        optimizer: Optimizer,
        cv: Option<ControlVariateState>,
        anneal: Option<AnnealSchedule>,
        rounds: u64,
    },
    Szo {
        weights: PolicyWeights,
        optimizer: Optimizer,
        cv: ControlVariateState,
        sigma: f64,
        rounds: u64,
    },
    Static {
        weights: PolicyWeights,
    },
    Oracle,
    UcbEnsemble {
        seed_weights: PolicyWeights,
        regressor: RewardRegressor,
        arms: UcbArmStats,
        variant: UcbVariant,
        rounds: u64,
    },
}

impl LearnerSnapshot {
    /// Linear scoring weights to use for exploitation-only (argmax)
    /// inference. For the UCB ensemble this is the regressor if the adapted
    /// arm has the higher empirical mean, otherwise the seed weights. The
    /// oracle has no deployable weights.
    pub fn exploit_weights(&self) -> Option<&PolicyWeights> {
        match self {
            LearnerSnapshot::Linear { weights, .. }
            | LearnerSnapshot::Szo { weights, .. }
            | LearnerSnapshot::Static { weights } => Some(weights),
            LearnerSnapshot::Oracle => None,
            LearnerSnapshot::UcbEnsemble {
                seed_weights,
                regressor,
                arms,
                ..
            } => {
                let adapted_better =
                    arms.mean(ARM_ADAPTED).unwrap_or(0.0) > arms.mean(ARM_SEED).unwrap_or(0.0);
                if adapted_better {
                    Some(regressor.weights())
                } else {
                    Some(seed_weights)
                }
            }
        }
    }
}

/// Current version of the checkpoint record layout.
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Held-out metrics attached to a model checkpoint: the evaluation of the
/// nearest held-out block completed before the checkpoint was written.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldoutScore {
    pub block_index: usize,
    pub corpus_bleu: f64,
    pub avg_sentence_bleu: f64,
}

/// Versioned model checkpoint: everything needed to resume or deploy a
/// learner at a given round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub version: u32,
    pub round: u64,
    pub kind: String,
    pub snapshot: LearnerSnapshot,
    pub heldout: Option<HeldoutScore>,
}

impl ModelCheckpoint {
    pub fn new(round: u64, kind: &str, snapshot: LearnerSnapshot) -> Self {
        Self {
            version: CHECKPOINT_FORMAT_VERSION,
            round,
            kind: String::from(kind),
            snapshot,
            heldout: None,
        }
    }

    pub fn with_heldout(mut self, heldout: Option<HeldoutScore>) -> Self {
        self.heldout = heldout;
        self
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<(), LearnerError> {
    if expected == got {
        Ok(())
    } else {
        Err(LearnerError::DimensionMismatch { expected, got })
    }
}
