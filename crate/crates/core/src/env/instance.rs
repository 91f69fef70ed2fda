//! Instances and candidate sets.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::bleu::{smoothed_sentence_bleu, TokenSequence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("instance `{0}` has an empty reference")]
    EmptyReference(String),
    #[error("instance `{0}` has no candidates")]
    NoCandidates(String),
    #[error("instance `{id}` mixes feature dimensions {expected} and {got}")]
    FeatureDimMismatch { id: String, expected: usize, got: usize },
}

/// One hypothesis a policy may propose: its tokens plus a dense feature
/// vector. All candidates of one instance share the feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tokens: TokenSequence,
    pub features: Vec<f64>,
}

impl Candidate {
    pub fn new(tokens: TokenSequence, features: Vec<f64>) -> Self {
        Self { tokens, features }
    }
}

/// One learning round's payload. The reference is server-side knowledge and
/// is deliberately not serializable: client-facing views go through
/// [`Instance::client_view`].
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub source: TokenSequence,
    pub reference: TokenSequence,
    pub candidates: Vec<Candidate>,
    pub held_out: bool,
    /// Best achievable reward within the candidate set: the maximum smoothed
    /// sentence-BLEU of any candidate against the reference.
    pub oracle_reward: f64,
}

impl Instance {
    /// Validates invariants and computes the oracle reward.
    pub fn new(
        id: String,
        source: TokenSequence,
        reference: TokenSequence,
        candidates: Vec<Candidate>,
        held_out: bool,
    ) -> Result<Self, InstanceError> {
        if reference.is_empty() {
            return Err(InstanceError::EmptyReference(id));
        }
        if candidates.is_empty() {
            return Err(InstanceError::NoCandidates(id));
        }
        let dim = candidates[0].features.len();
        for candidate in &candidates {
            if candidate.features.len() != dim {
                return Err(InstanceError::FeatureDimMismatch {
                    id,
                    expected: dim,
                    got: candidate.features.len(),
                });
            }
        }
        let oracle_reward = candidates
            .iter()
            .map(|c| {
                smoothed_sentence_bleu(&c.tokens, &reference)
                    .expect("reference verified non-empty above")
            })
            .fold(0.0f64, f64::max);
        Ok(Self {
            id,
            source,
            reference,
            candidates,
            held_out,
            oracle_reward,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.candidates[0].features.len()
    }

    /// Index of the candidate achieving the oracle reward (lowest index on
    /// ties).
    pub fn best_candidate_index(&self) -> usize {
        let mut best = 0;
        let mut best_score = -1.0;
        for (i, candidate) in self.candidates.iter().enumerate() {
            let score = smoothed_sentence_bleu(&candidate.tokens, &self.reference)
                .expect("reference verified non-empty at construction");
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        best
    }

    /// The client-visible part of this instance: no reference, no flags, no
    /// reward information.
    pub fn client_view(&self) -> ClientInstance {
        ClientInstance {
            id: self.id.clone(),
            source: self.source.clone(),
            candidates: self.candidates.clone(),
        }
    }
}

/// What a learner is allowed to see about an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientInstance {
    pub id: String,
    pub source: TokenSequence,
    pub candidates: Vec<Candidate>,
}

impl ClientInstance {
    pub fn feature_dim(&self) -> usize {
        self.candidates.first().map_or(0, |c| c.features.len())
    }
}
