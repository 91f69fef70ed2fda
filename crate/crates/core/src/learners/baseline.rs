//! Degenerate policies: the static seed system and the oracle.

use alloc::collections::BTreeMap;
use alloc::string::String;

use super::policy::{argmax, candidate_scores};
use super::{Learner, LearnerError, LearnerSnapshot, PolicyWeights, Proposal};
use crate::env::{ClientInstance, Instance};

/// Argmax candidate under fixed weights; the policy of a system that does
/// not learn online.
pub fn static_policy(
    weights: &PolicyWeights,
    candidates: &[crate::env::Candidate],
) -> Result<usize, LearnerError> {
    let scores = candidate_scores(weights, candidates)?;
    if scores.is_empty() {
        return Err(LearnerError::NoCandidates);
    }
    Ok(argmax(&scores))
}

/// The candidate achieving the instance's oracle reward. Needs the hidden
/// reference, so it only exists server-side.
pub fn oracle_policy(instance: &Instance) -> usize {
    instance.best_candidate_index()
}

/// Never updates; proposes the argmax under its seed weights forever.
#[derive(Debug, Clone)]
pub struct StaticLearner {
    weights: PolicyWeights,
}

impl StaticLearner {
    pub fn new(weights: PolicyWeights) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &PolicyWeights {
        &self.weights
    }
}

impl Learner for StaticLearner {
    fn kind(&self) -> &'static str {
        "static"
    }

    fn propose(&mut self, instance: &ClientInstance) -> Result<Proposal, LearnerError> {
        let index = static_policy(&self.weights, &instance.candidates)?;
        Proposal::for_candidate(instance, index)
    }

    fn update(
        &mut self,
        _instance: &ClientInstance,
        _proposal: &Proposal,
        _reward: f64,
    ) -> Result<(), LearnerError> {
        Ok(())
    }

    fn snapshot(&self) -> LearnerSnapshot {
        LearnerSnapshot::Static {
            weights: self.weights.clone(),
        }
    }
}

/// Always proposes the best candidate in the set. Built from the full
/// server-side instances, so it is only usable in local simulation — over
/// the wire a client never sees the information this learner is made of.
#[derive(Debug, Clone)]
pub struct OracleLearner {
    best_index: BTreeMap<String, usize>,
}

impl OracleLearner {
    pub fn from_instances<'a, I: IntoIterator<Item = &'a Instance>>(instances: I) -> Self {
        Self {
            best_index: instances
                .into_iter()
                .map(|i| (i.id.clone(), oracle_policy(i)))
                .collect(),
        }
    }
}

impl Learner for OracleLearner {
    fn kind(&self) -> &'static str {
        "oracle"
    }

    fn propose(&mut self, instance: &ClientInstance) -> Result<Proposal, LearnerError> {
        let index = *self
            .best_index
            .get(&instance.id)
            .ok_or_else(|| LearnerError::UnknownInstance(instance.id.clone()))?;
        Proposal::for_candidate(instance, index)
    }

    fn update(
        &mut self,
        _instance: &ClientInstance,
        _proposal: &Proposal,
        _reward: f64,
    ) -> Result<(), LearnerError> {
        Ok(())
    }

    fn snapshot(&self) -> LearnerSnapshot {
        LearnerSnapshot::Oracle
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bleu::TokenSequence;
    use crate::env::Candidate;
    use alloc::string::ToString;
    use alloc::vec;

    fn toks(t: &str) -> TokenSequence {
        TokenSequence::from_text(t)
    }

    #[test]
    fn static_zero_weights_tie_break_to_first() {
        let candidates = vec![
            Candidate::new(toks("a"), vec![1.0, 0.0]),
            Candidate::new(toks("b"), vec![0.0, 1.0]),
        ];
        assert_eq!(static_policy(&PolicyWeights::zeros(2), &candidates).unwrap(), 0);
    }

    #[test]
    fn static_weights_never_move() {
        let mut learner = StaticLearner::new(PolicyWeights::new(vec![0.25, -0.75]));
        let instance = ClientInstance {
            id: "i".to_string(),
            source: toks("s"),
            candidates: vec![
                Candidate::new(toks("a"), vec![1.0, 0.0]),
                Candidate::new(toks("b"), vec![0.0, 1.0]),
            ],
        };
        let before = learner.weights().clone();
        for _ in 0..1000 {
            let proposal = learner.propose(&instance).unwrap();
            learner.update(&instance, &proposal, 0.9).unwrap();
        }
        assert_eq!(learner.weights(), &before);
    }

    #[test]
    fn oracle_achieves_the_oracle_reward() {
        let instance = Instance::new(
            "i".to_string(),
            toks("s"),
            toks("a b c d"),
            vec![
                Candidate::new(toks("x y"), vec![0.0]),
                Candidate::new(toks("a b c d"), vec![0.0]),
            ],
            false,
        )
        .unwrap();
        let mut learner = OracleLearner::from_instances([&instance]);
        let proposal = learner.propose(&instance.client_view()).unwrap();
        assert_eq!(proposal.candidate_index, 1);
        let reward =
            crate::bleu::smoothed_sentence_bleu(&proposal.tokens, &instance.reference).unwrap();
        assert_eq!(reward, instance.oracle_reward);
    }

    #[test]
    fn oracle_rejects_unknown_instances() {
        let mut learner = OracleLearner::from_instances([]);
        let instance = ClientInstance {
            id: "nope".to_string(),
            source: toks("s"),
            candidates: vec![Candidate::new(toks("a"), vec![])],
        };
        assert!(matches!(
            learner.propose(&instance).unwrap_err(),
            LearnerError::UnknownInstance(_)
        ));
    }
}
