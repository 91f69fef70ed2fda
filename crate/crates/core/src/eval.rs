//! Online metrics and post-hoc reports: cumulative reward, running regret,
//! held-out checkpoint evaluation, online-to-batch model selection, and
//! exploitation-only scoring of a frozen model.
//!
//! Everything here is a pure computation over immutable round logs, so the
//! same numbers come out whether they are accumulated live or recomputed
//! from a replayed log.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::bleu::{corpus_bleu, smoothed_sentence_bleu, TokenSequence};
use crate::env::{Instance, RoundLog, SequencePlan};
use crate::learners::{static_policy, LearnerError, ModelCheckpoint, PolicyWeights};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("round logs are missing round {round} of held-out block {block}")]
    MissingRound { block: usize, round: usize },
    #[error("online-to-batch selection requires at least one checkpoint")]
    NoCheckpoints,
    #[error("exploitation evaluation requires a non-empty test set")]
    EmptyTestSet,
    #[error("round log references unknown instance `{0}`")]
    UnknownInstance(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

/// Per-round regret of a run: the instantaneous shortfall against the oracle
/// and its running average `R_k = (1/k) * sum_{k' <= k} (oracle - reward)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    instantaneous: Vec<f64>,
    running_average: Vec<f64>,
}

impl RegretSeries {
    pub fn len(&self) -> usize {
        self.instantaneous.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instantaneous.is_empty()
    }

    pub fn instantaneous(&self) -> &[f64] {
        &self.instantaneous
    }

    pub fn running_average(&self) -> &[f64] {
        &self.running_average
    }

    pub fn final_running_average(&self) -> f64 {
        self.running_average.last().copied().unwrap_or(0.0)
    }

    /// Mean instantaneous regret over rounds `[start, end)`, clipped to the
    /// series length.
    pub fn window_mean(&self, start: usize, end: usize) -> f64 {
        let end = end.min(self.instantaneous.len());
        if start >= end {
            return 0.0;
        }
        self.instantaneous[start..end].iter().sum::<f64>() / (end - start) as f64
    }
}

/// Sum of all per-round rewards.
pub fn cumulative_reward(logs: &[RoundLog]) -> f64 {
    logs.iter().map(|l| l.reward).sum()
}

/// Instantaneous and running-average regret per round. With the
/// within-candidate-set oracle this is non-negative for in-set submissions;
/// out-of-set submissions may make individual terms negative and are
/// reported as-is.
pub fn regret_series(logs: &[RoundLog]) -> RegretSeries {
    let mut instantaneous = Vec::with_capacity(logs.len());
    let mut running_average = Vec::with_capacity(logs.len());
    let mut total = 0.0;
    for (k, log) in logs.iter().enumerate() {
        let regret = log.oracle_reward - log.reward;
        total += regret;
        instantaneous.push(regret);
        running_average.push(total / (k + 1) as f64);
    }
    RegretSeries {
        instantaneous,
        running_average,
    }
}

/// Metrics of one held-out block: standard corpus-BLEU over the block's
/// (submission, reference) pairs and the mean per-sentence reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub block_index: usize,
    pub start_round: u64,
    pub end_round: u64,
    pub corpus_bleu: f64,
    pub avg_sentence_bleu: f64,
}

/// Evaluates every held-out block of the plan against the logged
/// submissions. Errors if the logs do not cover a block completely.
pub fn checkpoint_eval(
    logs: &[RoundLog],
    plan: &SequencePlan,
    instances: &BTreeMap<String, Instance>,
) -> Result<Vec<Checkpoint>, EvalError> {
    let mut checkpoints = Vec::with_capacity(plan.heldout_blocks().len());
    for (block_index, block) in plan.heldout_blocks().iter().enumerate() {
        let mut pairs: Vec<(&TokenSequence, &TokenSequence)> = Vec::with_capacity(block.len);
        let mut reward_sum = 0.0;
        for round in block.start..block.end() {
            let log = logs.get(round).ok_or(EvalError::MissingRound {
                block: block_index,
                round,
            })?;
            let instance = instances
                .get(&log.instance_id)
                .ok_or_else(|| EvalError::UnknownInstance(log.instance_id.clone()))?;
            pairs.push((&log.submitted, &instance.reference));
            reward_sum += log.reward;
        }
        let corpus = corpus_bleu(pairs).expect("block verified non-empty by plan construction");
        checkpoints.push(Checkpoint {
            block_index,
            start_round: block.start as u64,
            end_round: block.end() as u64,
            corpus_bleu: corpus,
            avg_sentence_bleu: reward_sum / block.len as f64,
        });
    }
    Ok(checkpoints)
}

/// As [`checkpoint_eval`], but silently drops blocks the logs have not
/// reached yet. Used for progress views over live, incomplete runs.
pub fn completed_checkpoints(
    logs: &[RoundLog],
    plan: &SequencePlan,
    instances: &BTreeMap<String, Instance>,
) -> Vec<Checkpoint> {
    let covered: Vec<_> = plan
        .heldout_blocks()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.end() <= logs.len())
        .collect();
    let mut checkpoints = Vec::with_capacity(covered.len());
    for (block_index, block) in covered {
        let mut pairs: Vec<(&TokenSequence, &TokenSequence)> = Vec::with_capacity(block.len);
        let mut reward_sum = 0.0;
        for round in block.start..block.end() {
            let log = &logs[round];
            let Some(instance) = instances.get(&log.instance_id) else {
                return checkpoints;
            };
            pairs.push((&log.submitted, &instance.reference));
            reward_sum += log.reward;
        }
        let corpus = corpus_bleu(pairs).expect("block verified non-empty by plan construction");
        checkpoints.push(Checkpoint {
            block_index,
            start_round: block.start as u64,
            end_round: block.end() as u64,
            corpus_bleu: corpus,
            avg_sentence_bleu: reward_sum / block.len as f64,
        });
    }
    checkpoints
}

/// How to pick the single deployable model out of a training trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionStrategy {
    /// The last checkpoint of the run.
    Final,
    /// The checkpoint with the best held-out average sentence-BLEU, ties
    /// going to the later checkpoint. Checkpoints written before the first
    /// held-out block completed carry no score and are skipped; if no
    /// checkpoint carries a score, selection falls back to the final one.
    BestHeldout,
}

/// Online-to-batch conversion: reduce a trajectory of model checkpoints to
/// one model.
pub fn online_to_batch(
    checkpoints: &[ModelCheckpoint],
    strategy: SelectionStrategy,
) -> Result<&ModelCheckpoint, EvalError> {
    let last = checkpoints.last().ok_or(EvalError::NoCheckpoints)?;
    match strategy {
        SelectionStrategy::Final => Ok(last),
        SelectionStrategy::BestHeldout => {
            let mut best: Option<&ModelCheckpoint> = None;
            for checkpoint in checkpoints {
                let Some(score) = checkpoint.heldout.as_ref() else {
                    continue;
                };
                let beats = match best.and_then(|b| b.heldout.as_ref()) {
                    Some(current) => score.avg_sentence_bleu >= current.avg_sentence_bleu,
                    None => true,
                };
                if beats {
                    best = Some(checkpoint);
                }
            }
            Ok(best.unwrap_or(last))
        }
    }
}

/// Exploitation-only metrics of a frozen linear model on a test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExploitReport {
    pub corpus_bleu: f64,
    pub avg_sentence_bleu: f64,
}

/// Proposes the argmax candidate for every instance (no sampling, no
/// updates) and scores the proposals. Pure: repeated calls give bit-identical
/// results.
pub fn exploit_eval(
    weights: &PolicyWeights,
    test_set: &[Instance],
) -> Result<ExploitReport, EvalError> {
    if test_set.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let mut pairs: Vec<(&TokenSequence, &TokenSequence)> = Vec::with_capacity(test_set.len());
    let mut sentence_sum = 0.0;
    for instance in test_set {
        let index = static_policy(weights, &instance.candidates)?;
        let proposal = &instance.candidates[index].tokens;
        sentence_sum += smoothed_sentence_bleu(proposal, &instance.reference)
            .expect("instance references are validated non-empty");
        pairs.push((proposal, &instance.reference));
    }
    Ok(ExploitReport {
        corpus_bleu: corpus_bleu(pairs).expect("test set verified non-empty"),
        avg_sentence_bleu: sentence_sum / test_set.len() as f64,
    })
}
