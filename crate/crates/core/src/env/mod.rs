//! The learning environment: dataset, learning sequence, and the
//! one-source-one-feedback protocol.
//!
//! An [`Environment`] owns the instances and a [`SequencePlan`] (the shared
//! round order with embedded held-out blocks). Per-participant protocol state
//! lives in a [`ParticipantSession`], which is a strict state machine: a
//! source must be requested before a translation can be submitted, exactly
//! one translation is scored per source, and the next source is only issued
//! after the previous round is closed. Every scored round is recorded in a
//! [`RoundLog`]; sessions are reconstructed from those logs on recovery
//! rather than trusted from snapshots.

mod instance;
mod plan;
mod session;

pub use instance::{Candidate, ClientInstance, Instance, InstanceError};
pub use plan::{build_sequence, HeldoutBlock, PlanError, SequencePlan};
pub use session::{IssuedSource, ParticipantSession, RoundLog, SessionState};

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::bleu::{smoothed_sentence_bleu, TokenSequence};

/// Violations of the one-source-one-feedback protocol, plus log corruption
/// detected during replay.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("a source is already issued for round {round}; submit a translation first")]
    SourceAlreadyIssued { round: u64 },
    #[error("no source is currently issued; request a source first")]
    NoSourceIssued,
    #[error("submitted instance id `{got}` does not match the issued id `{expected}`")]
    InstanceMismatch { expected: String, got: String },
    #[error("the learning sequence is exhausted after {total} rounds")]
    SequenceExhausted { total: u64 },
    #[error("corrupt round log: {0}")]
    CorruptLog(String),
}

/// What a participant sees when a source is issued. Never carries the
/// reference or any candidate reward information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceMessage {
    pub round: u64,
    pub instance_id: String,
    pub source: TokenSequence,
}

/// The server side of the task: instances plus the shared sequence plan.
///
/// All mutating operations take a `&mut ParticipantSession`; the environment
/// itself is immutable after construction, so sessions for different
/// participants can proceed concurrently as long as each session is
/// serialized (which the state machine requires anyway).
#[derive(Debug, Clone)]
pub struct Environment {
    instances: BTreeMap<String, Instance>,
    plan: SequencePlan,
}

impl Environment {
    /// Builds a plan from `training` and `heldout` instances and indexes all
    /// instances by id. Held-out instances are flagged as such regardless of
    /// their incoming flag.
    pub fn new(
        training: Vec<Instance>,
        heldout: Vec<Instance>,
        insertions: usize,
        seed: u64,
    ) -> Result<Self, PlanError> {
        let plan = build_sequence(&training, &heldout, insertions, seed)?;
        let mut instances = BTreeMap::new();
        for instance in training {
            instances.insert(instance.id.clone(), instance);
        }
        for mut instance in heldout {
            instance.held_out = true;
            instances.insert(instance.id.clone(), instance);
        }
        Ok(Self { instances, plan })
    }

    /// Reassembles an environment from a prebuilt plan, checking that every
    /// planned round points at a known instance.
    pub fn from_parts(
        instances: BTreeMap<String, Instance>,
        plan: SequencePlan,
    ) -> Result<Self, PlanError> {
        for round in 0..plan.total_rounds() {
            let id = plan.instance_id(round).expect("round in range");
            if !instances.contains_key(id) {
                return Err(PlanError::UnknownInstance(id.to_string()));
            }
        }
        Ok(Self { instances, plan })
    }

    pub fn plan(&self) -> &SequencePlan {
        &self.plan
    }

    pub fn instance(&self, id: &str) -> Option<&Instance> {
        self.instances.get(id)
    }

    pub fn instances(&self) -> &BTreeMap<String, Instance> {
        &self.instances
    }

    pub fn total_rounds(&self) -> u64 {
        self.plan.total_rounds() as u64
    }

    /// Issues the next source to `session`.
    ///
    /// Rejected while a source is outstanding (the protocol forbids multiple
    /// requests) and once the sequence is exhausted.
    pub fn next_source(
        &self,
        session: &mut ParticipantSession,
        now_ms: u64,
    ) -> Result<SourceMessage, ProtocolError> {
        match session.state() {
            SessionState::SourceIssued => Err(ProtocolError::SourceAlreadyIssued {
                round: session.cursor(),
            }),
            SessionState::Exhausted => Err(ProtocolError::SequenceExhausted {
                total: self.total_rounds(),
            }),
            SessionState::Idle => {
                let round = session.cursor();
                let Some(instance_id) = self.plan.instance_id(round as usize) else {
                    session.mark_exhausted();
                    return Err(ProtocolError::SequenceExhausted {
                        total: self.total_rounds(),
                    });
                };
                let instance = &self.instances[instance_id];
                session.issue(round, instance_id.to_string(), now_ms);
                Ok(SourceMessage {
                    round,
                    instance_id: instance_id.to_string(),
                    source: instance.source.clone(),
                })
            }
        }
    }

    /// Scores one submitted translation for the currently issued source and
    /// closes the round.
    ///
    /// The reward is the smoothed sentence-BLEU of `tokens` against the
    /// hidden reference. The returned [`RoundLog`] is exactly what was
    /// appended to the session ledger; persisting callers must write it
    /// before acknowledging the submission.
    pub fn submit_translation(
        &self,
        session: &mut ParticipantSession,
        instance_id: &str,
        tokens: TokenSequence,
        now_ms: u64,
    ) -> Result<RoundLog, ProtocolError> {
        let issued = match session.state() {
            SessionState::SourceIssued => session.issued().expect("issued in SourceIssued state"),
            SessionState::Idle | SessionState::Exhausted => {
                return Err(ProtocolError::NoSourceIssued)
            }
        };
        if issued.instance_id != instance_id {
            return Err(ProtocolError::InstanceMismatch {
                expected: issued.instance_id.clone(),
                got: instance_id.to_string(),
            });
        }

        let round = issued.round;
        let instance = &self.instances[instance_id];
        let reward = smoothed_sentence_bleu(&tokens, &instance.reference)
            .expect("instance references are validated non-empty at construction");
        let log = RoundLog {
            round,
            instance_id: instance_id.to_string(),
            submitted: tokens,
            reward,
            oracle_reward: instance.oracle_reward,
            held_out: self.plan.is_heldout_round(round as usize),
            timestamp_ms: now_ms,
        };
        session.record(log.clone(), self.total_rounds());
        Ok(log)
    }

    /// Rebuilds a session from an append-only round log, verifying the log
    /// against the plan: round indices must be gapless from 0 and each round
    /// must reference the planned instance.
    pub fn replay_session(
        &self,
        participant_id: &str,
        logs: Vec<RoundLog>,
    ) -> Result<ParticipantSession, ProtocolError> {
        for (k, log) in logs.iter().enumerate() {
            if log.round != k as u64 {
                return Err(ProtocolError::CorruptLog(alloc::format!(
                    "expected round {k}, found round {}",
                    log.round
                )));
            }
            match self.plan.instance_id(k) {
                Some(planned) if planned == log.instance_id => {}
                Some(planned) => {
                    return Err(ProtocolError::CorruptLog(alloc::format!(
                        "round {k} references `{}` but the plan has `{planned}`",
                        log.instance_id
                    )));
                }
                None => {
                    return Err(ProtocolError::CorruptLog(alloc::format!(
                        "round {k} is beyond the plan length {}",
                        self.plan.total_rounds()
                    )));
                }
            }
        }
        Ok(ParticipantSession::replay(
            participant_id,
            logs,
            self.total_rounds(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(text: &str) -> TokenSequence {
        TokenSequence::from_text(text)
    }

    fn instance(id: &str, source: &str, reference: &str) -> Instance {
        Instance::new(
            id.into(),
            toks(source),
            toks(reference),
            vec![
                Candidate::new(toks(reference), vec![1.0, 0.0]),
                Candidate::new(toks("x y"), vec![0.0, 1.0]),
            ],
            false,
        )
        .unwrap()
    }

    fn tiny_env() -> Environment {
        let training = vec![
            instance("t0", "s0", "a b c d"),
            instance("t1", "s1", "e f g h"),
            instance("t2", "s2", "i j k l"),
        ];
        let heldout = vec![instance("h0", "hs0", "m n o p")];
        Environment::new(training, heldout, 2, 7).unwrap()
    }

    #[test]
    fn fresh_session_gets_round_zero() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        let msg = env.next_source(&mut session, 0).unwrap();
        assert_eq!(msg.round, 0);
        assert_eq!(msg.instance_id, "h0"); // first held-out block leads the plan
        assert_eq!(msg.source, toks("hs0"));
    }

    #[test]
    fn double_request_is_a_protocol_violation() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        env.next_source(&mut session, 0).unwrap();
        assert_eq!(
            env.next_source(&mut session, 0),
            Err(ProtocolError::SourceAlreadyIssued { round: 0 })
        );
    }

    #[test]
    fn submit_without_source_is_a_protocol_violation() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        assert_eq!(
            env.submit_translation(&mut session, "t0", toks("a"), 0)
                .unwrap_err(),
            ProtocolError::NoSourceIssued
        );
    }

    #[test]
    fn submitting_the_reference_scores_one() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        let msg = env.next_source(&mut session, 0).unwrap();
        let reference = env.instance(&msg.instance_id).unwrap().reference.clone();
        let log = env
            .submit_translation(&mut session, &msg.instance_id, reference, 0)
            .unwrap();
        assert_eq!(log.reward, 1.0);
        assert_eq!(session.cumulative_reward(), 1.0);
        assert_eq!(session.cursor(), 1);
        assert_eq!(session.state(), SessionState::Idle);
    }

    #[test]
    fn empty_submission_scores_zero() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        let msg = env.next_source(&mut session, 0).unwrap();
        let log = env
            .submit_translation(&mut session, &msg.instance_id, toks(""), 0)
            .unwrap();
        assert_eq!(log.reward, 0.0);
    }

    #[test]
    fn mismatched_instance_id_is_rejected() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        env.next_source(&mut session, 0).unwrap();
        let err = env
            .submit_translation(&mut session, "t2", toks("a"), 0)
            .unwrap_err();
        assert!(matches!(err, ProtocolError::InstanceMismatch { .. }));
        // The round stays open and can still be completed.
        assert_eq!(session.state(), SessionState::SourceIssued);
    }

    #[test]
    fn double_submission_is_impossible() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        let msg = env.next_source(&mut session, 0).unwrap();
        env.submit_translation(&mut session, &msg.instance_id, toks("a"), 0)
            .unwrap();
        assert_eq!(
            env.submit_translation(&mut session, &msg.instance_id, toks("a"), 0)
                .unwrap_err(),
            ProtocolError::NoSourceIssued
        );
    }

    #[test]
    fn sequence_exhausts_after_k_rounds() {
        let env = tiny_env();
        let total = env.total_rounds();
        let mut session = ParticipantSession::new("p");
        for _ in 0..total {
            let msg = env.next_source(&mut session, 0).unwrap();
            env.submit_translation(&mut session, &msg.instance_id, toks("a"), 0)
                .unwrap();
        }
        assert_eq!(session.state(), SessionState::Exhausted);
        assert_eq!(
            env.next_source(&mut session, 0),
            Err(ProtocolError::SequenceExhausted { total })
        );
    }

    #[test]
    fn identical_streams_regardless_of_timing() {
        let env = tiny_env();
        let mut a = ParticipantSession::new("a");
        let mut b = ParticipantSession::new("b");
        let mut seen_a = vec![];
        let mut seen_b = vec![];
        // a runs ahead; b lags behind. Both must observe the same stream.
        for _ in 0..env.total_rounds() {
            let msg = env.next_source(&mut a, 0).unwrap();
            seen_a.push((msg.round, msg.instance_id.clone()));
            env.submit_translation(&mut a, &msg.instance_id, toks("a"), 0)
                .unwrap();
        }
        for _ in 0..env.total_rounds() {
            let msg = env.next_source(&mut b, 0).unwrap();
            seen_b.push((msg.round, msg.instance_id.clone()));
            env.submit_translation(&mut b, &msg.instance_id, toks("z"), 0)
                .unwrap();
        }
        assert_eq!(seen_a, seen_b);
    }

    #[test]
    fn replay_reconstructs_the_session() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        for _ in 0..3 {
            let msg = env.next_source(&mut session, 42).unwrap();
            env.submit_translation(&mut session, &msg.instance_id, toks("a b"), 42)
                .unwrap();
        }
        let replayed = env
            .replay_session("p", session.round_logs().to_vec())
            .unwrap();
        assert_eq!(replayed.cursor(), session.cursor());
        assert_eq!(replayed.cumulative_reward(), session.cumulative_reward());
        assert_eq!(replayed.state(), session.state());
    }

    #[test]
    fn replay_of_empty_log_is_a_fresh_session() {
        let env = tiny_env();
        let replayed = env.replay_session("p", vec![]).unwrap();
        assert_eq!(replayed.cursor(), 0);
        assert_eq!(replayed.state(), SessionState::Idle);
        assert_eq!(replayed.cumulative_reward(), 0.0);
    }

    #[test]
    fn replay_detects_gaps() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        for _ in 0..3 {
            let msg = env.next_source(&mut session, 0).unwrap();
            env.submit_translation(&mut session, &msg.instance_id, toks("a"), 0)
                .unwrap();
        }
        let mut logs = session.round_logs().to_vec();
        logs.remove(1);
        assert!(matches!(
            env.replay_session("p", logs).unwrap_err(),
            ProtocolError::CorruptLog(_)
        ));
    }

    #[test]
    fn replay_is_idempotent() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        for _ in 0..env.total_rounds() {
            let msg = env.next_source(&mut session, 0).unwrap();
            env.submit_translation(&mut session, &msg.instance_id, toks("m n"), 0)
                .unwrap();
        }
        let once = env
            .replay_session("p", session.round_logs().to_vec())
            .unwrap();
        let twice = env.replay_session("p", once.round_logs().to_vec()).unwrap();
        assert_eq!(once.cursor(), twice.cursor());
        assert_eq!(once.cumulative_reward(), twice.cumulative_reward());
        assert_eq!(once.round_logs(), twice.round_logs());
    }

    #[test]
    fn oracle_reward_bounds_in_set_submissions() {
        let env = tiny_env();
        let mut session = ParticipantSession::new("p");
        let msg = env.next_source(&mut session, 0).unwrap();
        let candidate = env.instance(&msg.instance_id).unwrap().candidates[1]
            .tokens
            .clone();
        let log = env
            .submit_translation(&mut session, &msg.instance_id, candidate, 0)
            .unwrap();
        assert!(log.oracle_reward >= log.reward);
    }
}
