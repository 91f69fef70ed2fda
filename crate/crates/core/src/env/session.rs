//! Per-participant protocol state.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::bleu::TokenSequence;

/// Protocol position of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    /// No source outstanding; the next request is allowed.
    Idle,
    /// A source was issued and awaits exactly one translation.
    SourceIssued,
    /// All rounds of the plan are scored.
    Exhausted,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Idle => "idle",
            SessionState::SourceIssued => "source_issued",
            SessionState::Exhausted => "exhausted",
        }
    }
}

/// The source currently awaiting a translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssuedSource {
    pub round: u64,
    pub instance_id: String,
    pub issued_at_ms: u64,
}

/// Append-only record of one scored round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub round: u64,
    pub instance_id: String,
    pub submitted: TokenSequence,
    /// Smoothed sentence-BLEU of the submission against the hidden reference.
    pub reward: f64,
    /// Reward of the best candidate in the instance's set.
    pub oracle_reward: f64,
    /// Whether this round sits inside a held-out block of the plan.
    pub held_out: bool,
    pub timestamp_ms: u64,
}

/// Protocol state machine plus reward ledger for one participant. All
/// transitions go through [`crate::env::Environment`]; derived quantities
/// (cumulative reward, cursor) are kept exactly in sync with the log and are
/// recomputed from it on [`replay`](ParticipantSession::replay).
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantSession {
    participant_id: String,
    state: SessionState,
    cursor: u64,
    issued: Option<IssuedSource>,
    cumulative_reward: f64,
    round_logs: Vec<RoundLog>,
}

impl ParticipantSession {
    pub fn new(participant_id: &str) -> Self {
        Self {
            participant_id: participant_id.to_string(),
            state: SessionState::Idle,
            cursor: 0,
            issued: None,
            cumulative_reward: 0.0,
            round_logs: Vec::new(),
        }
    }

    pub fn participant_id(&self) -> &str {
        &self.participant_id
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    /// Index of the next round to be issued; equals the number of scored
    /// rounds.
    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    pub fn issued(&self) -> Option<&IssuedSource> {
        self.issued.as_ref()
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.cumulative_reward
    }

    /// Mean reward over scored rounds, 0.0 before the first.
    pub fn running_mean_reward(&self) -> f64 {
        if self.cursor == 0 {
            0.0
        } else {
            self.cumulative_reward / self.cursor as f64
        }
    }

    pub fn round_logs(&self) -> &[RoundLog] {
        &self.round_logs
    }

    pub(super) fn issue(&mut self, round: u64, instance_id: String, now_ms: u64) {
        debug_assert_eq!(self.state, SessionState::Idle);
        debug_assert_eq!(round, self.cursor);
        self.issued = Some(IssuedSource {
            round,
            instance_id,
            issued_at_ms: now_ms,
        });
        self.state = SessionState::SourceIssued;
    }

    pub(super) fn record(&mut self, log: RoundLog, total_rounds: u64) {
        debug_assert_eq!(self.state, SessionState::SourceIssued);
        debug_assert_eq!(log.round, self.cursor);
        self.cumulative_reward += log.reward;
        self.round_logs.push(log);
        self.cursor += 1;
        self.issued = None;
        self.state = if self.cursor >= total_rounds {
            SessionState::Exhausted
        } else {
            SessionState::Idle
        };
    }

    pub(super) fn mark_exhausted(&mut self) {
        self.issued = None;
        self.state = SessionState::Exhausted;
    }

    /// Rebuilds a session from a validated log prefix. The ledger is summed
    /// from the log entries, never copied from a snapshot.
    pub(super) fn replay(participant_id: &str, logs: Vec<RoundLog>, total_rounds: u64) -> Self {
        let cursor = logs.len() as u64;
        let cumulative_reward = logs.iter().map(|l| l.reward).sum();
        Self {
            participant_id: participant_id.to_string(),
            state: if cursor >= total_rounds {
                SessionState::Exhausted
            } else {
                SessionState::Idle
            },
            cursor,
            issued: None,
            cumulative_reward,
            round_logs: logs,
        }
    }
}
