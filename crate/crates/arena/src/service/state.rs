//! Transport-free service state: sessions, credentials, buckets, logs.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use bandit_core::env::ProtocolError;
use bandit_core::eval::completed_checkpoints;
use bandit_core::{Environment, ParticipantSession, TokenSequence};

use crate::error::Result;
use crate::formats::{read_round_logs, Credential, RoundLogWriter};
use crate::now_ms;
use crate::wire::{
    CheckpointSummary, FeedbackResponse, LeaderboardEntry, LeaderboardResponse, SourceResponse,
    StatusResponse, TranslationRequest,
};

/// Endpoint-level failures, each mapping onto one HTTP status code. The
/// protocol itself can only produce 4xx; 5xx is reserved for a participant
/// whose durable log broke mid-flight.
#[derive(Debug)]
pub enum ServiceError {
    /// Unknown key. Deliberately carries no hint whether the participant
    /// exists.
    Unauthorized,
    RateLimited,
    Conflict(String),
    Gone(String),
    BadRequest(String),
    Broken(String),
}

impl ServiceError {
    pub fn status_code(&self) -> u16 {
        match self {
            ServiceError::Unauthorized => 401,
            ServiceError::RateLimited => 429,
            ServiceError::Conflict(_) => 409,
            ServiceError::Gone(_) => 410,
            ServiceError::BadRequest(_) => 400,
            ServiceError::Broken(_) => 500,
        }
    }

    pub fn message(&self) -> String {
        match self {
            ServiceError::Unauthorized => "invalid api key".to_string(),
            ServiceError::RateLimited => "rate limit exceeded".to_string(),
            ServiceError::Conflict(m) | ServiceError::Gone(m) | ServiceError::BadRequest(m) => {
                m.clone()
            }
            ServiceError::Broken(m) => m.clone(),
        }
    }
}

fn protocol_error(err: ProtocolError) -> ServiceError {
    match err {
        ProtocolError::SequenceExhausted { .. } => ServiceError::Gone(err.to_string()),
        _ => ServiceError::Conflict(err.to_string()),
    }
}

/// Token bucket: capacity of one second's worth of requests, refilled
/// continuously.
struct TokenBucket {
    capacity: f64,
    tokens: f64,
    rate: f64,
    last_refill: Instant,
}

impl TokenBucket {
    fn new(rate: f64) -> Self {
        let capacity = rate.max(1.0);
        Self {
            capacity,
            tokens: capacity,
            rate,
            last_refill: Instant::now(),
        }
    }

    fn allow(&mut self) -> bool {
        let now = Instant::now();
        let elapsed = now.duration_since(self.last_refill).as_secs_f64();
        self.last_refill = now;
        self.tokens = (self.tokens + elapsed * self.rate).min(self.capacity);
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            true
        } else {
            false
        }
    }
}

struct ParticipantSlot {
    session: ParticipantSession,
    writer: RoundLogWriter,
    bucket: TokenBucket,
    /// Set when a durable append failed; the slot refuses further requests
    /// rather than drifting ahead of its log.
    broken: bool,
}

/// The whole service, minus transport. All methods are `&self`; each
/// participant's state sits behind its own mutex, so requests from different
/// participants proceed concurrently while a single participant is strictly
/// serialized.
pub struct ArenaService {
    env: Environment,
    keys: BTreeMap<String, String>,
    slots: BTreeMap<String, Mutex<ParticipantSlot>>,
}

impl ArenaService {
    /// Builds the service by replaying every participant's round log from
    /// the state dir.
    pub(super) fn replay(
        env: Environment,
        credentials: Vec<Credential>,
        state_dir: &Path,
    ) -> Result<Self> {
        let mut keys = BTreeMap::new();
        let mut slots = BTreeMap::new();
        for credential in credentials {
            if keys
                .insert(credential.api_key.clone(), credential.participant_id.clone())
                .is_some()
            {
                return Err(crate::error::ArenaError::config(format!(
                    "duplicate api key for participant `{}`",
                    credential.participant_id
                )));
            }
            let log_path = state_dir
                .join("rounds")
                .join(format!("{}.jsonl", credential.participant_id));
            let logs = read_round_logs(&log_path)?;
            let session = env.replay_session(&credential.participant_id, logs)?;
            let writer = RoundLogWriter::open(&log_path)?;
            slots.insert(
                credential.participant_id.clone(),
                Mutex::new(ParticipantSlot {
                    session,
                    writer,
                    bucket: TokenBucket::new(credential.rate_limit),
                    broken: false,
                }),
            );
        }
        Ok(Self { env, keys, slots })
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn participants(&self) -> impl Iterator<Item = &str> {
        self.slots.keys().map(String::as_str)
    }

    fn slot(&self, api_key: &str) -> std::result::Result<&Mutex<ParticipantSlot>, ServiceError> {
        let participant = self.keys.get(api_key).ok_or(ServiceError::Unauthorized)?;
        Ok(&self.slots[participant])
    }

    fn checked_slot<'a>(
        &'a self,
        api_key: &str,
    ) -> std::result::Result<std::sync::MutexGuard<'a, ParticipantSlot>, ServiceError> {
        let mut slot = self
            .slot(api_key)?
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner());
        if slot.broken {
            return Err(ServiceError::Broken(
                "participant state is out of sync with its log; restart the service".to_string(),
            ));
        }
        if !slot.bucket.allow() {
            return Err(ServiceError::RateLimited);
        }
        Ok(slot)
    }

    pub fn get_source(&self, api_key: &str) -> std::result::Result<SourceResponse, ServiceError> {
        let mut slot = self.checked_slot(api_key)?;
        let msg = self
            .env
            .next_source(&mut slot.session, now_ms())
            .map_err(protocol_error)?;
        Ok(SourceResponse {
            round: msg.round,
            instance_id: msg.instance_id,
            source_tokens: msg.source.tokens().to_vec(),
        })
    }

    pub fn post_translation(
        &self,
        api_key: &str,
        request: &TranslationRequest,
    ) -> std::result::Result<FeedbackResponse, ServiceError> {
        let mut slot = self.checked_slot(api_key)?;
        let tokens = TokenSequence::new(request.tokens.clone());
        let log = self
            .env
            .submit_translation(&mut slot.session, &request.instance_id, tokens, now_ms())
            .map_err(protocol_error)?;
        // Commit before acknowledging. A failed append marks the slot broken
        // instead of letting memory run ahead of the durable log.
        if let Err(err) = slot.writer.append(&log) {
            slot.broken = true;
            return Err(ServiceError::Broken(format!(
                "failed to persist round {}: {err}",
                log.round
            )));
        }
        Ok(FeedbackResponse {
            round: log.round,
            reward: log.reward,
        })
    }

    pub fn status(&self, api_key: &str) -> std::result::Result<StatusResponse, ServiceError> {
        let slot = self
            .slot(api_key)?
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner());
        let session = &slot.session;
        let issued = session.issued();
        Ok(StatusResponse {
            state: session.state().as_str().to_string(),
            rounds_completed: session.cursor(),
            total_rounds: self.env.total_rounds(),
            cumulative_reward: session.cumulative_reward(),
            issued_instance_id: issued.map(|i| i.instance_id.clone()),
            issued_age_seconds: issued
                .map(|i| (now_ms().saturating_sub(i.issued_at_ms)) as f64 / 1000.0),
            last_reward: session.round_logs().last().map(|l| l.reward),
        })
    }

    /// Public, unauthenticated. Entries are derived from the round logs and
    /// sorted by cumulative reward descending, ties by participant id.
    pub fn leaderboard(&self) -> LeaderboardResponse {
        let mut entries: Vec<LeaderboardEntry> = self
            .slots
            .iter()
            .map(|(participant, slot)| {
                let slot = slot.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
                let session = &slot.session;
                let last_checkpoint = completed_checkpoints(
                    session.round_logs(),
                    self.env.plan(),
                    self.env.instances(),
                )
                .last()
                .map(|c| CheckpointSummary {
                    block_index: c.block_index,
                    corpus_bleu: c.corpus_bleu,
                    avg_sentence_bleu: c.avg_sentence_bleu,
                });
                LeaderboardEntry {
                    participant_id: participant.clone(),
                    rounds_completed: session.cursor(),
                    cumulative_reward: session.cumulative_reward(),
                    running_mean_reward: session.running_mean_reward(),
                    last_checkpoint,
                }
            })
            .collect();
        entries.sort_by(|a, b| {
            b.cumulative_reward
                .partial_cmp(&a.cumulative_reward)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.participant_id.cmp(&b.participant_id))
        });
        LeaderboardResponse { entries }
    }
}
