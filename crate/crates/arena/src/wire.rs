//! JSON message bodies of the wire protocol.
//!
//! Tokens travel as JSON arrays of strings so tokenization stays unambiguous
//! on the wire. The reference translation and oracle rewards never appear in
//! any of these shapes.

use serde::{Deserialize, Serialize};

pub const SOURCE_PATH: &str = "/v1/source";
pub const TRANSLATION_PATH: &str = "/v1/translation";
pub const STATUS_PATH: &str = "/v1/status";
pub const LEADERBOARD_PATH: &str = "/v1/leaderboard";
pub const API_KEY_HEADER: &str = "X-Api-Key";

/// Body of `GET /v1/source`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceResponse {
    pub round: u64,
    pub instance_id: String,
    pub source_tokens: Vec<String>,
}

/// Body of `POST /v1/translation`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslationRequest {
    pub instance_id: String,
    pub tokens: Vec<String>,
}

/// Body returned for a scored translation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub round: u64,
    pub reward: f64,
}

/// Body of `GET /v1/status`.
///
/// Beyond the progress counters, the status exposes what a recovering client
/// needs: the id of a still-open source (and its age, for staleness
/// monitoring) and the reward of the most recently scored round, so a client
/// whose acknowledgment was lost can reconcile without a second scoring.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatusResponse {
    pub state: String,
    pub rounds_completed: u64,
    pub total_rounds: u64,
    pub cumulative_reward: f64,
    #[serde(default)]
    pub issued_instance_id: Option<String>,
    #[serde(default)]
    pub issued_age_seconds: Option<f64>,
    #[serde(default)]
    pub last_reward: Option<f64>,
}

/// One row of `GET /v1/leaderboard`, sorted by cumulative reward descending,
/// ties broken by participant id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub participant_id: String,
    pub rounds_completed: u64,
    pub cumulative_reward: f64,
    pub running_mean_reward: f64,
    #[serde(default)]
    pub last_checkpoint: Option<CheckpointSummary>,
}

/// Held-out metrics of the most recent completed block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub block_index: usize,
    pub corpus_bleu: f64,
    pub avg_sentence_bleu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeaderboardResponse {
    pub entries: Vec<LeaderboardEntry>,
}

/// Error body for every non-2xx response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}
