//! On-disk formats: datasets, round logs, client mirror logs, model
//! checkpoints, credentials, manifests, and the CSV reports.
//!
//! Line-delimited JSON carries all record streams. Token sequences are
//! stored space-joined (tokens never contain whitespace, so the joining is
//! lossless); floats are written in Rust's shortest round-trip form, which
//! keeps repeated exports byte-identical.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bandit_core::env::{Candidate, ClientInstance, Instance, RoundLog};
use bandit_core::eval::{Checkpoint, RegretSeries};
use bandit_core::learners::ModelCheckpoint;
use bandit_core::TokenSequence;

use crate::error::{ArenaError, Result};

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct CandidateRecord {
    tokens: String,
    features: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRecord {
    id: String,
    source: String,
    reference: String,
    candidates: Vec<CandidateRecord>,
}

/// Writes instances as line-delimited records with space-joined tokens.
/// Derived fields (oracle reward, held-out flag) are not stored; they are
/// recomputed or reassigned on load.
pub fn write_dataset(path: &Path, instances: &[Instance]) -> Result<()> {
    let file = File::create(path).map_err(|e| ArenaError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for instance in instances {
        let record = DatasetRecord {
            id: instance.id.clone(),
            source: instance.source.to_text(),
            reference: instance.reference.to_text(),
            candidates: instance
                .candidates
                .iter()
                .map(|c| CandidateRecord {
                    tokens: c.tokens.to_text(),
                    features: c.features.clone(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut writer, &record).map_err(|e| ArenaError::Format {
            what: "dataset record",
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        writer.write_all(b"\n").map_err(|e| ArenaError::io(path, e))?;
    }
    writer.flush().map_err(|e| ArenaError::io(path, e))?;
    Ok(())
}

/// Loads a dataset file into full server-side instances (references
/// included, oracle rewards recomputed).
pub fn read_dataset(path: &Path) -> Result<Vec<Instance>> {
    let file = File::open(path).map_err(|e| ArenaError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut instances = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ArenaError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(&line).map_err(|e| ArenaError::Format {
            what: "dataset record",
            path: format!("{}:{}", path.display(), lineno + 1),
            detail: e.to_string(),
        })?;
        let candidates = record
            .candidates
            .into_iter()
            .map(|c| Candidate::new(TokenSequence::from_text(&c.tokens), c.features))
            .collect();
        let instance = Instance::new(
            record.id,
            TokenSequence::from_text(&record.source),
            TokenSequence::from_text(&record.reference),
            candidates,
            false,
        )
        .map_err(|e| ArenaError::Format {
            what: "dataset record",
            path: format!("{}:{}", path.display(), lineno + 1),
            detail: e.to_string(),
        })?;
        instances.push(instance);
    }
    Ok(instances)
}

/// Loads a dataset as the client sees it: references are dropped at parse
/// time, before any learner code can touch them.
pub fn read_client_dataset(path: &Path) -> Result<BTreeMap<String, ClientInstance>> {
    Ok(read_dataset(path)?
        .into_iter()
        .map(|i| (i.id.clone(), i.client_view()))
        .collect())
}

// ---------------------------------------------------------------------------
// Round logs (server side)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RoundLogRecord {
    round: u64,
    instance_id: String,
    submitted: String,
    reward: f64,
    oracle_reward: f64,
    held_out: bool,
    timestamp_ms: u64,
}

impl From<&RoundLog> for RoundLogRecord {
    fn from(log: &RoundLog) -> Self {
        Self {
            round: log.round,
            instance_id: log.instance_id.clone(),
            submitted: log.submitted.to_text(),
            reward: log.reward,
            oracle_reward: log.oracle_reward,
            held_out: log.held_out,
            timestamp_ms: log.timestamp_ms,
        }
    }
}

impl From<RoundLogRecord> for RoundLog {
    fn from(record: RoundLogRecord) -> Self {
        RoundLog {
            round: record.round,
            instance_id: record.instance_id,
            submitted: TokenSequence::from_text(&record.submitted),
            reward: record.reward,
            oracle_reward: record.oracle_reward,
            held_out: record.held_out,
            timestamp_ms: record.timestamp_ms,
        }
    }
}

/// Append-only writer for one participant's round log. Every append is
/// flushed and fsynced before it returns: a round is committed once its line
/// is durable, and only then may the feedback be acknowledged.
pub struct RoundLogWriter {
    path: PathBuf,
    file: File,
}

impl RoundLogWriter {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| ArenaError::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| ArenaError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(&mut self, log: &RoundLog) -> Result<()> {
        let mut line = serde_json::to_string(&RoundLogRecord::from(log)).expect("record serializes");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| ArenaError::io(&self.path, e))
    }
}

pub fn read_round_logs(path: &Path) -> Result<Vec<RoundLog>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(|e| ArenaError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut logs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ArenaError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RoundLogRecord =
            serde_json::from_str(&line).map_err(|e| ArenaError::Format {
                what: "round log record",
                path: format!("{}:{}", path.display(), lineno + 1),
                detail: e.to_string(),
            })?;
        logs.push(record.into());
    }
    Ok(logs)
}

// ---------------------------------------------------------------------------
// Client mirror log
// ---------------------------------------------------------------------------

/// One client-side mirror entry. The oracle reward and held-out flag are
/// server-side knowledge and never appear here. A round is written once
/// before the POST (no reward) and once after the acknowledged response;
/// the log is append-only and the last entry per round wins.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MirrorEntry {
    pub round: u64,
    pub instance_id: String,
    pub candidate_index: usize,
    pub submitted: String,
    #[serde(default)]
    pub reward: Option<f64>,
    pub timestamp_ms: u64,
}

pub struct MirrorLog {
    path: PathBuf,
    file: File,
}

impl MirrorLog {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| ArenaError::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| ArenaError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(&mut self, entry: &MirrorEntry) -> Result<()> {
        let mut line = serde_json::to_string(entry).expect("entry serializes");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| ArenaError::io(&self.path, e))
    }

    /// Reads the log back as the effective state per round (last entry wins).
    pub fn read(path: &Path) -> Result<BTreeMap<u64, MirrorEntry>> {
        let mut entries = BTreeMap::new();
        if !path.exists() {
            return Ok(entries);
        }
        let file = File::open(path).map_err(|e| ArenaError::io(path, e))?;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| ArenaError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: MirrorEntry =
                serde_json::from_str(&line).map_err(|e| ArenaError::Format {
                    what: "mirror log entry",
                    path: format!("{}:{}", path.display(), lineno + 1),
                    detail: e.to_string(),
                })?;
            entries.insert(entry.round, entry);
        }
        Ok(entries)
    }
}

// ---------------------------------------------------------------------------
// Credentials
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Credential {
    pub participant_id: String,
    pub api_key: String,
    /// Requests per second; the bucket's burst capacity is one second's
    /// worth of tokens.
    #[serde(default = "default_rate_limit")]
    pub rate_limit: f64,
}

fn default_rate_limit() -> f64 {
    10.0
}

/// The credential a freshly initialized state dir gets when no keys file is
/// supplied: single local participant, effectively unthrottled.
pub fn default_local_credentials() -> Vec<Credential> {
    vec![Credential {
        participant_id: "local".to_string(),
        api_key: "local-dev-key".to_string(),
        rate_limit: 1e9,
    }]
}

pub fn read_credentials(path: &Path) -> Result<Vec<Credential>> {
    let file = File::open(path).map_err(|e| ArenaError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| ArenaError::Format {
        what: "credentials file",
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

pub fn write_credentials(path: &Path, credentials: &[Credential]) -> Result<()> {
    let json = serde_json::to_string_pretty(credentials).expect("credentials serialize");
    std::fs::write(path, json).map_err(|e| ArenaError::io(path, e))
}

// ---------------------------------------------------------------------------
// Model checkpoints
// ---------------------------------------------------------------------------

pub fn checkpoint_file_name(round: u64) -> String {
    format!("checkpoint-{round:08}.json")
}

/// Writes a checkpoint atomically (temp file + rename).
pub fn write_checkpoint(dir: &Path, checkpoint: &ModelCheckpoint) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| ArenaError::io(dir, e))?;
    let path = dir.join(checkpoint_file_name(checkpoint.round));
    let tmp = dir.join(format!(".{}.tmp", checkpoint_file_name(checkpoint.round)));
    let json = serde_json::to_string_pretty(checkpoint).expect("checkpoint serializes");
    std::fs::write(&tmp, json).map_err(|e| ArenaError::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| ArenaError::io(&path, e))?;
    Ok(path)
}

pub fn read_checkpoint(path: &Path) -> Result<ModelCheckpoint> {
    let file = File::open(path).map_err(|e| ArenaError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| ArenaError::Format {
        what: "model checkpoint",
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// Reads every checkpoint in a directory, ordered by round.
pub fn read_checkpoint_dir(dir: &Path) -> Result<Vec<ModelCheckpoint>> {
    let mut checkpoints = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| ArenaError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| ArenaError::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with("checkpoint-") && name.ends_with(".json") {
            checkpoints.push(read_checkpoint(&entry.path())?);
        }
    }
    checkpoints.sort_by_key(|c| c.round);
    Ok(checkpoints)
}

// ---------------------------------------------------------------------------
// CSV reports
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal form; shared by every CSV writer so repeated
/// exports of the same numbers are byte-identical.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub const ROUNDS_CSV: &str = "rounds.csv";
pub const CHECKPOINTS_CSV: &str = "checkpoints.csv";

/// Writes the per-round report: reward, oracle reward, running-average
/// regret, and the held-out flag. Timestamps deliberately stay out, so runs
/// over the wire and in-process simulations export identical bytes.
pub fn write_rounds_csv(path: &Path, logs: &[RoundLog], regret: &RegretSeries) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| ArenaError::Format {
        what: "rounds csv",
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let io_err = |e: csv::Error| ArenaError::Format {
        what: "rounds csv",
        path: path.display().to_string(),
        detail: e.to_string(),
    };
    writer
        .write_record(["round", "reward", "oracle_reward", "running_regret", "is_heldout"])
        .map_err(io_err)?;
    for (log, running) in logs.iter().zip(regret.running_average()) {
        writer
            .write_record([
                log.round.to_string(),
                fmt_f64(log.reward),
                fmt_f64(log.oracle_reward),
                fmt_f64(*running),
                log.held_out.to_string(),
            ])
            .map_err(io_err)?;
    }
    writer.flush().map_err(|e| ArenaError::io(path, e))?;
    Ok(())
}

pub fn write_checkpoints_csv(path: &Path, checkpoints: &[Checkpoint]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| ArenaError::Format {
        what: "checkpoints csv",
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let io_err = |e: csv::Error| ArenaError::Format {
        what: "checkpoints csv",
        path: path.display().to_string(),
        detail: e.to_string(),
    };
    writer
        .write_record([
            "checkpoint",
            "start_round",
            "end_round",
            "corpus_bleu",
            "avg_sentence_bleu",
        ])
        .map_err(io_err)?;
    for checkpoint in checkpoints {
        writer
            .write_record([
                checkpoint.block_index.to_string(),
                checkpoint.start_round.to_string(),
                checkpoint.end_round.to_string(),
                fmt_f64(checkpoint.corpus_bleu),
                fmt_f64(checkpoint.avg_sentence_bleu),
            ])
            .map_err(io_err)?;
    }
    writer.flush().map_err(|e| ArenaError::io(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

/// Resolved configuration of a run (simulate or learn), written into the run
/// directory before the first round. Re-running simulate from the same
/// manifest reproduces the CSVs byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub mode: String,
    pub dataset: String,
    pub heldout: String,
    pub insertions: usize,
    pub seed: u64,
    pub learner: LearnerManifest,
    pub rounds: Option<u64>,
    pub plan_fingerprint: u64,
    pub total_rounds: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LearnerManifest {
    pub kind: String,
    pub optimizer: String,
    pub learning_rate: f64,
    pub k_start: Option<u64>,
    pub sigma: f64,
    pub control_variate: bool,
    pub ucb_variant: Option<String>,
    pub checkpoint_every: u64,
    pub learner_seed: u64,
    pub task_spec: Option<String>,
}

/// Configuration fingerprint of a serving state dir; verified on restart so
/// logs are never replayed against a different plan.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ServeManifest {
    pub dataset: String,
    pub heldout: String,
    pub insertions: usize,
    pub seed: u64,
    pub plan_fingerprint: u64,
    pub total_rounds: u64,
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("manifest serializes");
    std::fs::write(path, json).map_err(|e| ArenaError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &'static str) -> Result<T> {
    let file = File::open(path).map_err(|e| ArenaError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| ArenaError::Format {
        what,
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}
