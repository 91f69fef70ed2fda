//! The evaluation service: authentication, rate limiting, the
//! one-source-one-feedback protocol over persistent per-participant state,
//! and the leaderboard.
//!
//! [`ArenaService`] is the transport-free core — every endpoint is an
//! ordinary method, which is what the crash-consistency tests drive
//! directly. [`HttpServer`] wraps it in a small threaded HTTP front end.
//!
//! Durability contract: a submitted translation is appended (and fsynced) to
//! the participant's round log *before* the feedback is acknowledged. If the
//! process dies in between, restart replays the log: the round stays scored
//! exactly once and a retried POST is answered with 409 while `/status`
//! carries the committed reward.

mod http;
mod state;

pub use http::HttpServer;
pub use state::{ArenaService, ServiceError};

use std::path::{Path, PathBuf};

use bandit_core::Environment;

use crate::error::{ArenaError, Result};
use crate::formats::{
    self, read_credentials, write_credentials, Credential, ServeManifest,
};

/// Everything needed to open a service instance.
pub struct ServiceConfig {
    pub dataset: PathBuf,
    pub heldout: PathBuf,
    pub insertions: usize,
    pub seed: u64,
    pub state_dir: PathBuf,
    /// Explicit credentials; when `None`, `state_dir/credentials.json` is
    /// used and created with a single local participant if missing.
    pub credentials: Option<Vec<Credential>>,
}

impl ServiceConfig {
    /// Loads datasets, builds the shared plan, verifies the state dir
    /// against any previous manifest, and replays all round logs.
    pub fn open(self) -> Result<ArenaService> {
        let training = formats::read_dataset(&self.dataset)?;
        let heldout = formats::read_dataset(&self.heldout)?;
        let env = Environment::new(training, heldout, self.insertions, self.seed)?;

        std::fs::create_dir_all(&self.state_dir)
            .map_err(|e| ArenaError::io(&self.state_dir, e))?;
        let manifest = ServeManifest {
            dataset: self.dataset.display().to_string(),
            heldout: self.heldout.display().to_string(),
            insertions: self.insertions,
            seed: self.seed,
            plan_fingerprint: env.plan().fingerprint(),
            total_rounds: env.total_rounds(),
        };
        verify_or_write_manifest(&self.state_dir, &manifest)?;

        let credentials = match self.credentials {
            Some(credentials) => credentials,
            None => load_or_init_credentials(&self.state_dir)?,
        };
        if credentials.is_empty() {
            return Err(ArenaError::config("credentials must not be empty"));
        }

        ArenaService::replay(env, credentials, &self.state_dir)
    }
}

fn verify_or_write_manifest(state_dir: &Path, manifest: &ServeManifest) -> Result<()> {
    let path = state_dir.join("manifest.json");
    if path.exists() {
        let existing: ServeManifest = formats::read_json(&path, "serve manifest")?;
        if existing.plan_fingerprint != manifest.plan_fingerprint
            || existing.total_rounds != manifest.total_rounds
        {
            return Err(ArenaError::config(format!(
                "state dir {} was created for a different plan (fingerprint {:x} vs {:x}); \
                 refusing to replay logs against it",
                state_dir.display(),
                existing.plan_fingerprint,
                manifest.plan_fingerprint,
            )));
        }
        Ok(())
    } else {
        formats::write_json_pretty(&path, manifest)
    }
}

fn load_or_init_credentials(state_dir: &Path) -> Result<Vec<Credential>> {
    let path = state_dir.join("credentials.json");
    if path.exists() {
        read_credentials(&path)
    } else {
        let credentials = formats::default_local_credentials();
        write_credentials(&path, &credentials)?;
        Ok(credentials)
    }
}
