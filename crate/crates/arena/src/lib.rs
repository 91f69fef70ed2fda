//! The operational side of `bandit-arena`: file formats, the JSON-over-HTTP
//! evaluation service, the client SDK, the in-process simulation runner, and
//! report generation. All algorithmic behavior lives in `bandit-core`; this
//! crate only moves bytes around it.

pub mod client;
pub mod error;
pub mod formats;
pub mod report;
pub mod runner;
pub mod service;
pub mod wire;

pub use error::ArenaError;

/// Wall-clock milliseconds since the unix epoch; the timestamp written into
/// round logs by the live service.
pub fn now_ms() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
