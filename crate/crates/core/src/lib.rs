//! Core algorithms for `bandit-arena`, a desk-scale online learning task in
//! which a learner translates one source at a time and receives a single
//! scalar reward (smoothed sentence-BLEU) per proposed translation.
//!
//! The crate is organized around the pieces of that loop:
//!
//! - [`bleu`]: sentence- and corpus-level BLEU, including the smoothed
//!   sentence metric used as bandit feedback.
//! - [`env`]: the dataset, the learning sequence with embedded held-out
//!   blocks, and the one-source-one-feedback session state machine.
//! - [`learners`]: bandit learners over linear softmax policies on candidate
//!   sets — expected-loss policy gradient with a control variate, one-point
//!   stochastic zeroth-order optimization, temperature annealing, SGD /
//!   Adadelta / Adam schedules, and UCB1 system selection with a reward
//!   regressor.
//! - [`eval`]: cumulative reward, running regret, held-out checkpoint
//!   evaluation, and online-to-batch model selection.
//! - [`datagen`]: synthetic task generation with controllable domain shift,
//!   plus the data-preparation filters.
//!
//! Everything here is pure computation over in-memory data. Transport, file
//! formats, and the CLI live in the companion `bandit-arena` crate. The crate
//! is `no_std`-compatible (with `alloc`); the default `std` feature only
//! switches float math and error-trait plumbing.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bleu;
pub mod datagen;
pub mod env;
pub mod eval;
pub mod learners;

mod float;

pub use bleu::{corpus_bleu, smoothed_sentence_bleu, BleuBreakdown, BleuError, TokenSequence};
pub use env::{
    build_sequence, Candidate, ClientInstance, Environment, Instance, ParticipantSession,
    ProtocolError, RoundLog, SequencePlan, SessionState, SourceMessage,
};
pub use learners::{Learner, ModelCheckpoint, PolicyWeights, Proposal};
