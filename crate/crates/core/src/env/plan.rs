//! The shared learning sequence with embedded held-out blocks.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use super::instance::Instance;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("held-out set must be non-empty")]
    EmptyHeldout,
    #[error("insertions must be at least 1")]
    ZeroInsertions,
    #[error("cannot embed {insertions} held-out blocks: {training} training instances leave an empty gap between blocks")]
    InfeasibleInsertions { insertions: usize, training: usize },
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("plan references unknown instance id `{0}`")]
    UnknownInstance(String),
}

/// Half-open range of rounds `[start, start + len)` occupied by one held-out
/// block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeldoutBlock {
    pub start: usize,
    pub len: usize,
}

impl HeldoutBlock {
    pub fn contains(&self, round: usize) -> bool {
        round >= self.start && round < self.start + self.len
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// The fixed round order served identically to every participant: training
/// instances in seeded-shuffled order, interleaved with `insertions` copies
/// of the held-out block. The first block starts at round 0; with two or
/// more insertions the last block ends exactly at the final round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencePlan {
    rounds: Vec<String>,
    blocks: Vec<HeldoutBlock>,
}

impl SequencePlan {
    pub fn total_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn instance_id(&self, round: usize) -> Option<&str> {
        self.rounds.get(round).map(String::as_str)
    }

    pub fn round_ids(&self) -> &[String] {
        &self.rounds
    }

    pub fn heldout_blocks(&self) -> &[HeldoutBlock] {
        &self.blocks
    }

    pub fn is_heldout_round(&self, round: usize) -> bool {
        self.blocks.iter().any(|b| b.contains(round))
    }

    /// Order-sensitive fingerprint of the plan (FNV-1a over ids and block
    /// layout). Two runs are comparable exactly when their fingerprints
    /// match.
    pub fn fingerprint(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        let mut mix = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= u64::from(b);
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for id in &self.rounds {
            mix(id.as_bytes());
            mix(&[0xff]);
        }
        for block in &self.blocks {
            mix(&(block.start as u64).to_le_bytes());
            mix(&(block.len as u64).to_le_bytes());
        }
        hash
    }
}

/// Builds the shared sequence: the held-out block leads the plan, and with
/// `insertions >= 2` the remaining copies split the shuffled training stream
/// into equal gaps, the final copy ending at the very last round.
/// Deterministic in `seed`.
pub fn build_sequence(
    training: &[Instance],
    heldout: &[Instance],
    insertions: usize,
    seed: u64,
) -> Result<SequencePlan, PlanError> {
    if heldout.is_empty() {
        return Err(PlanError::EmptyHeldout);
    }
    if insertions == 0 {
        return Err(PlanError::ZeroInsertions);
    }
    let gaps = insertions - 1;
    if gaps > 0 && training.len() < gaps {
        return Err(PlanError::InfeasibleInsertions {
            insertions,
            training: training.len(),
        });
    }

    let mut seen = BTreeSet::new();
    for instance in training.iter().chain(heldout) {
        if !seen.insert(instance.id.as_str()) {
            return Err(PlanError::DuplicateId(instance.id.clone()));
        }
    }

    let mut train_ids: Vec<&str> = training.iter().map(|i| i.id.as_str()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    train_ids.shuffle(&mut rng);
    let heldout_ids: Vec<&str> = heldout.iter().map(|i| i.id.as_str()).collect();

    let mut rounds: Vec<String> = Vec::with_capacity(training.len() + insertions * heldout.len());
    let mut blocks = Vec::with_capacity(insertions);
    let push_block = |rounds: &mut Vec<String>, blocks: &mut Vec<HeldoutBlock>| {
        blocks.push(HeldoutBlock {
            start: rounds.len(),
            len: heldout_ids.len(),
        });
        rounds.extend(heldout_ids.iter().map(|id| id.to_string()));
    };

    push_block(&mut rounds, &mut blocks);
    if gaps == 0 {
        rounds.extend(train_ids.iter().map(|id| id.to_string()));
    } else {
        // Split the training stream into `gaps` chunks; earlier chunks absorb
        // the remainder so chunk sizes differ by at most one.
        let base = train_ids.len() / gaps;
        let remainder = train_ids.len() % gaps;
        let mut offset = 0;
        for gap in 0..gaps {
            let size = base + usize::from(gap < remainder);
            rounds.extend(train_ids[offset..offset + size].iter().map(|id| id.to_string()));
            offset += size;
            push_block(&mut rounds, &mut blocks);
        }
        debug_assert_eq!(offset, train_ids.len());
    }

    Ok(SequencePlan { rounds, blocks })
}
