//! Sentence- and corpus-level BLEU.
//!
//! The sentence metric is BLEU-4 with additive n-gram count smoothing: a
//! zero match count is replaced by an offset of 0.01 in the numerator only,
//! so the geometric mean stays positive. This smoothed score is the reward
//! signal of the whole task. The corpus metric is standard pooled corpus-BLEU
//! without smoothing, used for held-out checkpoint evaluation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use crate::float::FloatExt as _;

/// Highest n-gram order entering the score.
pub const MAX_ORDER: usize = 4;

/// Additive smoothing offset substituted for a zero match count.
pub const SMOOTHING_OFFSET: f64 = 0.01;

/// A tokenized sentence. Tokens must not contain internal whitespace;
/// [`TokenSequence::from_text`] guarantees that by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        Self(tokens)
    }

    /// Splits on whitespace. The inverse of [`TokenSequence::to_text`].
    pub fn from_text(text: &str) -> Self {
        Self(text.split_whitespace().map(String::from).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Space-joined surface form.
    pub fn to_text(&self) -> String {
        self.0.join(" ")
    }
}

impl From<Vec<String>> for TokenSequence {
    fn from(tokens: Vec<String>) -> Self {
        Self(tokens)
    }
}

impl FromIterator<String> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl core::fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BleuError {
    #[error("reference must be non-empty")]
    EmptyReference,
    #[error("corpus BLEU requires at least one (hypothesis, reference) pair")]
    EmptyCorpus,
}

/// Per-order components behind a smoothed sentence-BLEU score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuBreakdown {
    /// Smoothed precisions per order, each in (0, 1].
    pub precisions: [f64; MAX_ORDER],
    /// Clipped match counts per order.
    pub matches: [u32; MAX_ORDER],
    /// Hypothesis n-gram counts per order.
    pub hyp_ngram_counts: [u32; MAX_ORDER],
    /// Brevity penalty in (0, 1].
    pub brevity_penalty: f64,
    /// Final score in [0, 1].
    pub score: f64,
}

/// Clipped n-gram matches of `hyp` against `ref`, plus the hypothesis n-gram
/// count. Matches are clipped per distinct n-gram at the reference count.
/// Degenerate inputs (either side shorter than `n`) yield zero counts.
pub fn clipped_ngram_matches(hyp: &TokenSequence, reference: &TokenSequence, n: usize) -> (u32, u32) {
    assert!(
        (1..=MAX_ORDER).contains(&n),
        "n-gram order must be in 1..={MAX_ORDER}, got {n}"
    );
    let hyp_count = hyp.len().saturating_sub(n - 1) as u32;
    if hyp_count == 0 || reference.len() < n {
        return (0, hyp_count);
    }

    let mut ref_counts: BTreeMap<&[String], u32> = BTreeMap::new();
    for gram in reference.tokens().windows(n) {
        *ref_counts.entry(gram).or_insert(0) += 1;
    }
    let mut hyp_counts: BTreeMap<&[String], u32> = BTreeMap::new();
    for gram in hyp.tokens().windows(n) {
        *hyp_counts.entry(gram).or_insert(0) += 1;
    }

    let matches = hyp_counts
        .iter()
        .map(|(gram, count)| (*count).min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    (matches, hyp_count)
}

/// Smoothed sentence-BLEU of `hyp` against a single `reference`.
///
/// For each order n = 1..4, the precision is `matches / hyp_count`, except
/// that a zero match count is replaced by [`SMOOTHING_OFFSET`]. A hypothesis
/// shorter than n contributes `SMOOTHING_OFFSET / 1`. The brevity penalty is
/// `exp(1 - ref_len/hyp_len)` for hypotheses shorter than the reference and 1
/// otherwise. An empty hypothesis scores 0.0 by definition, so a learner that
/// proposes nothing still receives a valid reward.
pub fn smoothed_sentence_bleu(hyp: &TokenSequence, reference: &TokenSequence) -> Result<f64, BleuError> {
    smoothed_sentence_bleu_breakdown(hyp, reference).map(|b| b.score)
}

/// As [`smoothed_sentence_bleu`], returning all per-order components.
pub fn smoothed_sentence_bleu_breakdown(
    hyp: &TokenSequence,
    reference: &TokenSequence,
) -> Result<BleuBreakdown, BleuError> {
    if reference.is_empty() {
        return Err(BleuError::EmptyReference);
    }

    let mut breakdown = BleuBreakdown {
        precisions: [0.0; MAX_ORDER],
        matches: [0; MAX_ORDER],
        hyp_ngram_counts: [0; MAX_ORDER],
        brevity_penalty: 1.0,
        score: 0.0,
    };
    if hyp.is_empty() {
        return Ok(breakdown);
    }

    let mut log_sum = 0.0;
    for n in 1..=MAX_ORDER {
        let (matches, hyp_count) = clipped_ngram_matches(hyp, reference, n);
        // Smoothing replaces the numerator only; a zero denominator (the
        // hypothesis is shorter than n) is treated as a count of one.
        let numerator = if matches == 0 { SMOOTHING_OFFSET } else { matches as f64 };
        let denominator = if hyp_count == 0 { 1.0 } else { hyp_count as f64 };
        let precision = numerator / denominator;
        log_sum += precision.ln();
        breakdown.matches[n - 1] = matches;
        breakdown.hyp_ngram_counts[n - 1] = hyp_count;
        breakdown.precisions[n - 1] = precision;
     }

    breakdown.brevity_penalty = if hyp.len() >= reference.len() {
        1.0
    } else {
        (1.0 - reference.len() as f64 / hyp.len() as f64).exp()
    };
    breakdown.score = breakdown.brevity_penalty * (log_sum / MAX_ORDER as f64).exp();
    Ok(breakdown)
}

/// Standard corpus-BLEU over `(hypothesis, reference)` pairs: matches and
/// counts are pooled across the corpus per order, then combined as the
/// geometric mean of the four pooled precisions times the corpus brevity
/// penalty `exp(min(0, 1 - R/H))`. No smoothing: a zero pooled precision
/// makes the whole score 0.0.
pub fn corpus_bleu<'a, I>(pairs: I) -> Result<f64, BleuError>
where
    I: IntoIterator<Item = (&'a TokenSequence, &'a TokenSequence)>,
{
    let mut pooled_matches = [0u64; MAX_ORDER];
    let mut pooled_counts = [0u64; MAX_ORDER];
    let mut hyp_len = 0u64;
    let mut ref_len = 0u64;
    let mut n_pairs = 0u64;

    for (hyp, reference) in pairs {
        if reference.is_empty() {
            return Err(BleuError::EmptyReference);
        }
        n_pairs += 1;
        hyp_len += hyp.len() as u64;
        ref_len += reference.len() as u64;
        for n in 1..=MAX_ORDER {
            let (matches, count) = clipped_ngram_matches(hyp, reference, n);
            pooled_matches[n - 1] += u64::from(matches);
            pooled_counts[n - 1] += u64::from(count);
        }
    }

    if n_pairs == 0 {
        return Err(BleuError::EmptyCorpus);
    }
    if pooled_matches.iter().any(|&m| m == 0) {
        return Ok(0.0);
    }

    let log_sum: f64 = pooled_matches
        .iter()
        .zip(&pooled_counts)
        .map(|(&m, &c)| (m as f64 / c as f64).ln())
        .sum();
    let bp = (1.0 - ref_len as f64 / hyp_len as f64).min(0.0).exp();
    Ok(bp * (log_sum / MAX_ORDER as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> TokenSequence {
        TokenSequence::from_text(text)
    }

    #[test]
    fn ngram_matches_identity_bigrams() {
        assert_eq!(clipped_ngram_matches(&toks("a b c"), &toks("a b c"), 2), (2, 2));
    }

    #[test]
    fn ngram_matches_clipping() {
        assert_eq!(clipped_ngram_matches(&toks("a a a"), &toks("a"), 1), (1, 3));
    }

    #[test]
    fn ngram_matches_trigram_overlap() {
        // Trigrams of hyp: abc, bcd; of ref: abc, bce. Only abc matches.
        assert_eq!(clipped_ngram_matches(&toks("a b c d"), &toks("a b c e"), 3), (1, 2));
    }

    #[test]
    fn ngram_matches_degenerate_inputs() {
        assert_eq!(clipped_ngram_matches(&toks(""), &toks("a b"), 1), (0, 0));
        assert_eq!(clipped_ngram_matches(&toks("a"), &toks("a b"), 2), (0, 0));
        assert_eq!(clipped_ngram_matches(&toks("a b"), &toks(""), 1), (0, 2));
    }

    #[test]
    fn sentence_bleu_identity() {
        let s = toks("a b c d");
        assert_eq!(smoothed_sentence_bleu(&s, &s).unwrap(), 1.0);
    }

    #[test]
    fn sentence_bleu_worked_example() {
        // p1=3/4, p2=2/3, p3=1/2, p4=0.01/1, BP=1 -> (0.0025)^(1/4) = sqrt(0.05)
        let score = smoothed_sentence_bleu(&toks("a b c d"), &toks("a b c e")).unwrap();
        assert!((score - 0.05f64.sqrt()).abs() < 1e-12);
        assert!((score - 0.2236).abs() < 1e-4);
    }

    #[test]
    fn sentence_bleu_empty_hypothesis_scores_zero() {
        assert_eq!(smoothed_sentence_bleu(&toks(""), &toks("a")).unwrap(), 0.0);
    }

    #[test]
    fn sentence_bleu_empty_reference_is_an_error() {
        assert_eq!(
            smoothed_sentence_bleu(&toks("a"), &toks("")),
            Err(BleuError::EmptyReference)
        );
    }

    #[test]
    fn sentence_bleu_brevity_penalty() {
        // hyp shorter than ref: all precisions 1 or smoothed, BP = exp(1 - 8/4)
        let b = smoothed_sentence_bleu_breakdown(&toks("a b c d"), &toks("a b c d e f g h")).unwrap();
        assert!((b.brevity_penalty - (1.0f64 - 2.0).exp()).abs() < 1e-15);
        // hyp longer: no penalty
        let b = smoothed_sentence_bleu_breakdown(&toks("a b c d e"), &toks("a b c d")).unwrap();
        assert_eq!(b.brevity_penalty, 1.0);
    }

    #[test]
    fn sentence_bleu_short_identity_is_below_one() {
        // A 1-token identity pair still pays for the missing higher orders:
        // p1=1, p2..p4 = 0.01/1 each.
        let score = smoothed_sentence_bleu(&toks("a"), &toks("a")).unwrap();
        let expected = (0.01f64 * 0.01 * 0.01).powf(0.25);
        assert!((score - expected).abs() < 1e-12);
    }

    #[test]
    fn sentence_bleu_smoothing_hits_numerator_only() {
        // 6 unigrams, none matching: p1 = 0.01/6, not 0.01/(6+offset).
        let b = smoothed_sentence_bleu_breakdown(&toks("x y z u v w"), &toks("a b c d e f")).unwrap();
        assert!((b.precisions[0] - 0.01 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn corpus_bleu_identity() {
        let s = toks("a b c d");
        assert_eq!(corpus_bleu([(&s, &s)]).unwrap(), 1.0);
    }

    #[test]
    fn corpus_bleu_pooling_preserves_perfection() {
        let s = toks("a b c d");
        let t = toks("e f g h i");
        assert_eq!(corpus_bleu([(&s, &s), (&t, &t)]).unwrap(), 1.0);
    }

    #[test]
    fn corpus_bleu_zero_fourgram_forces_zero() {
        let hyp = toks("a b c d");
        let reference = toks("a b c e");
        assert_eq!(corpus_bleu([(&hyp, &reference)]).unwrap(), 0.0);
    }

    #[test]
    fn corpus_bleu_empty_corpus_is_an_error() {
        assert_eq!(corpus_bleu([]), Err(BleuError::EmptyCorpus));
    }

    #[test]
    fn corpus_bleu_brevity_penalty_pools_lengths() {
        // Total hyp length 10 vs total ref length 12: the corpus BP is
        // exp(1 - 12/10) even though each pair matches perfectly otherwise.
        let h1 = toks("a b c d e");
        let r1 = toks("a b c d e f");
        let h2 = toks("u v w x y");
        let r2 = toks("u v w x y z");
        // Every hyp n-gram occurs in its reference, so all pooled precisions
        // are 1 and the score reduces to the brevity penalty.
        let score = corpus_bleu([(&h1, &r1), (&h2, &r2)]).unwrap();
        assert!((score - (1.0f64 - 12.0 / 10.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn token_sequence_roundtrip() {
        let s = toks("schwarz gr . xxl");
        assert_eq!(s.to_text(), "schwarz gr . xxl");
        assert_eq!(s.len(), 4);
        assert_eq!(TokenSequence::from_text(&s.to_text()), s);
    }

    #[test]
    fn breakdown_invariant_score_composition() {
        let b = smoothed_sentence_bleu_breakdown(&toks("a b c d e"), &toks("a b x d e")).unwrap();
        let geo = b.precisions.iter().map(|p| p.ln()).sum::<f64>() / 4.0;
        assert!((b.score - b.brevity_penalty * geo.exp()).abs() < 1e-12);
        for n in 0..4 {
            if b.matches[n] > 0 {
                assert_eq!(b.precisions[n], b.matches[n] as f64 / b.hyp_ngram_counts[n] as f64);
            }
        }
    }
}
