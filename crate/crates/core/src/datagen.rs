//! Synthetic task generation with controllable domain shift, plus the
//! data-preparation filters (numeral filtering, decimal-delimiter
//! normalization, punctuation-aware tokenization).
//!
//! A generated instance is a candidate set of corruptions of a hidden base
//! sentence. Features carry a bias term and a noisy quality proxy, so both
//! policy-gradient learners and the reward regressor have signal; the
//! hidden in-domain weights decide which candidate's tokens become the
//! reference. With corruption probability `noise`, the reference is instead
//! a mutated non-best candidate (standing in for non-literal post-edits),
//! which caps the oracle reward below 1.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bleu::TokenSequence;
use crate::env::{Candidate, Instance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatagenError {
    #[error("invalid task spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible task spec: {0}")]
    Infeasible(String),
}

/// Parameters of a synthetic task.
///
/// `in_domain_weights` are the hidden truth: the candidate they score
/// highest supplies the reference. `out_domain_weights` are the seed model a
/// learner starts from; keeping the two apart is what creates the domain
/// shift the learners must close.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub vocab_size: usize,
    pub sentence_len_min: usize,
    pub sentence_len_max: usize,
    pub candidate_count: usize,
    pub feature_dim: usize,
    pub in_domain_weights: Vec<f64>,
    pub out_domain_weights: Vec<f64>,
    /// Probability that an instance's reference is corrupted away from the
    /// candidate set, in [0, 1].
    pub noise: f64,
    pub seed: u64,
    #[serde(default = "default_id_prefix")]
    pub id_prefix: String,
}

fn default_id_prefix() -> String {
    "inst".to_string()
}

/// Standard deviation of the noise on the quality-proxy feature.
const PROXY_NOISE_STD: f64 = 0.05;

impl TaskSpec {
    /// The default shifted task: 10 features, 20 candidates per instance,
    /// 20% reference corruption. The in-domain weights reward the quality
    /// proxy (feature 1); the out-of-domain seed weights score only
    /// distractor features.
    pub fn default_shifted(seed: u64) -> Self {
        Self {
            vocab_size: 40,
            sentence_len_min: 5,
            sentence_len_max: 12,
            candidate_count: 20,
            feature_dim: 10,
            in_domain_weights: alloc::vec![0.0, 2.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            out_domain_weights: alloc::vec![0.2, 0.0, 0.7, -0.5, 0.4, 0.1, -0.3, 0.6, -0.2, 0.3],
            noise: 0.2,
            seed,
            id_prefix: default_id_prefix(),
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_id_prefix(mut self, prefix: &str) -> Self {
        self.id_prefix = prefix.to_string();
        self
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.vocab_size < 2 {
            return Err(DatagenError::InvalidSpec("vocab_size must be at least 2".into()));
        }
        if self.sentence_len_min == 0 || self.sentence_len_min > self.sentence_len_max {
            return Err(DatagenError::InvalidSpec(
                "sentence length range must satisfy 1 <= min <= max".into(),
            ));
        }
        if self.candidate_count == 0 {
            return Err(DatagenError::InvalidSpec("candidate_count must be at least 1".into()));
        }
        if self.feature_dim < 2 {
            return Err(DatagenError::InvalidSpec(
                "feature_dim must be at least 2 (bias + quality proxy)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(DatagenError::InvalidSpec("noise must lie in [0, 1]".into()));
        }
        for (name, w) in [
            ("in_domain_weights", &self.in_domain_weights),
            ("out_domain_weights", &self.out_domain_weights),
        ] {
            if w.len() != self.feature_dim {
                return Err(DatagenError::InvalidSpec(format!(
                    "{name} has dimension {}, expected feature_dim {}",
                    w.len(),
                    self.feature_dim
                )));
            }
        }
        // There must be enough distinct sequences of the minimum length to
        // fill a candidate set.
        let mut capacity = 1u64;
        for _ in 0..self.sentence_len_min {
            capacity = capacity.saturating_mul(self.vocab_size as u64);
            if capacity >= self.candidate_count as u64 {
                break;
            }
        }
        if capacity < self.candidate_count as u64 {
            return Err(DatagenError::Infeasible(format!(
                "candidate_count {} exceeds the {} distinct sequences of length {}",
                self.candidate_count, capacity, self.sentence_len_min
            )));
        }
        Ok(())
    }
}

/// Generates `count` instances, deterministically in `spec.seed`. Each
/// instance draws from its own derived RNG stream, so generation is
/// parallelizable by index without changing the output.
pub fn generate_task(spec: &TaskSpec, count: usize) -> Result<Vec<Instance>, DatagenError> {
    spec.validate()?;
    if count == 0 {
        return Err(DatagenError::InvalidSpec("count must be at least 1".into()));
    }
    (0..count).map(|index| generate_instance(spec, index)).collect()
}

fn instance_rng(seed: u64, index: usize) -> ChaCha12Rng {
    // Per-index stream: splitmix-style mixing of the index into the seed.
    let mixed = seed ^ (index as u64)
        .wrapping_add(1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha12Rng::seed_from_u64(mixed)
}

fn generate_instance(spec: &TaskSpec, index: usize) -> Result<Instance, DatagenError> {
    let mut rng = instance_rng(spec.seed, index);
    let len = rng.random_range(spec.sentence_len_min..=spec.sentence_len_max);
    let base: Vec<String> = (0..len)
        .map(|_| format!("v{}", rng.random_range(0..spec.vocab_size)))
        .collect();

    // Corruption levels spread over 0 .. len (exclusive), assigned to
    // shuffled candidate positions so the best candidate's slot varies.
    let m = spec.candidate_count;
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);

    let mut candidates = Vec::with_capacity(m);
    for &rank in &order {
        let level = rank * len / m;
        let tokens = corrupt(&base, level, spec.vocab_size, &mut rng);
        let quality = 1.0 - level as f64 / len as f64;
        let mut features = Vec::with_capacity(spec.feature_dim);
        features.push(1.0);
        let jitter: f64 = rng.sample(StandardNormal);
        features.push((quality + PROXY_NOISE_STD * jitter).clamp(0.0, 1.0));
        for _ in 2..spec.feature_dim {
            features.push(rng.random_range(-1.0..1.0));
        }
        candidates.push(Candidate::new(TokenSequence::new(tokens), features));
    }

    let best = {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, candidate) in candidates.iter().enumerate() {
            let score: f64 = candidate
                .features
                .iter()
                .zip(&spec.in_domain_weights)
                .map(|(f, w)| f * w)
                .sum();
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        best
    };

    let corrupt_reference = rng.random::<f64>() < spec.noise && m >= 2;
    let reference = if corrupt_reference {
        // A non-best candidate, mutated with tokens from a disjoint
        // namespace: the result matches no candidate exactly, so the oracle
        // reward drops below 1.
        let mut donor = rng.random_range(0..m - 1);
        if donor >= best {
            donor += 1;
        }
        let mut tokens = candidates[donor].tokens.tokens().to_vec();
        let mutations = len.div_ceil(4);
        let mut positions: Vec<usize> = (0..len).collect();
        positions.shuffle(&mut rng);
        for &pos in positions.iter().take(mutations) {
            tokens[pos] = format!("z{}", rng.random_range(0..spec.vocab_size));
        }
        TokenSequence::new(tokens)
    } else {
        candidates[best].tokens.clone()
    };

    let source: Vec<String> = base.iter().map(|t| t.replacen('v', "s", 1)).collect();
    Instance::new(
        format!("{}-{index:06}", spec.id_prefix),
        TokenSequence::new(source),
        reference,
        candidates,
        false,
    )
    .map_err(|e| DatagenError::InvalidSpec(format!("generated instance violates invariants: {e}")))
}

fn corrupt(base: &[String], level: usize, vocab: usize, rng: &mut ChaCha12Rng) -> Vec<String> {
    let mut tokens = base.to_vec();
    if level == 0 {
        return tokens;
    }
    let mut positions: Vec<usize> = (0..base.len()).collect();
    positions.shuffle(rng);
    for &pos in positions.iter().take(level) {
        tokens[pos] = format!("v{}", rng.random_range(0..vocab));
    }
    tokens
}

/// True if the token is a numeral: entirely ASCII digits with at most one
/// internal decimal period. Alphanumerics like `1050d` are not numerals.
pub fn is_numeral(token: &str) -> bool {
    let bytes = token.as_bytes();
    if bytes.is_empty() {
        return false;
    }
    let mut digits = 0usize;
    let mut periods = 0usize;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'0'..=b'9' => digits += 1,
            b'.' => {
                periods += 1;
                if i == 0 || i + 1 == bytes.len() {
                    return false;
                }
            }
            _ => return false,
        }
    }
    digits > 0 && periods <= 1
}

/// Keep filter for sources: drops any sentence containing two or more
/// numeral tokens (whitespace-separated numerals), which are dominated by
/// product numbers and sizes that inflate the OOV rate.
pub fn numeral_filter(source: &TokenSequence) -> bool {
    source.tokens().iter().filter(|t| is_numeral(t)).count() < 2
}

/// Rewrites every comma standing between two digits to a period; all other
/// commas are untouched.
pub fn normalize_decimal_delimiters(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        let decimal_comma = c == ','
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && i + 1 < chars.len()
            && chars[i + 1].is_ascii_digit();
        out.push(if decimal_comma { '.' } else { c });
    }
    out
}

/// ASCII replacements for common unicode punctuation. Anything not listed
/// passes through unchanged.
fn normalize_punct(c: char) -> Option<&'static str> {
    Some(match c {
        '\u{00A0}' | '\u{2002}' | '\u{2003}' | '\u{2009}' | '\u{202F}' => " ",
        '\u{201E}' | '\u{201C}' | '\u{201D}' | '\u{00AB}' | '\u{00BB}' | '\u{201F}' => "\"",
        '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{00B4}' | '`' | '\u{02BC}' => "'",
        '\u{2013}' | '\u{2014}' | '\u{2015}' | '\u{2010}' | '\u{2011}' | '\u{2212}' => "-",
        '\u{2026}' => "...",
        _ => return None,
    })
}

/// Full text preparation: unicode punctuation normalized to ASCII,
/// lowercased, whitespace-tokenized with punctuation split into separate
/// tokens. A period between two digits stays inside its token so numerals
/// like `1.5` survive as single tokens. Idempotent.
pub fn preprocess(text: &str) -> TokenSequence {
    let mut normalized = String::with_capacity(text.len());
    for c in text.chars() {
        match normalize_punct(c) {
            Some(replacement) => normalized.push_str(replacement),
            None => normalized.extend(c.to_lowercase()),
        }
    }

    let mut tokens: Vec<String> = Vec::new();
    for chunk in normalized.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let decimal_period = c == '.'
                && i > 0
                && chars[i - 1].is_ascii_digit()
                && i + 1 < chars.len()
                && chars[i + 1].is_ascii_digit();
            if c.is_alphanumeric() || decimal_period {
                current.push(c);
            } else {
                if !current.is_empty() {
                    tokens.push(core::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    TokenSequence::new(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeral_filter_examples() {
        let drop = TokenSequence::from_text("2 x 4 stück");
        assert!(!numeral_filter(&drop));
        let keep = TokenSequence::from_text("147 cm");
        assert!(numeral_filter(&keep));
        let keep = TokenSequence::from_text("32 unzen volumen");
        assert!(numeral_filter(&keep));
    }

    #[test]
    fn numeral_definition() {
        assert!(is_numeral("147"));
        assert!(is_numeral("1.5"));
        assert!(!is_numeral("1050d"));
        assert!(!is_numeral("1.2.3"));
        assert!(!is_numeral(".5"));
        assert!(!is_numeral("5."));
        assert!(!is_numeral(""));
        assert!(!is_numeral("."));
    }

    #[test]
    fn decimal_delimiters() {
        assert_eq!(normalize_decimal_delimiters("1,5"), "1.5");
        assert_eq!(normalize_decimal_delimiters("a, b"), "a, b");
        assert_eq!(normalize_decimal_delimiters("1,5 und 2,75"), "1.5 und 2.75");
        assert_eq!(normalize_decimal_delimiters("10,"), "10,");
        assert_eq!(normalize_decimal_delimiters(",5"), ",5");
    }

    #[test]
    fn decimal_normalization_is_idempotent() {
        let once = normalize_decimal_delimiters("9,99 € , 1,0");
        assert_eq!(normalize_decimal_delimiters(&once), once);
    }

    #[test]
    fn preprocess_splits_punctuation() {
        let tokens = preprocess("Schwarz Gr.XXL");
        assert_eq!(tokens, TokenSequence::from_text("schwarz gr . xxl"));
    }

    #[test]
    fn preprocess_keeps_decimals_whole() {
        assert_eq!(preprocess("ca. 1.5 m"), TokenSequence::from_text("ca . 1.5 m"));
    }

    #[test]
    fn preprocess_normalizes_unicode_punctuation() {
        assert_eq!(
            preprocess("„tolle“ Qualität – 30 °C"),
            TokenSequence::from_text("\" tolle \" qualität - 30 ° c")
        );
    }

    #[test]
    fn preprocess_is_idempotent() {
        for text in ["Schwarz Gr.XXL", "maschinenwaschbar bei 30 ° c", "1,5", "(a) – b…"] {
            let once = preprocess(text);
            let twice = preprocess(&once.to_text());
            assert_eq!(once, twice, "not idempotent for {text:?}");
        }
    }

    #[test]
    fn preprocess_empty_input() {
        assert_eq!(preprocess(""), TokenSequence::new(alloc::vec![]));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = TaskSpec::default_shifted(42);
        let a = generate_task(&spec, 20).unwrap();
        let b = generate_task(&spec, 20).unwrap();
        assert_eq!(a, b);
        let c = generate_task(&TaskSpec::default_shifted(43), 20).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_noise_makes_every_oracle_perfect() {
        let spec = TaskSpec::default_shifted(7).with_noise(0.0);
        for instance in generate_task(&spec, 50).unwrap() {
            assert_eq!(instance.oracle_reward, 1.0, "instance {}", instance.id);
        }
    }

    #[test]
    fn separability_under_the_in_domain_weights() {
        // The argmax candidate under w_in is the reference itself when
        // noise is 0, so w_in attains reward 1.0 on every instance.
        let spec = TaskSpec::default_shifted(19).with_noise(0.0);
        let instances = generate_task(&spec, 30).unwrap();
        let w_in = crate::learners::PolicyWeights::new(spec.in_domain_weights.clone());
        for instance in &instances {
            let idx = crate::learners::static_policy(&w_in, &instance.candidates).unwrap();
            let reward = crate::bleu::smoothed_sentence_bleu(
                &instance.candidates[idx].tokens,
                &instance.reference,
            )
            .unwrap();
            assert_eq!(reward, 1.0);
        }
    }

    #[test]
    fn corrupted_references_leave_the_candidate_set() {
        let spec = TaskSpec::default_shifted(3).with_noise(1.0);
        for instance in generate_task(&spec, 30).unwrap() {
            assert!(instance.oracle_reward < 1.0);
            for candidate in &instance.candidates {
                assert_ne!(candidate.tokens, instance.reference);
            }
        }
    }

    #[test]
    fn features_stay_in_range() {
        let spec = TaskSpec::default_shifted(5);
        for instance in generate_task(&spec, 20).unwrap() {
            for candidate in &instance.candidates {
                assert_eq!(candidate.features.len(), spec.feature_dim);
                assert!(candidate.features.iter().all(|f| (-1.0..=1.0).contains(f)));
                assert_eq!(candidate.features[0], 1.0);
            }
        }
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let mut spec = TaskSpec::default_shifted(1);
        spec.vocab_size = 2;
        spec.sentence_len_min = 1;
        spec.sentence_len_max = 1;
        spec.candidate_count = 10;
        assert!(matches!(
            generate_task(&spec, 1).unwrap_err(),
            DatagenError::Infeasible(_)
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = TaskSpec::default_shifted(1);
        spec.noise = 1.5;
        assert!(matches!(spec.validate().unwrap_err(), DatagenError::InvalidSpec(_)));
        let mut spec = TaskSpec::default_shifted(1);
        spec.in_domain_weights.pop();
        assert!(spec.validate().is_err());
        assert!(matches!(
            generate_task(&TaskSpec::default_shifted(1), 0).unwrap_err(),
            DatagenError::InvalidSpec(_)
        ));
    }
}
