//! The linear softmax policy and its score-function gradient.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, dot, LearnerError};
use crate::env::Candidate;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use crate::float::FloatExt as _;

/// Dense weight vector of the linear policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyWeights(Vec<f64>);

impl PolicyWeights {
    pub fn new(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|w| w.is_finite())
    }
}

impl From<Vec<f64>> for PolicyWeights {
    fn from(weights: Vec<f64>) -> Self {
        Self(weights)
    }
}

/// Scores every candidate by the inner product of `weights` with its
/// feature vector.
pub fn candidate_scores(
    weights: &PolicyWeights,
    candidates: &[Candidate],
) -> Result<Vec<f64>, LearnerError> {
    candidates
        .iter()
        .map(|c| {
            check_dims(weights.dim(), c.features.len())?;
            Ok(dot(weights.as_slice(), &c.features))
        })
        .collect()
}

/// Index of the maximum score, lowest index on ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Sampling distribution over one instance's candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    probabilities: Vec<f64>,
    temperature: f64,
}

impl PolicyDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Inverse-CDF sample from the distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probabilities.len() - 1
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probabilities
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.probabilities)
    }
}

/// Numerically stable softmax of `scores / temperature` (max subtraction).
pub fn softmax_with_temperature(
    scores: &[f64],
    temperature: f64,
) -> Result<PolicyDistribution, LearnerError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(LearnerError::InvalidTemperature(temperature));
    }
    if scores.is_empty() {
        return Err(LearnerError::NoCandidates);
    }
    let max = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut probabilities: Vec<f64> = scores
        .iter()
        .map(|&s| ((s - max) / temperature).exp())
        .collect();
    let total: f64 = probabilities.iter().sum();
    for p in &mut probabilities {
        *p /= total;
    }
    Ok(PolicyDistribution {
        probabilities,
        temperature,
    })
}

/// Score-function (policy gradient) estimate of the expected-reward ascent
/// direction: `reward * (phi(sampled) - E_p[phi])`, where `p` is the
/// temperature-`temperature` softmax of the candidate scores under
/// `weights` — the same distribution the sample must have been drawn from.
pub fn el_gradient(
    weights: &PolicyWeights,
    candidates: &[Candidate],
    sampled_index: usize,
    reward: f64,
    temperature: f64,
) -> Result<Vec<f64>, LearnerError> {
    if sampled_index >= candidates.len() {
        return Err(LearnerError::IndexOutOfRange {
            index: sampled_index,
            len: candidates.len(),
        });
    }
    let scores = candidate_scores(weights, candidates)?;
    let dist = softmax_with_temperature(&scores, temperature)?;

    let dim = weights.dim();
    let mut expected = vec![0.0; dim];
    for (candidate, &p) in candidates.iter().zip(dist.probabilities()) {
        for (e, &f) in expected.iter_mut().zip(&candidate.features) {
            *e += p * f;
        }
    }
    Ok(candidates[sampled_index]
        .features
        .iter()
        .zip(&expected)
        .map(|(&f, &e)| reward * (f - e))
        .collect())
}
