//! Estimator correctness: the analytic expected policy gradient against
//! brute-force enumeration, Monte-Carlo averages, finite differences of the
//! expected reward, and the control variate's invariance/variance claims.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use bandit_core::env::Candidate;
use bandit_core::learners::{
    el_gradient, softmax_with_temperature, ucb1_select, ControlVariateState, PolicyWeights,
    UcbArmStats, UcbVariant,
};
use bandit_core::TokenSequence;

struct TestInstance {
    candidates: Vec<Candidate>,
    rewards: Vec<f64>,
}

fn random_instance(rng: &mut ChaCha12Rng, max_candidates: usize, dim: usize) -> TestInstance {
    let n = rng.random_range(2..=max_candidates);
    let candidates = (0..n)
        .map(|i| {
            let features: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            Candidate::new(TokenSequence::from_text(&format!("c{i}")), features)
        })
        .collect();
    let rewards = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    TestInstance { candidates, rewards }
}

/// Test-side objective: E_p[reward] under the softmax policy, written
/// independently of the library (own exp/normalize).
fn expected_reward(weights: &[f64], instance: &TestInstance) -> f64 {
    let scores: Vec<f64> = instance
        .candidates
        .iter()
        .map(|c| c.features.iter().zip(weights).map(|(f, w)| f * w).sum())
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter()
        .zip(&instance.rewards)
        .map(|(e, r)| e / total * r)
        .sum()
}

/// Analytic expectation of the estimator: sum_i p_i * reward_i * (phi_i - E[phi]).
fn analytic_expected_gradient(weights: &PolicyWeights, instance: &TestInstance) -> Vec<f64> {
    let scores: Vec<f64> = instance
        .candidates
        .iter()
        .map(|c| c.features.iter().zip(weights.as_slice()).map(|(f, w)| f * w).sum())
        .collect();
    let dist = softmax_with_temperature(&scores, 1.0).unwrap();
    let mut expectation = vec![0.0; weights.dim()];
    for (i, p) in dist.probabilities().iter().enumerate() {
        let g = el_gradient(weights, &instance.candidates, i, instance.rewards[i], 1.0).unwrap();
        for (e, gi) in expectation.iter_mut().zip(&g) {
            *e += p * gi;
        }
    }
    expectation
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    let dim = 4;
    let h = 1e-5;
    for _ in 0..50 {
        let instance = random_instance(&mut rng, 5, dim);
        let weights: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        let analytic = analytic_expected_gradient(&PolicyWeights::new(weights.clone()), &instance);

        let mut fd = vec![0.0; dim];
        for d in 0..dim {
            let mut plus = weights.clone();
            plus[d] += h;
            let mut minus = weights.clone();
            minus[d] -= h;
            fd[d] = (expected_reward(&plus, &instance) - expected_reward(&minus, &instance))
                / (2.0 * h);
        }

        let diff: f64 = analytic
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(
            diff <= 1e-6 * norm.max(1e-3),
            "gradient mismatch: analytic {analytic:?} vs fd {fd:?}"
        );
    }
}

#[test]
fn baseline_shift_leaves_the_expectation_unchanged() {
    // sum_i p_i (r_i - b)(phi_i - E[phi]) = sum_i p_i r_i (phi_i - E[phi])
    // because the score function has zero mean under p.
    let mut rng = ChaCha12Rng::seed_from_u64(32);
    for _ in 0..20 {
        let instance = random_instance(&mut rng, 5, 3);
        let weights = PolicyWeights::new(vec![
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        ]);
        let baseline = rng.random_range(-1.0..1.0);
        let plain = analytic_expected_gradient(&weights, &instance);
        let shifted_instance = TestInstance {
            candidates: instance.candidates.clone(),
            rewards: instance.rewards.iter().map(|r| r - baseline).collect(),
        };
        let shifted = analytic_expected_gradient(&weights, &shifted_instance);
        for (a, b) in plain.iter().zip(&shifted) {
            assert!((a - b).abs() < 1e-12, "baseline changed the expectation");
        }
    }
}

#[test]
fn monte_carlo_mean_matches_the_analytic_expectation() {
    let mut rng = ChaCha12Rng::seed_from_u64(33);
    let instance = random_instance(&mut rng, 5, 3);
    let weights = PolicyWeights::new(vec![0.2, -0.1, 0.3]);
    let scores: Vec<f64> = instance
        .candidates
        .iter()
        .map(|c| c.features.iter().zip(weights.as_slice()).map(|(f, w)| f * w).sum())
        .collect();
    let dist = softmax_with_temperature(&scores, 1.0).unwrap();
    let analytic = analytic_expected_gradient(&weights, &instance);

    let samples = 100_000;
    let mut mean = vec![0.0; 3];
    let mut m2 = vec![0.0; 3];
    for n in 1..=samples {
        let i = dist.sample(&mut rng);
        let g = el_gradient(&weights, &instance.candidates, i, instance.rewards[i], 1.0).unwrap();
        for d in 0..3 {
            let delta = g[d] - mean[d];
            mean[d] += delta / n as f64;
            m2[d] += delta * (g[d] - mean[d]);
        }
    }
    for d in 0..3 {
        let std_err = (m2[d] / (samples - 1) as f64 / samples as f64).sqrt();
        assert!(
            (mean[d] - analytic[d]).abs() <= 3.0 * std_err.max(1e-9),
            "component {d}: mc {me} vs analytic {an} (3se {se})",
            me = mean[d],
            an = analytic[d],
            se = 3.0 * std_err
        );
    }
}

#[test]
fn control_variate_reduces_gradient_variance() {
    // Paired comparison on one fixed instance with rewards in [0.4, 0.9]:
    // identical sample streams, with and without the running-mean CV.
    let mut rng = ChaCha12Rng::seed_from_u64(34);
    let candidates: Vec<Candidate> = (0..4)
        .map(|i| {
            let features: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            Candidate::new(TokenSequence::from_text(&format!("c{i}")), features)
        })
        .collect();
    let rewards = [0.4, 0.7, 0.55, 0.9];
    let weights = PolicyWeights::new(vec![0.1, 0.2, -0.1]);
    let scores: Vec<f64> = candidates
        .iter()
        .map(|c| c.features.iter().zip(weights.as_slice()).map(|(f, w)| f * w).sum())
        .collect();
    let dist = softmax_with_temperature(&scores, 1.0).unwrap();

    let samples = 100_000;
    let indices: Vec<usize> = (0..samples).map(|_| dist.sample(&mut rng)).collect();

    let variance_of = |use_cv: bool| -> Vec<f64> {
        let mut cv = ControlVariateState::new();
        let mut mean = vec![0.0; 3];
        let mut m2 = vec![0.0; 3];
        for (n, &i) in indices.iter().enumerate() {
            let reward = if use_cv { cv.adjust(rewards[i]) } else { rewards[i] };
            let g = el_gradient(&weights, &candidates, i, reward, 1.0).unwrap();
            for d in 0..3 {
                let delta = g[d] - mean[d];
                mean[d] += delta / (n + 1) as f64;
                m2[d] += delta * (g[d] - mean[d]);
            }
        }
        m2.iter().map(|v| v / (samples - 1) as f64).collect()
    };

    let without = variance_of(false);
    let with = variance_of(true);
    for d in 0..3 {
        assert!(
            with[d] < without[d],
            "component {d}: variance with CV {with:?} not below {without:?}"
        );
    }
}

#[test]
fn ucb_coverage_in_the_first_rounds() {
    for arms in [2usize, 3, 8] {
        let mut stats = UcbArmStats::new(arms);
        let mut rng = ChaCha12Rng::seed_from_u64(35);
        let mut pulled = vec![0u32; arms];
        for _ in 0..arms {
            let arm = ucb1_select(&stats, UcbVariant::Vanilla, &mut rng).unwrap();
            pulled[arm] += 1;
            stats.update(arm, rng.random_range(0.0..1.0)).unwrap();
        }
        assert!(pulled.iter().all(|&p| p == 1), "coverage broke: {pulled:?}");
    }
}
