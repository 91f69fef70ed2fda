//! Generator-level checks that need real volumes: noise-rate accounting and
//! instance invariants over a large sample.

use bandit_core::bleu::smoothed_sentence_bleu;
use bandit_core::datagen::{generate_task, TaskSpec};

#[test]
fn noise_rate_matches_the_coin_flips() {
    // With noise 0.5, the fraction of instances whose oracle reward is
    // below 1 tracks the generator's own corruption coin.
    let spec = TaskSpec::default_shifted(42).with_noise(0.5);
    let instances = generate_task(&spec, 10_000).unwrap();
    let corrupted = instances
        .iter()
        .filter(|i| i.oracle_reward < 1.0)
        .count();
    let fraction = corrupted as f64 / instances.len() as f64;
    assert!(
        (fraction - 0.5).abs() <= 0.02,
        "corrupted fraction {fraction}"
    );
}

#[test]
fn stored_oracle_reward_matches_recomputation() {
    let spec = TaskSpec::default_shifted(8);
    for instance in generate_task(&spec, 300).unwrap() {
        let recomputed = instance
            .candidates
            .iter()
            .map(|c| smoothed_sentence_bleu(&c.tokens, &instance.reference).unwrap())
            .fold(0.0f64, f64::max);
        assert!(
            (instance.oracle_reward - recomputed).abs() < 1e-12,
            "instance {}",
            instance.id
        );
    }
}

#[test]
fn ids_are_unique_and_prefixed() {
    let spec = TaskSpec::default_shifted(1).with_id_prefix("train");
    let instances = generate_task(&spec, 500).unwrap();
    let mut ids: Vec<&str> = instances.iter().map(|i| i.id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), instances.len());
    assert!(ids.iter().all(|id| id.starts_with("train-")));
}
